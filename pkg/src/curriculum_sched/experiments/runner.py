"""Full training runs: data preparation, the per-epoch schedule loop, repetition."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import data as D
from .. import nn
from ..errors import HarnessError, NumericError
from ..scheduler import CurriculumState, PacingConfig, make_batches, plan_epoch
from ..scoring import (ScoreVector, anti_curriculum, bootstrap_prior_from_f1, prior_scores,
                       random_scores, uncertainty_scores)
from .config import PRIOR_FIXTURES, ExperimentConfig, derive_seed
from .metrics import Metrics, evaluate

log = logging.getLogger(__name__)

_DATA_CACHE: dict = {}
_PRIOR_CACHE: dict = {}


@dataclass
class RunResult:
    seed: int
    config_hash: str
    history: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    test: Metrics | None = None
    validation: Metrics | None = None
    class_weights: tuple | None = None
    wall_clock: float = 0.0
    failed: bool = False
    failure_epoch: int | None = None
    failure: str | None = None


def _find_idx(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        if (directory / name).exists():
            return directory / name
    raise FileNotFoundError(f"{stem}[.gz] not found in {directory}")


def _base_splits(config: ExperimentConfig):
    seed = derive_seed(config.data_seed, "data")
    if config.data_source == "mnist5k":
        return D.split(D.load_mnist_5k(), (0.7, 0.1, 0.2), seed, stratify=True)
    if config.data_source == "synth":
        blobs = D.synth_blobs(10, 300, 20, 4.0, seed)
        return D.split(blobs, (0.7, 0.1, 0.2), seed, stratify=True)
    root = Path(config.mnist_dir)
    full = D.load_mnist_idx(_find_idx(root, "train-images-idx3-ubyte"),
                            _find_idx(root, "train-labels-idx1-ubyte"))
    train, val = D.mnist_canonical_split(full)
    test = D.load_mnist_idx(_find_idx(root, "t10k-images-idx3-ubyte"),
                            _find_idx(root, "t10k-labels-idx1-ubyte"), split="test")
    return train, val, test


def prepare_data(config: ExperimentConfig):
    """``(train, validation, test)`` for the configured scenario.

    Transforms run in a fixed order: size cap, fraction subsample, class
    imbalance, label corruption. Only the training split is altered.
    """
    key = config.data_key()
    if key in _DATA_CACHE:
        return _DATA_CACHE[key]
    train, val, test = _base_splits(config)
    spec = config.scenario_spec
    seed = derive_seed(config.data_seed, "data")
    if config.max_train and len(train) > config.max_train:
        train = D.subsample_fraction(train, config.max_train / len(train), seed)
    if spec.fraction < 1.0:
        train = D.subsample_fraction(train, spec.fraction, seed + 1)
    if spec.minority:
        train = D.induce_imbalance(train, spec.minority, spec.minority_keep, seed + 2)
    if spec.noise > 0:
        train = D.corrupt_labels(train, spec.noise, seed + 3)
    _DATA_CACHE[key] = (train, val, test)
    return train, val, test


def class_priorities(config: ExperimentConfig, train, val) -> np.ndarray:
    if config.prior_source == "explicit":
        return np.asarray(config.prior_weights, dtype=np.float64)
    if config.prior_source == "fixture":
        return np.asarray(PRIOR_FIXTURES[config.scenario_spec.prior_fixture], dtype=np.float64)
    key = (config.data_key(), config.train, config.hidden, config.bootstrap_epochs)
    if key not in _PRIOR_CACHE:
        _PRIOR_CACHE[key] = bootstrap_prior_from_f1(
            train, val, config.train, config.bootstrap_epochs, config.hidden,
            seed=derive_seed(config.data_seed, "bootstrap")).astype(np.float64)
    return _PRIOR_CACHE[key]


def _static_scores(config, train, val, rngs):
    mech, ordering = config.strategy.mechanism, config.strategy.ordering
    n = len(train)
    if mech == "baseline":
        return ScoreVector(np.ones(n), kind="uniform"), None
    if ordering == "random":
        return random_scores(n, rngs["random_scores"]), None
    if config.scoring == "uncertainty":
        return ScoreVector(np.ones(n), kind="uniform"), None
    weights = class_priorities(config, train, val)
    scores = prior_scores(weights, train.labels)
    return (anti_curriculum(scores) if ordering == "anti" else scores), tuple(weights)


def _uses_uncertainty(config) -> bool:
    return (config.scoring == "uncertainty" and config.strategy.mechanism != "baseline"
            and config.strategy.ordering != "random")


def run_training(config: ExperimentConfig, seed: int, datasets=None) -> RunResult:
    """Train one model under ``config`` and report best-validation test metrics."""
    t0 = time.perf_counter()
    train, val, test = datasets or prepare_data(config)
    tc = config.train
    rngs = {s: np.random.default_rng(derive_seed(seed, s))
            for s in ("dropout", "schedule", "mc", "random_scores")}
    params = nn.init_params((train.n_features, *config.hidden, train.n_classes),
                            seed=derive_seed(seed, "init"))
    result = RunResult(seed=seed, config_hash=config.config_hash())

    scores, weights = _static_scores(config, train, val, rngs)
    result.class_weights = weights
    state = CurriculumState(scores)
    pacing = PacingConfig(total=len(train), initial=config.pacing_initial, warmup=config.pacing_warmup)
    dropout = nn.DropoutConfig(tc.keep_prob, "train")
    decays = config.strategy.mechanism == "subsets" or (
        config.strategy.mechanism == "reorder" and config.decay_in_reorder)
    corrupted = train.corrupted

    best_err, best_params = np.inf, params.copy()
    epoch = 0
    try:
        for epoch in range(1, tc.epochs + 1):
            if _uses_uncertainty(config) and (epoch - 1) % config.uncertainty.refresh_every == 0:
                sv = uncertainty_scores(params, train.features, config.uncertainty, rngs["mc"], epoch)
                if config.strategy.ordering == "anti":
                    sv = anti_curriculum(sv)
                state.set_scores(sv, config.decay_constant if decays else None)
            plan = plan_epoch(state, config.strategy, pacing, tc.batch_size, rngs["schedule"],
                              decay_constant=config.decay_constant,
                              decay_in_reorder=config.decay_in_reorder)
            total = 0.0
            for idx, w in make_batches(plan):
                loss, grads = nn.loss_and_gradients(params, train.features[idx], train.labels[idx],
                                                    w, dropout, rngs["dropout"])
                nn.optimizer_step(params, grads, tc, epoch - 1)
                total += loss * idx.size
            val_metrics = evaluate(params, val)
            sel = corrupted[plan.indices]
            result.history.append({
                "epoch": epoch,
                "subset_size": plan.subset_size,
                "train_loss": total / plan.subset_size,
                "val_error": val_metrics.error,
                "weight_clean": float(plan.weights[~sel].mean()) if (~sel).any() else float("nan"),
                "weight_corrupted": float(plan.weights[sel].mean()) if sel.any() else float("nan"),
            })
            if val_metrics.error < best_err:
                best_err, best_params = val_metrics.error, params.copy()
                result.best_epoch, result.validation = epoch, val_metrics
            if epoch - result.best_epoch >= tc.patience:
                break
    except NumericError as exc:
        result.failed, result.failure_epoch, result.failure = True, epoch, str(exc)
        log.warning("run seed=%s failed at epoch %s: %s", seed, epoch, exc)

    result.stopped_epoch = epoch
    if not result.failed:
        result.test = evaluate(best_params, test)
    result.wall_clock = time.perf_counter() - t0
    return result


@dataclass
class Aggregate:
    config: ExperimentConfig
    results: list
    stats: dict

    @property
    def successful(self) -> list:
        return [r for r in self.results if not r.failed]

    @property
    def failures(self) -> list:
        return [r for r in self.results if r.failed]

    def values(self, metric: str = "error") -> np.ndarray:
        return np.array([getattr(r.test, metric) for r in self.successful])


def summarize(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    return {"mean": float(v.mean()), "median": float(np.median(v)),
            "std": float(v.std(ddof=1)) if v.size > 1 else 0.0, "n": int(v.size)}


def repeat_runs(config: ExperimentConfig, seeds=None, datasets=None) -> Aggregate:
    """One run per seed; mean/median/std of test error and macro-F1 over successes."""
    seeds = config.seeds if seeds is None else seeds
    datasets = datasets or prepare_data(config)
    results = [run_training(config, s, datasets) for s in seeds]
    ok = [r for r in results if not r.failed]
    if not ok:
        raise HarnessError(f"all {len(results)} runs failed for {config.strategy.label}")
    stats = {m: summarize([getattr(r.test, m) for r in ok]) for m in ("error", "macro_f1")}
    return Aggregate(config=config, results=results, stats=stats)
