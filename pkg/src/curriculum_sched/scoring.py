"""Per-sample curriculum scores and the probabilities derived from them.

Higher score means higher priority: presented earlier, kept in early subsets,
weighted more. Class indices are 0-based throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ConfigError, DataError

#: Relative floor added before normalisation so zero scores stay sampleable.
PROB_FLOOR = 1e-8

SCORE_KINDS = ("prior", "uncertainty", "random", "anti", "uniform")


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    epoch: int = 0
    kind: str = "prior"

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DataError("scores must be a non-empty 1-D array")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DataError("scores must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.kind not in SCORE_KINDS:
            raise ConfigError(f"unknown score kind {self.kind!r}")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class UncertaintyConfig:
    passes: int = 10
    keep_prob: float = 0.7
    refresh_every: int = 1
    batch_size: int = 1024

    def __post_init__(self):
        if self.passes < 1:
            raise ConfigError("need at least one MC pass")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError("keep_prob must be in (0, 1]")
        if self.refresh_every < 1:
            raise ConfigError("refresh_every must be >= 1")


def prior_scores(class_weights, labels) -> ScoreVector:
    """Look up each sample's class weight.

    Negative class weights are shifted up by ``-min(w)`` so the smallest
    becomes zero; order is unchanged.
    """
    w = np.asarray(class_weights, dtype=np.float64)
    labels = np.asarray(labels)
    if w.ndim != 1 or not np.all(np.isfinite(w)):
        raise DataError("class weights must be a finite 1-D vector")
    if labels.size and (labels.min() < 0 or labels.max() >= w.size):
        raise DataError(f"labels must lie in [0, {w.size - 1}]")
    if np.all(w == w[0]):
        warnings.warn("all class weights are equal; prior curriculum is uniform", stacklevel=2)
    if w.min() < 0:
        w = w - w.min()
    return ScoreVector(w[labels], epoch=0, kind="prior")


def ranks_from_f1(f1) -> np.ndarray:
    """Rank classes 1..T by F1; the best class gets T.

    Ties are ordered by ascending class index, so the lower index of a tied
    pair receives the lower rank.
    """
    f1 = np.asarray(f1, dtype=np.float64)
    order = np.lexsort((np.arange(f1.size), f1))
    ranks = np.empty(f1.size, dtype=np.int64)
    ranks[order] = np.arange(1, f1.size + 1)
    return ranks


def bootstrap_prior_from_f1(train, validation, config: nn.TrainConfig, epochs: int = 5,
                            hidden=(256,), seed=None) -> np.ndarray:
    """Train a throwaway classifier briefly and rank classes by validation F1.

    The classifier is discarded; only the class ranks are returned.
    """
    from .experiments.metrics import evaluate  # local: metrics imports nn only

    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    t = train.n_classes
    if np.any(np.bincount(train.labels, minlength=t) == 0):
        raise DataError("every class needs at least one training sample")
    if np.any(np.bincount(validation.labels, minlength=t) == 0):
        raise DataError("a class is absent from the validation split")

    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    params = nn.init_params((train.n_features, *hidden, t), seed=int(rng.integers(2**32)))
    dropout = nn.DropoutConfig(config.keep_prob, "train")
    ones = np.ones(len(train))
    for epoch in range(epochs):
        order = rng.permutation(len(train))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            _, g = nn.loss_and_gradients(params, train.features[idx], train.labels[idx],
                                         ones[idx], dropout, rng)
            nn.optimizer_step(params, g, config, epoch)
    return ranks_from_f1(evaluate(params, validation).f1)


def mc_predict(params, x, cfg: UncertaintyConfig, rng) -> np.ndarray:
    """Mean softmax output over ``cfg.passes`` dropout-perturbed forward passes.

    Accepts one sample or a batch; only the output layer is re-evaluated per
    pass since dropout sits on the penultimate activations.
    """
    single = np.ndim(x) == 1
    hidden = nn.penultimate(params, x)
    dropout = nn.DropoutConfig(cfg.keep_prob, "mc")
    acc = np.zeros((hidden.shape[0], params.n_classes))
    for _ in range(cfg.passes):
        acc += nn.output_probs(params, hidden, dropout, rng)
    acc /= cfg.passes
    return acc[0] if single else acc


def predictive_entropy(probs) -> np.ndarray | float:
    """Shannon entropy (nats) of a probability vector or of each row of a matrix."""
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p < 0):
        raise DataError("probabilities must be non-negative")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-6):
        raise DataError("probabilities must sum to 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    h = np.maximum(-terms.sum(axis=-1), 0.0)
    return float(h) if h.ndim == 0 else h


def uncertainty_scores(params, features, cfg: UncertaintyConfig, rng, epoch: int) -> ScoreVector:
    """Predictive entropy of the MC-averaged output for every sample."""
    features = np.asarray(features)
    out = np.empty(features.shape[0])
    for start in range(0, features.shape[0], cfg.batch_size):
        chunk = features[start:start + cfg.batch_size]
        out[start:start + len(chunk)] = predictive_entropy(mc_predict(params, chunk, cfg, rng))
    return ScoreVector(out, epoch=epoch, kind="uncertainty")


def to_probabilities(scores) -> np.ndarray:
    """L1-normalise scores after adding a floor of ``PROB_FLOOR * max(s)``.

    The floor is relative, which keeps the result invariant to rescaling the
    scores. All-zero scores give the uniform distribution with a warning.
    """
    s = np.asarray(getattr(scores, "values", scores), dtype=np.float64)
    top = s.max()
    if top <= 0:
        warnings.warn("all curriculum scores are zero; using uniform probabilities", stacklevel=2)
        return np.full(s.size, 1.0 / s.size)
    q = s / top + PROB_FLOOR
    return q / q.sum()


def anti_curriculum(scores: ScoreVector) -> ScoreVector:
    """Reflect scores about their midrange, reversing the order."""
    v = scores.values
    return ScoreVector(v.max() + v.min() - v, epoch=scores.epoch, kind="anti")


def random_scores(n: int, rng) -> ScoreVector:
    """I.i.d. uniform draws on (0, 1]."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    return ScoreVector(1.0 - rng.random(n), epoch=0, kind="random")
