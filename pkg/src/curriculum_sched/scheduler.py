"""Turn curriculum probabilities into per-epoch sample plans.

Four mechanisms are supported:

* ``baseline`` - uniform shuffle of the full set, unit weights.
* ``reorder``  - probability-weighted permutation of the full set.
* ``subsets``  - the first ``pacing_size(e)`` entries of that permutation,
  with selection counters and exponential score decay.
* ``weights``  - uniform shuffle, loss weights from per-batch normalised
  probabilities.

Epochs are numbered from 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scoring import to_probabilities

MECHANISMS = ("baseline", "reorder", "subsets", "weights")
ORDERINGS = ("curriculum", "anti", "random")


@dataclass(frozen=True)
class StrategyKind:
    mechanism: str = "baseline"
    ordering: str = "curriculum"

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {self.mechanism!r}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"unknown ordering {self.ordering!r}")
        if self.mechanism == "baseline":
            object.__setattr__(self, "ordering", "curriculum")

    @property
    def label(self) -> str:
        if self.mechanism == "baseline":
            return "baseline"
        return f"{self.mechanism}-{self.ordering}"

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        """Parse ``"baseline"`` or ``"<mechanism>-<ordering>"``."""
        if text == "baseline":
            return cls()
        mechanism, _, ordering = text.partition("-")
        return cls(mechanism, ordering or "curriculum")


@dataclass(frozen=True)
class PacingConfig:
    """Staircase growth from ``initial`` samples to ``total`` over ``warmup`` epochs.

    ``initial`` may be a count (int) or a fraction of ``total`` (float in (0, 1]).
    """

    total: int
    initial: float = 0.25
    warmup: int = 10

    def __post_init__(self):
        if self.total < 1:
            raise ConfigError("total must be >= 1")
        if self.warmup < 1:
            raise ConfigError("warmup must be >= 1")
        if not 1 <= self.initial_size <= self.total:
            raise ConfigError(f"initial subset size must be in [1, {self.total}]")

    @property
    def initial_size(self) -> int:
        if isinstance(self.initial, float) and self.initial <= 1.0:
            return round_half_up(self.initial * self.total)
        return int(self.initial)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class CurriculumState:
    """Mutable scheduler state owned by one training run."""

    scores: np.ndarray
    probs: np.ndarray = None
    counters: np.ndarray = None
    epoch: int = 0

    def __post_init__(self):
        self.scores = np.array(getattr(self.scores, "values", self.scores), dtype=np.float64)
        if self.probs is None:
            self.probs = to_probabilities(self.scores)
        if self.counters is None:
            self.counters = np.zeros(self.scores.size, dtype=np.int64)

    def __len__(self):
        return self.scores.size

    def set_scores(self, scores, decay_constant=None):
        """Replace the scores, optionally re-applying the counter decay, and renormalise."""
        s = np.array(getattr(scores, "values", scores), dtype=np.float64)
        if s.shape != self.scores.shape:
            raise ConfigError("score vector length changed")
        if decay_constant is not None:
            s = decay_scores(s, self.counters, decay_constant)
        self.scores = s
        self.probs = to_probabilities(s)


@dataclass
class EpochPlan:
    indices: np.ndarray
    weights: np.ndarray
    batch_size: int
    epoch: int

    @property
    def subset_size(self) -> int:
        return int(self.indices.size)


def sample_permutation(probs, rng) -> np.ndarray:
    """Weighted sampling without replacement of every index.

    Each item gets key ``Exp(1) / p_i``; sorting keys ascending yields the
    same law as repeatedly drawing from the renormalised remaining mass.
    """
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore"):
        keys = rng.standard_exponential(p.size) / p
    return np.argsort(keys, kind="stable")


def pacing_size(epoch: int, cfg: PacingConfig) -> int:
    n, n0 = cfg.total, cfg.initial_size
    if epoch >= cfg.warmup:
        return n
    delta = (n - n0) / cfg.warmup
    return min(max(round_half_up(n0 + epoch * delta), 1), n)


def decay_scores(scores, counters, constant: float = 10.0) -> np.ndarray:
    """``s * exp(-tau**2 / constant)``."""
    counters = np.asarray(counters, dtype=np.float64)
    return np.asarray(scores, dtype=np.float64) * np.exp(-counters**2 / constant)


def batch_weights(probs, indices) -> np.ndarray:
    """Probabilities of ``indices`` divided by their maximum."""
    p = np.asarray(probs, dtype=np.float64)[np.asarray(indices)]
    return p / p.max()


def plan_epoch(state: CurriculumState, strategy: StrategyKind, pacing: PacingConfig | None,
               batch_size: int, rng, *, decay_constant: float = 10.0,
               decay_in_reorder: bool = False) -> EpochPlan:
    """Build the plan for epoch ``state.epoch + 1`` and advance ``state``.

    The ordering (curriculum / anti / random) must already be folded into
    ``state.scores``; this function only consumes probabilities.
    """
    if not np.allclose(state.probs, to_probabilities(state.scores), rtol=1e-9, atol=0):
        raise RuntimeError("curriculum probabilities are stale")
    n = len(state)
    epoch = state.epoch + 1
    mech = strategy.mechanism

    if mech in ("baseline", "weights"):
        # uniform keys: same law as a shuffle, same rng use as reorder
        indices = sample_permutation(np.full(n, 1.0 / n), rng)
    else:
        indices = sample_permutation(state.probs, rng)

    if mech == "weights":
        weights = np.empty(n)
        for start in range(0, n, batch_size):
            chunk = indices[start:start + batch_size]
            weights[start:start + chunk.size] = batch_weights(state.probs, chunk)
    else:
        weights = np.ones(n)

    if mech == "subsets":
        if pacing is None:
            raise ConfigError("subsets strategy requires a pacing config")
        size = pacing_size(epoch, pacing)
        indices, weights = indices[:size], weights[:size]

    if mech == "subsets" or (mech == "reorder" and decay_in_reorder):
        state.counters[indices] += 1
        s = decay_scores(state.scores, state.counters, decay_constant)
        top = s.max()
        # rescale so repeated decay cannot underflow; probabilities are scale-free
        state.scores = s / top if top > 0 else s
        state.probs = to_probabilities(state.scores)

    state.epoch = epoch
    return EpochPlan(indices=indices, weights=weights, batch_size=batch_size, epoch=epoch)


def make_batches(plan: EpochPlan) -> list:
    """Consecutive ``(indices, weights)`` chunks; the last may be short."""
    b = plan.batch_size
    return [(plan.indices[i:i + b], plan.weights[i:i + b])
            for i in range(0, plan.indices.size, b)]
