"""Dense classifier with dropout, weighted cross-entropy and hand-written backprop.

Weight matrices are stored as ``(fan_in, fan_out)`` so a batch ``X`` of shape
``(n, fan_in)`` maps to ``X @ W + b``. Hidden layers use ReLU; dropout is applied
to the activations feeding the output layer only. All arithmetic is float64.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, NumericError

#: Lower clamp applied to probabilities before taking logs in the loss.
LOG_FLOOR = 1e-12

DROPOUT_MODES = ("train", "mc", "deterministic")
OPTIMIZERS = ("adam", "sgd-momentum")


@dataclass
class ClassifierParams:
    """Network weights plus optimizer state.

    ``moments1`` holds momentum buffers (SGD) or first moments (Adam);
    ``moments2`` holds Adam second moments and stays zero under SGD.
    """

    sizes: tuple
    weights: list
    biases: list
    moments1: list = field(default_factory=list)
    moments2: list = field(default_factory=list)
    step: int = 0

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise DimensionError("layer count does not match architecture")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise DimensionError(
                    f"layer {i}: got W{w.shape}, b{b.shape} for sizes "
                    f"{self.sizes[i]}->{self.sizes[i + 1]}"
                )
        if not self.moments1:
            self.moments1 = [np.zeros_like(a) for a in self.arrays()]
        if not self.moments2:
            self.moments2 = [np.zeros_like(a) for a in self.arrays()]

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_classes(self) -> int:
        return self.sizes[-1]

    def arrays(self) -> list:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "ClassifierParams":
        return copy.deepcopy(self)

    def tobytes(self) -> bytes:
        return b"".join(a.tobytes() for a in self.arrays())


@dataclass
class Gradients:
    """Gradient arrays laid out like :class:`ClassifierParams`."""

    weights: list
    biases: list

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


@dataclass(frozen=True)
class DropoutConfig:
    """Keep-probability for the penultimate activations and the pass mode.

    ``train`` and ``mc`` both sample masks; ``deterministic`` never does and
    ignores the rng entirely.
    """

    keep_prob: float = 1.0
    mode: str = "deterministic"

    def __post_init__(self):
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        if self.mode not in DROPOUT_MODES:
            raise ConfigError(f"unknown dropout mode {self.mode!r}")

    @classmethod
    def from_rate(cls, rate: float, mode: str, semantics: str = "keep") -> "DropoutConfig":
        """Build from a nominal dropout "rate".

        ``semantics="keep"`` reads ``rate`` as the keep-probability,
        ``semantics="drop"`` as the drop-probability.
        """
        if semantics == "keep":
            return cls(keep_prob=rate, mode=mode)
        if semantics == "drop":
            return cls(keep_prob=1.0 - rate, mode=mode)
        raise ConfigError(f"unknown dropout semantics {semantics!r}")

    @property
    def stochastic(self) -> bool:
        return self.mode != "deterministic" and self.keep_prob < 1.0


DETERMINISTIC = DropoutConfig()


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 30
    learning_rate: float = 1e-3
    lr_decay_factor: float = 10.0
    lr_decay_period: int = 10
    optimizer: str = "adam"
    momentum: float = 0.9
    patience: int = 20
    seed: int = 0
    keep_prob: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.patience > self.epochs:
            raise ConfigError("patience must not exceed epochs")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.lr_decay_period < 1 or self.lr_decay_factor <= 0:
            raise ConfigError("invalid learning-rate decay schedule")


def init_params(sizes: Sequence[int], seed: int) -> ClassifierParams:
    """Glorot-uniform weights in ``±sqrt(6 / (fan_in + fan_out))``, zero biases."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 3:
        raise ConfigError("architecture needs an input, at least one hidden layer and an output")
    if min(sizes) < 1:
        raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = init_bound(fan_in, fan_out)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ClassifierParams(sizes=sizes, weights=weights, biases=biases)


def init_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_batch(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.n_inputs:
        raise DimensionError(f"expected features of width {params.n_inputs}, got shape {x.shape}")
    return x


def _dropout_mask(shape, dropout, rng):
    if not dropout.stochastic:
        return None
    if rng is None:
        raise ConfigError("stochastic dropout requires an rng")
    return (rng.random(shape) < dropout.keep_prob) / dropout.keep_prob


def penultimate(params: ClassifierParams, x) -> np.ndarray:
    """Deterministic activations feeding the output layer."""
    a = _check_batch(params, x)
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
    return a


def output_probs(params: ClassifierParams, hidden, dropout: DropoutConfig, rng=None):
    """Apply dropout to penultimate activations and the output layer."""
    mask = _dropout_mask(hidden.shape, dropout, rng)
    if mask is not None:
        hidden = hidden * mask
    return _softmax(hidden @ params.weights[-1] + params.biases[-1])


def forward(params: ClassifierParams, x, dropout: DropoutConfig = DETERMINISTIC, rng=None):
    """Class-probability matrix of shape ``(n, T)``."""
    return output_probs(params, penultimate(params, x), dropout, rng)


def weighted_cross_entropy(probs, labels, weights) -> float:
    """``mean_i w_i * -log(max(probs[i, y_i], LOG_FLOOR))``."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    weights = np.asarray(weights, dtype=np.float64)
    n = probs.shape[0]
    if labels.shape != (n,) or weights.shape != (n,):
        raise DimensionError(
            f"{n} probability rows but labels {labels.shape}, weights {weights.shape}"
        )
    if n == 0:
        return 0.0
    if np.any(weights < 0):
        raise ValueError("sample weights must be non-negative")
    picked = probs[np.arange(n), labels]
    return float(np.sum(weights * -np.log(np.maximum(picked, LOG_FLOOR))) / n)


def loss_and_gradients(params, x, labels, weights, dropout=DETERMINISTIC, rng=None):
    """Weighted cross-entropy and its analytic gradient in one forward/backward pass."""
    x = _check_batch(params, x)
    labels = np.asarray(labels)
    weights = np.asarray(weights, dtype=np.float64)
    n = x.shape[0]
    if labels.shape != (n,) or weights.shape != (n,):
        raise DimensionError(f"{n} samples but labels {labels.shape}, weights {weights.shape}")

    acts = [x]
    pre = []
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = acts[-1] @ w + b
        pre.append(z)
        acts.append(np.maximum(z, 0.0))
    mask = _dropout_mask(acts[-1].shape, dropout, rng)
    last = acts[-1] if mask is None else acts[-1] * mask
    probs = _softmax(last @ params.weights[-1] + params.biases[-1])
    loss = weighted_cross_entropy(probs, labels, weights)

    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta *= (weights / n)[:, None]

    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    gw[-1] = last.T @ delta
    gb[-1] = delta.sum(axis=0)
    da = delta @ params.weights[-1].T
    if mask is not None:
        da *= mask
    for layer in range(len(params.weights) - 2, -1, -1):
        dz = da * (pre[layer] > 0)
        gw[layer] = acts[layer].T @ dz
        gb[layer] = dz.sum(axis=0)
        if layer:
            da = dz @ params.weights[layer].T
    return loss, Gradients(weights=gw, biases=gb)


def gradients(params, x, labels, weights, dropout=DETERMINISTIC, rng=None) -> Gradients:
    return loss_and_gradients(params, x, labels, weights, dropout, rng)[1]


def learning_rate(config: TrainConfig, epoch: int) -> float:
    """Step decay: divide by ``lr_decay_factor`` every ``lr_decay_period`` epochs (0-based)."""
    return config.learning_rate / config.lr_decay_factor ** (epoch // config.lr_decay_period)


def optimizer_step(params: ClassifierParams, grads: Gradients, config: TrainConfig, epoch: int):
    """Apply one SGD-momentum or Adam update in place and return ``params``.

    Raises NumericError if the gradients or the updated parameters are not finite.
    """
    garrs = grads.arrays()
    parrs = params.arrays()
    if len(garrs) != len(parrs) or any(g.shape != p.shape for g, p in zip(garrs, parrs)):
        raise DimensionError("gradients are not congruent with parameters")
    if not all(np.all(np.isfinite(g)) for g in garrs):
        raise NumericError(f"non-finite gradient at step {params.step}")

    lr = learning_rate(config, epoch)
    params.step += 1
    if config.optimizer == "sgd-momentum":
        for p, g, v in zip(parrs, garrs, params.moments1):
            v *= config.momentum
            v += g
            p -= lr * v
    else:
        b1, b2 = config.adam_beta1, config.adam_beta2
        c1 = 1.0 - b1 ** params.step
        c2 = 1.0 - b2 ** params.step
        for p, g, m, v in zip(parrs, garrs, params.moments1, params.moments2):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + config.adam_eps)

    if not all(np.all(np.isfinite(p)) for p in parrs):
        raise NumericError(f"non-finite parameters after step {params.step}")
    return params
