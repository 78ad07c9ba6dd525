"""Datasets, MNIST IDX parsing, deterministic splits and controlled corruptions.

Every transform returns a new :class:`Dataset` and appends one entry to its
provenance, so ``rebuild(provenance_record(ds))`` reproduces ``ds`` exactly.
"""

from __future__ import annotations

import gzip
import hashlib
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus current and original labels.

    ``provenance`` is a tuple of ``(operation, params)`` pairs, the first one
    naming the source.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    original_labels: np.ndarray = None
    split: str = "train"
    provenance: tuple = ()

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        orig = y.copy() if self.original_labels is None else np.array(self.original_labels, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] != y.shape[0] or orig.shape != y.shape:
            raise DataError(f"inconsistent shapes: X{x.shape}, y{y.shape}, original{orig.shape}")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DataError(f"labels must lie in [0, {self.n_classes - 1}]")
        for name, arr in (("features", x), ("labels", y), ("original_labels", orig)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.labels.size

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def corrupted(self) -> np.ndarray:
        return self.labels != self.original_labels

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices, op: str, params: dict, split: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes,
                       self.original_labels[idx], split or self.split,
                       self.provenance + ((op, dict(params)),))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.features, self.labels, self.original_labels):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


# -- sources -----------------------------------------------------------------

def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw: bytes, expected_magic: int, what: str) -> np.ndarray:
    if len(raw) < 4:
        raise FormatError(f"{what}: file too short for IDX magic", offset=len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(f"{what}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}", offset=0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{what}: truncated header", offset=len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    expected = int(np.prod(dims))
    actual = len(raw) - header
    if actual != expected:
        raise FormatError(f"{what}: payload has {actual} bytes, expected {expected}",
                          offset=header + min(actual, expected))
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_mnist_idx(image_path, label_path, split: str = "train") -> Dataset:
    """Read an MNIST image/label IDX pair (optionally gzipped); pixels scaled to [0, 1]."""
    images = _parse_idx(_read_maybe_gzip(image_path), IMAGE_MAGIC, "images")
    labels = _parse_idx(_read_maybe_gzip(label_path), LABEL_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1) / 255.0
    src = ("mnist_idx", {"images": str(image_path), "labels": str(label_path), "split": split})
    return Dataset(x, labels.astype(np.int64), 10, split=split, provenance=(src,))


def load_mnist_5k() -> Dataset:
    """The 5000-image class-balanced MNIST sample bundled with mlxtend."""
    from mlxtend.data import mnist_data

    x, y = mnist_data()
    return Dataset(x / 255.0, y, 10, split="all", provenance=(("mnist5k", {}),))


def synth_blobs(n_classes: int, per_class: int, dim: int, separation: float, seed: int) -> Dataset:
    """Unit-variance Gaussian clusters whose means are pairwise ``separation`` apart."""
    if min(n_classes, per_class, dim) < 1:
        raise ConfigError("counts must be >= 1")
    if dim < n_classes:
        raise ConfigError("dim must be >= n_classes for equidistant class means")
    rng = np.random.default_rng(seed)
    means = np.zeros((n_classes, dim))
    means[np.arange(n_classes), np.arange(n_classes)] = separation / math.sqrt(2.0)
    labels = np.repeat(np.arange(n_classes), per_class)
    x = means[labels] + rng.standard_normal((labels.size, dim))
    params = {"n_classes": n_classes, "per_class": per_class, "dim": dim,
              "separation": separation, "seed": seed}
    return Dataset(x, labels, n_classes, split="all", provenance=(("synth_blobs", params),))


# -- transforms --------------------------------------------------------------

def _boundaries(n: int, ratios) -> list:
    cum = np.cumsum(ratios)
    return [0] + [round_half_up(c * n) for c in cum[:-1]] + [n]


def split(dataset: Dataset, ratios, seed: int, stratify: bool = False,
          names=("train", "validation", "test")) -> tuple:
    """Disjoint, exhaustive random partition; original order kept inside each part."""
    ratios = [float(r) for r in ratios]
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must be positive and sum to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in ratios]
    groups = ([np.flatnonzero(dataset.labels == c) for c in range(dataset.n_classes)]
              if stratify else [np.arange(len(dataset))])
    for members in groups:
        perm = members[rng.permutation(members.size)]
        bounds = _boundaries(members.size, ratios)
        for k in range(len(ratios)):
            parts[k].append(perm[bounds[k]:bounds[k + 1]])
    out = []
    for k, chunks in enumerate(parts):
        idx = np.sort(np.concatenate(chunks))
        params = {"ratios": ratios, "seed": seed, "stratify": stratify, "part": k}
        out.append(dataset.subset(idx, "split", params, split=names[k] if k < len(names) else f"part{k}"))
    return tuple(out)


def mnist_canonical_split(train60k: Dataset) -> tuple:
    """First 50000 samples for training, last 10000 for validation."""
    n = len(train60k)
    cut = n - 10000
    return (train60k.subset(np.arange(cut), "head", {"n": cut}, split="train"),
            train60k.subset(np.arange(cut, n), "tail", {"start": cut}, split="validation"))


def _stratified_keep(dataset, fractions: dict, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == c)
        frac = fractions.get(c, 1.0)
        if frac >= 1.0 or members.size == 0:
            keep.append(members)
            continue
        k = round_half_up(frac * members.size)
        if k == 0:
            raise DataError(f"fraction {frac} leaves class {c} ({members.size} samples) empty")
        keep.append(rng.choice(members, size=k, replace=False))
    return np.sort(np.concatenate(keep))


def subsample_fraction(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Keep ``round_half_up(fraction * n_c)`` samples of every class."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError("fraction must be in (0, 1]")
    idx = _stratified_keep(dataset, {c: fraction for c in range(dataset.n_classes)}, seed)
    return dataset.subset(idx, "subsample_fraction", {"fraction": fraction, "seed": seed})


def induce_imbalance(dataset: Dataset, minority, keep: float, seed: int) -> Dataset:
    """Shrink the listed classes to ``round_half_up(keep * n_c)`` samples."""
    minority = sorted(int(c) for c in minority)
    if not 0.0 < keep <= 1.0:
        raise ConfigError("keep must be in (0, 1]")
    if any(c < 0 or c >= dataset.n_classes for c in minority):
        raise DataError(f"minority classes out of range: {minority}")
    idx = _stratified_keep(dataset, {c: keep for c in minority}, seed)
    return dataset.subset(idx, "induce_imbalance", {"minority": minority, "keep": keep, "seed": seed})


def corrupt_labels(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Shift ``round_half_up(fraction * N)`` random labels to ``(y + 1) mod T``."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError("fraction must be in [0, 1]")
    n = len(dataset)
    k = round_half_up(fraction * n)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=k, replace=False)
    labels = dataset.labels.copy()
    labels[chosen] = (labels[chosen] + 1) % dataset.n_classes
    return Dataset(dataset.features, labels, dataset.n_classes, dataset.original_labels,
                   dataset.split,
                   dataset.provenance + (("corrupt_labels", {"fraction": fraction, "seed": seed}),))


# -- provenance --------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def provenance_record(dataset: Dataset) -> str:
    """Flat ``key=value`` lines; step ``k`` keys are prefixed ``k.``."""
    lines = [f"split={dataset.split}", f"n_samples={len(dataset)}", f"sha256={dataset.digest()}"]
    for k, (op, params) in enumerate(dataset.provenance):
        lines.append(f"{k}.op={op}")
        lines.extend(f"{k}.{key}={_fmt(val)}" for key, val in sorted(params.items()))
    return "\n".join(lines) + "\n"


def parse_provenance(text: str) -> tuple:
    meta, steps = {}, {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        head, dot, rest = key.partition(".")
        if dot and head.isdigit():
            steps.setdefault(int(head), {})[rest] = value
        else:
            meta[key] = value
    return meta, [steps[k] for k in sorted(steps)]


def _num(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def rebuild(text: str) -> Dataset:
    """Re-run a provenance record from its source."""
    meta, steps = parse_provenance(text)
    first, rest = steps[0], steps[1:]
    op = first.pop("op")
    if op == "mnist5k":
        ds = load_mnist_5k()
    elif op == "mnist_idx":
        ds = load_mnist_idx(first["images"], first["labels"], first["split"])
    elif op == "synth_blobs":
        ds = synth_blobs(**{k: _num(v) for k, v in first.items()})
    else:
        raise FormatError(f"unknown provenance source {op!r}")
    for step in rest:
        op = step.pop("op")
        if op == "split":
            ratios = [float(r) for r in step["ratios"].split(",")]
            ds = split(ds, ratios, int(step["seed"]), step["stratify"] == "true")[int(step["part"])]
        elif op == "subsample_fraction":
            ds = subsample_fraction(ds, float(step["fraction"]), int(step["seed"]))
        elif op == "induce_imbalance":
            minority = [int(c) for c in step["minority"].split(",") if c]
            ds = induce_imbalance(ds, minority, float(step["keep"]), int(step["seed"]))
        elif op == "corrupt_labels":
            ds = corrupt_labels(ds, float(step["fraction"]), int(step["seed"]))
        elif op == "head":
            ds = ds.subset(np.arange(int(step["n"])), "head", {"n": int(step["n"])}, split="train")
        elif op == "tail":
            start = int(step["start"])
            ds = ds.subset(np.arange(start, len(ds)), "tail", {"start": start}, split="validation")
        else:
            raise FormatError(f"unknown provenance step {op!r}")
    if "split" in meta:
        ds = replace(ds, split=meta["split"])
    if "sha256" in meta and ds.digest() != meta["sha256"]:
        raise DataError("rebuilt dataset does not match recorded digest")
    return ds
