"""The two base classifiers: K-nearest-neighbor and a one-vs-rest linear
classifier trained by regularized least squares.

Both are deterministic: KNN breaks distance ties by prototype insertion
order (stable sort) and vote ties by smallest class id; the linear
classifier breaks score ties by smallest class id.  An optional per-vector
L2 normalization is recorded in the model so prediction always matches
training.

Persisted model layout (all integers little-endian; floats IEEE-754
binary64 little-endian), version 1:

    8 bytes   magic  b"NUMRECM1"
    1 byte    kind   0 = knn, 1 = linear
    1 byte    length of extractor tag
    n bytes   extractor tag (ASCII, e.g. "dcc", "rlc")
    1 byte    flags  bit 0 = normalize
    4 bytes   u32    feature dimension d
    kind-specific payload:
      knn:    u32 k, u32 n, n * u32 labels, n*d * f64 prototypes (row-major)
      linear: u32 c, c * u32 class ids, c*(d+1) * f64 weights (row-major,
              bias last per row)
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ConfigError

MODEL_MAGIC = b"NUMRECM1"
_KIND_KNN = 0
_KIND_LINEAR = 1


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class KnnModel:
    features: np.ndarray  # (n, d) float64, prototype insertion order
    labels: np.ndarray  # (n,) int64
    k: int
    normalize: bool = False
    metric: str = "euclidean"

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (num_classes, dim + 1), bias last column
    classes: np.ndarray  # (num_classes,) int64, ascending
    normalize: bool = False

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1


def l2_normalize(x: np.ndarray) -> np.ndarray:
    """Unit-norm copy (row-wise for matrices); zero vectors pass through.

    The 1-D path reuses the row-wise arithmetic so a query normalizes
    bit-identically to a stored prototype with the same features.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return l2_normalize(x[None, :])[0]
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    norms[norms == 0.0] = 1.0
    return x / norms


def _stack(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise ConfigError("no training samples")
    dim = np.asarray(samples[0].features).shape
    if len(dim) != 1:
        raise ValueError("features must be 1-D vectors")
    for s in samples:
        if np.asarray(s.features).shape != dim:
            raise ValueError("all samples must share one feature dimension")
    X = np.stack([np.asarray(s.features, dtype=np.float64) for s in samples])
    y = np.asarray([int(s.label) for s in samples], dtype=np.int64)
    return X, y


def knn_train(samples: Sequence[LabeledSample], k: int, normalize: bool = False) -> KnnModel:
    """Store the prototypes verbatim (lazy learner)."""
    X, y = _stack(samples)
    if k < 1 or k > len(samples):
        raise ConfigError(f"k must lie in [1, {len(samples)}], got {k}")
    return KnnModel(features=X, labels=y, k=k, normalize=normalize)


def knn_predict(model: KnnModel, x) -> tuple[int, dict[int, int]]:
    """Plurality label among the k nearest prototypes (Euclidean distance).

    Returns the label and the per-class vote counts over the k neighbors.
    Distance ties keep insertion order; vote ties pick the smallest class.
    """
    q = np.asarray(x, dtype=np.float64)
    if q.shape != (model.dim,):
        raise ValueError(f"feature dimension mismatch: expected {model.dim}, got {q.shape}")
    P = model.features
    if model.normalize:
        P = l2_normalize(P)
        q = l2_normalize(q)
    diff = P - q
    dist2 = np.einsum("ij,ij->i", diff, diff)
    order = np.argsort(dist2, kind="stable")[: model.k]
    votes = Counter(int(model.labels[i]) for i in order)
    label = min(votes, key=lambda c: (-votes[c], c))
    return label, dict(votes)


def linear_train(
    samples: Sequence[LabeledSample], ridge: float = 1e-3, normalize: bool = False
) -> LinearModel:
    """One-vs-rest regularized least squares on +/-1 targets.

    Features are augmented with a constant 1 for the bias; each class's
    weight row solves (A'A + ridge*I) w = A' y exactly (normal equations),
    so training is deterministic for a fixed sample order.
    """
    if ridge < 0:
        raise ConfigError("ridge must be >= 0")
    X, y = _stack(samples)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes to train a linear classifier")
    if normalize:
        X = l2_normalize(X)
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    G = A.T @ A + ridge * np.eye(A.shape[1])
    targets = np.where(y[:, None] == classes[None, :], 1.0, -1.0)
    try:
        W = np.linalg.solve(G, A.T @ targets)
    except np.linalg.LinAlgError:
        raise ValueError("ill-conditioned; increase ridge") from None
    if not np.all(np.isfinite(W)):
        raise ValueError("ill-conditioned; increase ridge")
    return LinearModel(weights=W.T.copy(), classes=classes.astype(np.int64), normalize=normalize)


def linear_predict(model: LinearModel, x) -> tuple[int, dict[int, float]]:
    """Argmax of the per-class linear scores w_c . [x; 1].

    Returns the label and every class's score.  Score ties pick the
    smallest class id.
    """
    q = np.asarray(x, dtype=np.float64)
    if q.shape != (model.dim,):
        raise ValueError(f"feature dimension mismatch: expected {model.dim}, got {q.shape}")
    if model.normalize:
        q = l2_normalize(q)
    scores = model.weights @ np.append(q, 1.0)
    label = int(model.classes[int(np.argmax(scores))])
    return label, {int(c): float(s) for c, s in zip(model.classes, scores)}


# --- persistence ---------------------------------------------------------


def dump_model_bytes(model, extractor_tag: str = "raw") -> bytes:
    tag = extractor_tag.encode("ascii")
    if len(tag) > 255:
        raise ValueError("extractor tag too long")
    out = bytearray()
    out += MODEL_MAGIC
    if isinstance(model, KnnModel):
        out.append(_KIND_KNN)
    elif isinstance(model, LinearModel):
        out.append(_KIND_LINEAR)
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    out.append(len(tag))
    out += tag
    out.append(1 if model.normalize else 0)
    if isinstance(model, KnnModel):
        n, d = model.features.shape
        out += struct.pack("<III", d, model.k, n)
        out += model.labels.astype("<u4").tobytes()
        out += model.features.astype("<f8").tobytes()
    else:
        c, dp1 = model.weights.shape
        out += struct.pack("<II", dp1 - 1, c)
        out += model.classes.astype("<u4").tobytes()
        out += model.weights.astype("<f8").tobytes()
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError(f"truncated {self.what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def done(self):
        if self.pos != len(self.data):
            raise ValueError(f"trailing bytes in {self.what}")


def load_model_bytes(data: bytes) -> tuple[object, str]:
    """Inverse of dump_model_bytes; returns (model, extractor_tag)."""
    r = _Reader(data, "model file")
    if r.take(8) != MODEL_MAGIC:
        raise ValueError("unexpected magic: not a model file")
    kind = r.u8()
    tag = r.take(r.u8()).decode("ascii")
    normalize = bool(r.u8() & 1)
    if kind == _KIND_KNN:
        d, k, n = r.u32(), r.u32(), r.u32()
        labels = np.frombuffer(r.take(4 * n), dtype="<u4").astype(np.int64)
        feats = np.frombuffer(r.take(8 * n * d), dtype="<f8").reshape(n, d).copy()
        r.done()
        model: object = KnnModel(features=feats, labels=labels, k=k, normalize=normalize)
    elif kind == _KIND_LINEAR:
        d, c = r.u32(), r.u32()
        classes = np.frombuffer(r.take(4 * c), dtype="<u4").astype(np.int64)
        weights = np.frombuffer(r.take(8 * c * (d + 1)), dtype="<f8").reshape(c, d + 1).copy()
        r.done()
        model = LinearModel(weights=weights, classes=classes, normalize=normalize)
    else:
        raise ValueError(f"unknown model kind {kind}")
    return model, tag


def save_model(model, path, extractor_tag: str = "raw") -> None:
    from .data_io import write_bytes_atomic

    write_bytes_atomic(path, dump_model_bytes(model, extractor_tag))


def load_model(path) -> tuple[object, str]:
    with open(path, "rb") as f:
        return load_model_bytes(f.read())
