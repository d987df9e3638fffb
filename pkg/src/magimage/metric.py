"""Feature vectors, base metrics and similarity matrices.

Every pixel becomes a vector ``(x, y, s*c_1, ..., s*c_n)`` where ``s`` is the
channel weight, the one contrast knob of the library.  A metric on those
vectors induces the similarity matrix ``exp(-d(i, j))`` whose inverse row
sums are the magnitude weights.

With an embedding set on the :class:`MetricSpec`, feature vectors are the
encoder outputs instead (pullback metric); distances are then always taken
in the latent space with the base metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .image import DigitalImage

__all__ = [
    "MetricSpec",
    "featurize",
    "base_features",
    "distance",
    "pairwise_distances",
    "similarity_matrix",
]

_BASES = ("l1", "l2", "hamming")

# Row chunk for pairwise builders: keeps the (chunk x n x dim) temporary small.
_CHUNK = 256


@dataclass(frozen=True)
class MetricSpec:
    """Which metric to put on an image.

    base          one of 'l1', 'l2', 'hamming'
    channel_weight  nonnegative factor applied to channel coordinates
    embedding     optional model with an ``encode_image`` method; when set,
                  distances are taken between encoder outputs (pullback).
    """

    base: str = "l1"
    channel_weight: float = 1.0
    embedding: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        if self.base not in _BASES:
            raise ValueError(f"unknown base metric {self.base!r}; expected one of {_BASES}")
        if not (self.channel_weight >= 0.0):
            raise ValueError(f"channel_weight must be >= 0, got {self.channel_weight}")
        if self.base == "hamming" and self.embedding is not None:
            raise ValueError("the Hamming base cannot be combined with an embedding")


def base_features(data: np.ndarray, channel_weight: float = 1.0) -> np.ndarray:
    """Per-pixel vectors ``(x, y, s*c...)`` in row-major pixel order."""
    h, w, c = data.shape
    ys, xs = np.indices((h, w), dtype=np.float64)
    feats = np.empty((h * w, 2 + c), dtype=np.float64)
    feats[:, 0] = xs.ravel()
    feats[:, 1] = ys.ravel()
    feats[:, 2:] = data.reshape(h * w, c) * channel_weight
    return feats


def featurize(img: DigitalImage, spec: MetricSpec) -> np.ndarray:
    """Feature vectors of an image under ``spec``, one row per pixel.

    Returns an ``(n_pixels, dim)`` array.  If ``spec.embedding`` is set the
    rows are encoder outputs, otherwise raw ``(x, y, s*c...)`` vectors.
    """
    if spec.embedding is not None:
        return spec.embedding.encode_image(img.data, spec.channel_weight)
    return base_features(img.data, spec.channel_weight)


def distance(a, b, spec: MetricSpec) -> float:
    """Distance between two feature vectors under the base metric."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    if spec.base == "l1":
        return float(np.abs(d).sum())
    if spec.base == "l2":
        return float(np.sqrt((d * d).sum()))
    return float(np.count_nonzero(d))


def pairwise_distances(feats: np.ndarray, base: str = "l1") -> np.ndarray:
    """Dense symmetric distance matrix, built in row chunks."""
    X = np.ascontiguousarray(feats, dtype=np.float64)
    n = X.shape[0]
    D = np.empty((n, n), dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        block = X[lo:hi, None, :] - X[None, :, :]
        if base == "l1":
            np.abs(block, out=block)
            D[lo:hi] = block.sum(axis=2)
        elif base == "l2":
            np.square(block, out=block)
            np.sqrt(block.sum(axis=2), out=D[lo:hi])
        else:  # hamming
            D[lo:hi] = np.count_nonzero(block, axis=2)
    return D


def similarity_matrix(feats: np.ndarray, spec: MetricSpec) -> np.ndarray:
    """Similarity matrix ``exp(-d(i, j))``: symmetric, unit diagonal.

    Duplicate feature vectors are allowed here; the resulting singularity is
    detected at solve time.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats[:, None]
    if feats.shape[0] == 0:
        raise ValueError("similarity_matrix needs at least one feature vector")
    Z = pairwise_distances(feats, spec.base)
    np.negative(Z, out=Z)
    np.exp(Z, out=Z)
    # exact unit diagonal regardless of accumulation order
    np.fill_diagonal(Z, 1.0)
    return Z
