"""Exact magnitude vectors of finite metric spaces.

The magnitude weights ``w`` solve ``zeta @ w = 1`` for the similarity matrix
``zeta``; the magnitude is their sum.  We never form the inverse: a symmetric
positive-definite factorization is tried first (similarity matrices of
distinct points under l1/l2 are positive definite) with a pivoted LU
fallback, and a reciprocal condition number estimate is attached to the
result.  Weights may legitimately be negative; nothing is clamped here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .image import DigitalImage, write_csv_grid, write_pgm16
from .metric import MetricSpec, featurize, similarity_matrix

__all__ = ["MagnitudeMap", "NotInvertibleError", "magnitude_vector", "magnitude_scalar",
           "image_magnitude", "RCOND_FLOOR"]

# Below this estimated reciprocal condition number the matrix is declared
# not invertible for magnitude purposes.
RCOND_FLOOR = 1e-12


class NotInvertibleError(ArithmeticError):
    """Similarity matrix is singular or numerically too ill-conditioned."""

    def __init__(self, rcond: float, duplicate_pair=None, patch_index=None):
        self.rcond = rcond
        self.duplicate_pair = duplicate_pair
        self.patch_index = patch_index
        msg = f"similarity matrix not invertible (rcond estimate {rcond:.3e})"
        if duplicate_pair is not None:
            msg += f"; first duplicated point pair: {duplicate_pair[0]} and {duplicate_pair[1]}"
        if patch_index is not None:
            msg += f"; patch index {patch_index}"
        super().__init__(msg)

    def with_patch(self, index) -> "NotInvertibleError":
        return NotInvertibleError(self.rcond, self.duplicate_pair, index)


@dataclass
class MagnitudeMap:
    """Per-pixel magnitude weights on a grid plus their total."""

    weights: np.ndarray          # (height, width)
    magnitude: float
    rcond: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must form a 2-D grid")
        total = float(self.weights.sum())
        if abs(total - self.magnitude) > 1e-9 * max(1, self.weights.size):
            raise ValueError(
                f"magnitude {self.magnitude} inconsistent with weight sum {total}")

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    def to_pgm(self, path) -> None:
        write_pgm16(path, self.weights)

    def to_csv(self, path) -> None:
        write_csv_grid(path, self.weights)

    def to_json(self, path=None) -> str:
        payload = json.dumps(
            {"width": self.width, "height": self.height,
             "magnitude": self.magnitude, "rcond": self.rcond},
            sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(payload + "\n")
        return payload


def find_duplicate_pair(feats: np.ndarray) -> Optional[Tuple[int, int]]:
    """First pair of identical feature rows, or None."""
    seen = {}
    for i, row in enumerate(feats):
        key = row.tobytes()
        if key in seen:
            return (seen[key], i)
        seen[key] = i
    return None


def _solve_unit(zeta: np.ndarray) -> Tuple[np.ndarray, float]:
    """Solve ``zeta @ w = 1`` returning weights and an rcond estimate.

    Consumes ``zeta`` (factorized in place).  Falls back from Cholesky to
    pivoted LU when the matrix is not positive definite; the caller must be
    able to rebuild ``zeta`` for the fallback path, so we copy only there.
    """
    n = zeta.shape[0]
    ones = np.ones((n, 1), dtype=np.float64)
    anorm = float(np.abs(zeta).sum(axis=0).max())
    c, info = lapack.dpotrf(zeta, lower=1, overwrite_a=False)
    if info == 0:
        rcond, _ = lapack.dpocon(c, anorm, uplo="L")
        if rcond >= RCOND_FLOOR:
            w, _ = lapack.dpotrs(c, ones, lower=1)
            return w[:, 0], float(rcond)
        return ones[:, 0], float(rcond)  # weights unused; caller raises
    lu, piv, info = lapack.dgetrf(zeta, overwrite_a=True)
    if info > 0:
        return ones[:, 0], 0.0
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if rcond < RCOND_FLOOR:
        return ones[:, 0], float(rcond)
    w, _ = lapack.dgetrs(lu, piv, ones)
    return w[:, 0], float(rcond)


def magnitude_vector(feats: np.ndarray, spec: MetricSpec,
                     shape: Optional[Tuple[int, int]] = None) -> MagnitudeMap:
    """Magnitude weights of a finite metric space given by feature vectors.

    Parameters
    ----------
    feats : (n, dim) array, one point per row.
    spec : metric specification.
    shape : optional (height, width) of the originating grid; defaults to a
        1 x n strip.

    Raises
    ------
    NotInvertibleError
        if the estimated reciprocal condition number falls below
        ``RCOND_FLOOR``; the message names the first duplicated point pair
        when one exists.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats[:, None]
    n = feats.shape[0]
    if n == 0:
        raise ValueError("magnitude_vector needs at least one point")
    if shape is None:
        shape = (1, n)
    if shape[0] * shape[1] != n:
        raise ValueError(f"shape {shape} does not match {n} points")
    zeta = similarity_matrix(feats, spec)
    w, rcond = _solve_unit(zeta)
    if rcond < RCOND_FLOOR:
        raise NotInvertibleError(rcond, duplicate_pair=find_duplicate_pair(feats))
    weights = w.reshape(shape)
    return MagnitudeMap(weights=weights, magnitude=float(w.sum()), rcond=rcond)


def magnitude_scalar(feats: np.ndarray, spec: MetricSpec) -> float:
    """The magnitude: sum of the magnitude weights."""
    return magnitude_vector(feats, spec).magnitude


def image_magnitude(img: DigitalImage, spec: MetricSpec) -> MagnitudeMap:
    """Dense magnitude map of a whole image (one linear solve)."""
    feats = featurize(img, spec)
    return magnitude_vector(feats, spec, shape=(img.height, img.width))
