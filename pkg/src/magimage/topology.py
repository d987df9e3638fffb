"""Betti curves of edge maps.

Each threshold's superlevel set is treated as a union of closed unit
squares: connected components are counted with 8-connectivity (squares
touching at a corner are connected) and cycles as 4-connected background
components of the zero-padded complement minus one.  That pairing makes
``betti0 - betti1`` equal the Euler characteristic V - E + F of the cubical
complex, which doubles as an independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

__all__ = ["BettiCurve", "UnionFind", "count_components", "betti_numbers",
           "euler_characteristic", "betti_curve", "betti_norm"]


class UnionFind:
    """Array-based disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)
        self.n_sets = n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_sets -= 1


_OFFSETS_4 = ((0, 1), (1, 0))
_OFFSETS_8 = ((0, 1), (1, 0), (1, 1), (1, -1))


def count_components(mask: np.ndarray, connectivity: int = 8) -> int:
    """Number of connected foreground components of a boolean mask."""
    mask = np.asarray(mask, dtype=bool)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    h, w = mask.shape
    idx = np.flatnonzero(mask.ravel())
    if idx.size == 0:
        return 0
    uf = UnionFind(h * w)
    offsets = _OFFSETS_4 if connectivity == 4 else _OFFSETS_8
    for di, dj in offsets:
        a = mask[max(0, -di):h - max(0, di) or None, max(0, -dj):w - max(0, dj) or None]
        b = mask[max(0, di):h - max(0, -di) or None, max(0, dj):w - max(0, -dj) or None]
        pair = a & b
        ii, jj = np.nonzero(pair)
        src = (ii + max(0, -di)) * w + (jj + max(0, -dj))
        dst = (ii + max(0, di)) * w + (jj + max(0, dj))
        for s, d in zip(src.tolist(), dst.tolist()):
            uf.union(s, d)
    roots = {uf.find(int(i)) for i in idx}
    return len(roots)


def betti_numbers(mask: np.ndarray) -> Tuple[int, int]:
    """(components, cycles) of a binary image.

    Cycles are 4-connected components of the zero-padded complement, minus
    the single outer background component.
    """
    mask = np.asarray(mask, dtype=bool)
    b0 = count_components(mask, connectivity=8)
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    b1 = count_components(~padded, connectivity=4) - 1
    return b0, b1


def euler_characteristic(mask: np.ndarray) -> int:
    """V - E + F of the union of closed unit squares over the foreground.

    Vertices and edges shared between squares are counted once.  Equals
    betti0 (8-connected) minus betti1 (4-connected complement) for every
    binary image.
    """
    m = np.asarray(mask, dtype=bool)
    mp = np.pad(m, 1, mode="constant", constant_values=False)
    faces = int(m.sum())
    # horizontal edges exist where the pixel above or below is set
    e_h = int((mp[:-1, 1:-1] | mp[1:, 1:-1]).sum())
    e_v = int((mp[1:-1, :-1] | mp[1:-1, 1:]).sum())
    verts = int((mp[:-1, :-1] | mp[:-1, 1:] | mp[1:, :-1] | mp[1:, 1:]).sum())
    return verts - (e_h + e_v) + faces


@dataclass(frozen=True)
class BettiCurve:
    """Betti numbers of superlevel sets over an increasing threshold grid."""

    thresholds: np.ndarray
    betti0: np.ndarray
    betti1: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        b0 = np.asarray(self.betti0, dtype=np.int64)
        b1 = np.asarray(self.betti1, dtype=np.int64)
        if not (t.shape == b0.shape == b1.shape):
            raise ValueError("curve arrays must share one length")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if np.any(b0 < 0) or np.any(b1 < 0):
            raise ValueError("Betti numbers are nonnegative")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "betti0", b0)
        object.__setattr__(self, "betti1", b1)


def betti_curve(values: np.ndarray, levels: int = 64) -> BettiCurve:
    """Betti numbers of ``{values >= t}`` for t on an even grid in (0, 1].

    The grid excludes 0 (where every map is all foreground), so an all-zero
    map yields identically zero curves.
    """
    if levels < 2:
        raise ValueError("need at least 2 threshold levels")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("betti_curve expects a 2-D map")
    thresholds = np.arange(1, levels + 1, dtype=np.float64) / levels
    b0 = np.empty(levels, dtype=np.int64)
    b1 = np.empty(levels, dtype=np.int64)
    for i, t in enumerate(thresholds):
        b0[i], b1[i] = betti_numbers(values >= t)
    return BettiCurve(thresholds, b0, b1)


def betti_norm(curve: BettiCurve) -> Tuple[float, float]:
    """Mean-square norms of the two Betti sequences.

    Euclidean norms divided by sqrt(levels), so the value does not grow
    with the grid resolution.
    """
    n = curve.thresholds.shape[0]
    if n == 0:
        return (0.0, 0.0)
    s = np.sqrt(float(n))
    return (float(np.linalg.norm(curve.betti0.astype(np.float64)) / s),
            float(np.linalg.norm(curve.betti1.astype(np.float64)) / s))
