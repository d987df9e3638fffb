"""Approximation-quality metrics and edge-detection benchmarking.

Edge scoring follows the usual sweep protocol: 99 thresholds, per-threshold
thinning, greedy tolerance matching of predicted to ground-truth edge
pixels, then ODS (one threshold for the dataset), OIS (one per image), AP
(area under the dataset precision-recall curve) and R50 (best recall at
precision >= 1/2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .edges import EdgeMap, minmax_scale, zhang_suen
from .magnitude import MagnitudeMap

__all__ = ["ApproxReport", "EdgeEvalReport", "approx_report", "pr_at_threshold",
           "edge_eval", "fscore", "DEFAULT_TOL_FRACTION"]

# matching radius as a fraction of the image diagonal (standard benchmark habit)
DEFAULT_TOL_FRACTION = 0.0075


@dataclass
class ApproxReport:
    """Agreement between a ground-truth magnitude map and an approximation."""

    linf: float
    frob: float
    corr: float
    runtime_ms: Optional[float] = None


@dataclass
class EdgeEvalReport:
    ods: float
    ois: float
    ap: float
    r50: float
    pr_curve: List[Tuple[float, float, float]] = field(default_factory=list)


def _as_weights(m) -> np.ndarray:
    if isinstance(m, MagnitudeMap):
        return m.weights
    return np.asarray(m, dtype=np.float64)


def approx_report(ground_truth, approx) -> ApproxReport:
    """Min-max scale both maps, then compare.

    linf is the maximum absolute deviation, frob the Frobenius error
    normalised by the scaled ground truth, corr the Pearson correlation.
    """
    gt = _as_weights(ground_truth)
    ap = _as_weights(approx)
    if gt.shape != ap.shape:
        raise ValueError(f"shape mismatch: {gt.shape} vs {ap.shape}")
    gt_s = minmax_scale(gt).ravel()
    ap_s = minmax_scale(ap).ravel()
    linf = float(np.abs(gt_s - ap_s).max())
    denom = float((gt_s * gt_s).sum())
    frob = float(((gt_s - ap_s) ** 2).sum() / denom) if denom > 0 else float("inf")
    gs, as_ = gt_s - gt_s.mean(), ap_s - ap_s.mean()
    sg, sa = float(np.sqrt((gs * gs).sum())), float(np.sqrt((as_ * as_).sum()))
    if sg == 0.0 or sa == 0.0:
        corr = 1.0 if np.array_equal(gt_s, ap_s) else 0.0
    else:
        corr = float((gs * as_).sum() / (sg * sa))
    return ApproxReport(linf=linf, frob=frob, corr=corr)


def _match_greedy(pred_pts: np.ndarray, gt_pts: np.ndarray, tol: float) -> int:
    """Greedy nearest-first matching; each pixel used at most once."""
    if pred_pts.shape[0] == 0 or gt_pts.shape[0] == 0:
        return 0
    tree = cKDTree(gt_pts)
    cand = []
    for pi, neighbours in enumerate(tree.query_ball_point(pred_pts, r=tol)):
        for gj in neighbours:
            d = float(np.hypot(*(pred_pts[pi] - gt_pts[gj])))
            cand.append((d, pi, gj))
    cand.sort()
    used_p = np.zeros(pred_pts.shape[0], dtype=bool)
    used_g = np.zeros(gt_pts.shape[0], dtype=bool)
    tp = 0
    for _, pi, gj in cand:
        if not used_p[pi] and not used_g[gj]:
            used_p[pi] = used_g[gj] = True
            tp += 1
    return tp


def pr_at_threshold(pred, gt: np.ndarray, t: float, tol: float) -> Tuple[int, int, int]:
    """(TP, FP, FN) after thresholding at ``t``, thinning, and matching.

    Predicted edge pixels match ground-truth pixels within Euclidean radius
    ``tol``; unmatched predictions are false positives, unmatched ground
    truth false negatives.
    """
    values = pred.values if isinstance(pred, EdgeMap) else np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if values.shape != gt.shape:
        raise ValueError(f"shape mismatch: {values.shape} vs {gt.shape}")
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    mask = zhang_suen(values >= t) > 0
    pred_pts = np.argwhere(mask).astype(np.float64)
    gt_pts = np.argwhere(gt > 0.5).astype(np.float64)
    tp = _match_greedy(pred_pts, gt_pts, tol)
    return tp, pred_pts.shape[0] - tp, gt_pts.shape[0] - tp


def _safe_ratio(num: int, den: int) -> float:
    # empty-set convention: no candidates means nothing was wrong
    return 1.0 if den == 0 else num / den


def fscore(tp: int, fp: int, fn: int) -> float:
    p = _safe_ratio(tp, tp + fp)
    r = _safe_ratio(tp, tp + fn)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def edge_eval(pairs: Sequence[Tuple[object, np.ndarray]], thresholds: int = 99,
              tol: Optional[float] = None) -> EdgeEvalReport:
    """Score predicted edge maps against binary ground truth.

    ``pairs`` is a sequence of (prediction, ground truth).  ``tol`` defaults
    per image to ``0.0075 * diagonal``.  The threshold grid is
    ``k / (thresholds + 1)`` for k = 1..thresholds, i.e. 0.01..0.99 for the
    default 99.
    """
    if len(pairs) == 0:
        raise ValueError("edge_eval needs at least one (prediction, truth) pair")
    grid = np.arange(1, thresholds + 1, dtype=np.float64) / (thresholds + 1)
    n_img = len(pairs)
    tps = np.zeros((n_img, thresholds), dtype=np.int64)
    fps = np.zeros_like(tps)
    fns = np.zeros_like(tps)
    for i, (pred, gt) in enumerate(pairs):
        gt = np.asarray(gt, dtype=np.float64)
        tol_i = tol if tol is not None else DEFAULT_TOL_FRACTION * float(np.hypot(*gt.shape))
        for k, t in enumerate(grid):
            tps[i, k], fps[i, k], fns[i, k] = pr_at_threshold(pred, gt, float(t), tol_i)

    agg_tp, agg_fp, agg_fn = tps.sum(0), fps.sum(0), fns.sum(0)
    precision = np.array([_safe_ratio(tp, tp + fp) for tp, fp in zip(agg_tp, agg_fp)])
    recall = np.array([_safe_ratio(tp, tp + fn) for tp, fn in zip(agg_tp, agg_fn)])
    dataset_f = np.array([fscore(tp, fp, fn) for tp, fp, fn in zip(agg_tp, agg_fp, agg_fn)])

    ods = float(dataset_f.max())
    ois = float(np.mean([max(fscore(tps[i, k], fps[i, k], fns[i, k])
                             for k in range(thresholds)) for i in range(n_img)]))

    order = np.argsort(recall, kind="stable")
    r_sorted = recall[order]
    p_sorted = precision[order]
    p_env = np.maximum.accumulate(p_sorted[::-1])[::-1]   # non-increasing in recall
    r_path = np.concatenate([[0.0], r_sorted])
    p_path = np.concatenate([[p_env[0] if p_env.size else 1.0], p_env])
    ap = float(np.trapezoid(p_path, r_path))

    with_half = recall[precision >= 0.5]
    r50 = float(with_half.max()) if with_half.size else 0.0

    curve = [(float(t), float(p), float(r)) for t, p, r in zip(grid, precision, recall)]
    return EdgeEvalReport(ods=ods, ois=ois, ap=ap, r50=r50, pr_curve=curve)
