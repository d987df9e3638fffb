"""Edge-probability pipelines: grayscale, blur, Sobel, Canny, magnitude.

All probabilistic detectors end in min-max scaling; a constant response
field maps to all zeros by convention (a constant image has no edges).
Binary output only comes from the Canny detector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approx import PatchConfig, patched_magnitude
from .image import DigitalImage
from .metric import MetricSpec

__all__ = ["EdgeMap", "minmax_scale", "to_grayscale", "gaussian_kernel",
           "gaussian_blur", "sobel_gradients", "sobel_edges", "canny_edges",
           "orientation_nms", "zhang_suen", "nms_thin", "magnitude_edges",
           "sobel_pipeline", "canny_pipeline", "fit_canny_thresholds"]

GRAY_WEIGHTS = (0.2989, 0.5870, 0.1140)

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


@dataclass
class EdgeMap:
    """A per-pixel edge map: probabilistic values in [0,1] or binary {0,1}."""

    values: np.ndarray
    kind: str = "probabilistic"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("edge map must be 2-D")
        if self.kind not in ("probabilistic", "binary"):
            raise ValueError(f"unknown edge map kind {self.kind!r}")
        if self.kind == "probabilistic":
            if self.values.min() < -1e-12 or self.values.max() > 1 + 1e-12:
                raise ValueError("probabilistic edge map values must lie in [0, 1]")
        else:
            if not np.all((self.values == 0.0) | (self.values == 1.0)):
                raise ValueError("binary edge map values must be 0 or 1")


def minmax_scale(a: np.ndarray) -> np.ndarray:
    """Map a field onto [0, 1]; constant fields become all zeros.

    Fields whose spread is at rounding level (relative 1e-12) count as
    constant, so solver noise on a flat image cannot blow up to full range.
    """
    a = np.asarray(a, dtype=np.float64)
    lo, hi = float(a.min()), float(a.max())
    if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def to_grayscale(img: DigitalImage) -> DigitalImage:
    """Weighted RGB-to-gray conversion; single-channel images pass through."""
    if img.channels == 1:
        return img
    if img.channels != 3:
        raise ValueError(f"expected 1 or 3 channels, got {img.channels}")
    r, g, b = img.data[:, :, 0], img.data[:, :, 1], img.data[:, :, 2]
    gray = GRAY_WEIGHTS[0] * r + GRAY_WEIGHTS[1] * g + GRAY_WEIGHTS[2] * b
    return DigitalImage(gray[:, :, None])


def gaussian_kernel(size: int, sigma: float | None = None) -> np.ndarray:
    """Normalised 1-D Gaussian kernel of odd length ``size``.

    Default sigma follows the usual size rule 0.3*((size-1)/2 - 1) + 0.8.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and >= 1")
    if sigma is None:
        sigma = 0.3 * ((size - 1) / 2 - 1) + 0.8
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate1d(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    half = k.shape[0] // 2
    if half == 0:
        return a * k[0]
    pad = [(0, 0)] * a.ndim
    pad[axis] = (half, half)
    ap = np.pad(a, pad, mode="edge")
    out = np.zeros_like(a, dtype=np.float64)
    for off in range(k.shape[0]):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(off, off + a.shape[axis])
        out += k[off] * ap[tuple(sl)]
    return out


def gaussian_blur(img: DigitalImage, size: int = 5,
                  sigma: float | None = None) -> DigitalImage:
    """Separable Gaussian blur with edge-replication borders."""
    k = gaussian_kernel(size, sigma)
    if size == 1:
        return img
    data = _correlate1d(img.data, k, axis=0)
    data = _correlate1d(data, k, axis=1)
    return DigitalImage(data)


def _correlate3x3(gray: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    gp = np.pad(gray, 1, mode="edge")
    out = np.zeros_like(gray, dtype=np.float64)
    h, w = gray.shape
    for di in range(3):
        for dj in range(3):
            if kernel[di, dj] != 0.0:
                out += kernel[di, dj] * gp[di:di + h, dj:dj + w]
    return out


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical Sobel responses (gx, gy) of a 2-D field."""
    return _correlate3x3(gray, SOBEL_X), _correlate3x3(gray, SOBEL_Y)


def sobel_edges(img: DigitalImage) -> EdgeMap:
    """Gradient-magnitude edge probabilities of a single-channel image."""
    if img.channels != 1:
        raise ValueError("sobel_edges expects a single-channel image")
    gx, gy = sobel_gradients(img.data[:, :, 0])
    mag = np.hypot(gx, gy)
    return EdgeMap(minmax_scale(mag), "probabilistic")


def orientation_nms(values: np.ndarray, gx: np.ndarray, gy: np.ndarray,
                    strict: bool = False) -> np.ndarray:
    """Suppress non-maxima across the gradient direction (4 quantised bins).

    In the default plateau-keeping mode a pixel survives unless a neighbour
    along its gradient direction is strictly larger; tie chains (unit-width
    lines, junctions, evenly split double ridges) survive intact and are
    left to morphological thinning.  In ``strict`` mode (the Canny path) a
    pixel must also beat its backward neighbour outright, so a two-pixel
    plateau keeps exactly one pixel.
    """
    h, w = values.shape
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    vp = np.pad(values, 1, mode="constant")
    centre = vp[1:h + 1, 1:w + 1]

    def shifted(di, dj):
        return vp[1 + di:1 + di + h, 1 + dj:1 + dj + w]

    bins = [
        ((angle < 22.5) | (angle >= 157.5), (0, 1), (0, -1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1), (-1, -1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0), (-1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1), (-1, 1)),
    ]
    keep = np.zeros_like(values, dtype=bool)
    for mask, fwd, bwd in bins:
        if strict:
            ok = (centre >= shifted(*fwd)) & (centre > shifted(*bwd))
        else:
            ok = (centre >= shifted(*fwd)) & (centre >= shifted(*bwd))
        keep |= mask & ok
    # zero-valued pixels are never edges
    keep &= values > 0
    return np.where(keep, values, 0.0)


def _dilate8(mask: np.ndarray) -> np.ndarray:
    mp = np.pad(mask, 1, mode="constant")
    h, w = mask.shape
    out = np.zeros_like(mask)
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            out |= mp[di:di + h, dj:dj + w]
    return out


# largest gradient magnitude a unit-range image can produce under the 3x3
# Sobel pair: |gx|, |gy| <= 4, so |grad| <= 4*sqrt(2).  Dividing by it puts
# canny thresholds on an absolute [0, 1] scale where weak edges really can
# fall below `low`.
_SOBEL_MAGNITUDE_BOUND = 4.0 * np.sqrt(2.0)


def _canny_response(gray: np.ndarray, sobel_size: int = 3) -> np.ndarray:
    if sobel_size != 3:
        raise ValueError("only the 3x3 Sobel operator is supported")
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy) / _SOBEL_MAGNITUDE_BOUND
    return orientation_nms(mag, gx, gy, strict=True)


def _canny_threshold(nms_mag: np.ndarray, low: float, high: float) -> np.ndarray:
    strong = nms_mag >= high
    weak = nms_mag >= low
    edges = strong.copy()
    while True:
        grown = weak & _dilate8(edges)
        if np.array_equal(grown, edges):
            break
        edges = grown
    return edges.astype(np.float64)


def canny_edges(img: DigitalImage, low: float, high: float,
                sobel_size: int = 3) -> EdgeMap:
    """Binary Canny edges of a single-channel image.

    Gradient magnitude and orientation feed a quantised non-maximum
    suppression, then a double threshold with hysteresis: weak pixels
    survive only if 8-connected to a pixel at or above ``high``.
    """
    if not (0.0 <= low <= high <= 1.0):
        raise ValueError(f"thresholds must satisfy 0 <= low <= high <= 1, got {low}, {high}")
    if img.channels != 1:
        raise ValueError("canny_edges expects a single-channel image")
    nms_mag = _canny_response(img.data[:, :, 0], sobel_size)
    return EdgeMap(_canny_threshold(nms_mag, low, high), "binary")


def zhang_suen(mask: np.ndarray) -> np.ndarray:
    """Morphological thinning of a binary mask to unit-width skeletons."""
    img = np.asarray(mask, dtype=bool).copy()

    def neighbours(a):
        ap = np.pad(a, 1, mode="constant")
        h, w = a.shape
        # p2..p9 clockwise from north
        return [ap[0:h, 1:w + 1], ap[0:h, 2:w + 2], ap[1:h + 1, 2:w + 2],
                ap[2:h + 2, 2:w + 2], ap[2:h + 2, 1:w + 1], ap[2:h + 2, 0:w],
                ap[1:h + 1, 0:w], ap[0:h, 0:w]]

    changed = True
    while changed:
        changed = False
        for phase in (0, 1):
            p = neighbours(img)
            b = sum(x.astype(np.int8) for x in p)
            ring = p + [p[0]]
            a = sum(((~ring[i]) & ring[i + 1]).astype(np.int8) for i in range(8))
            if phase == 0:
                cond = ~(p[0] & p[2] & p[4]) & ~(p[2] & p[4] & p[6])
            else:
                cond = ~(p[0] & p[2] & p[6]) & ~(p[0] & p[4] & p[6])
            kill = img & (b >= 2) & (b <= 6) & (a == 1) & cond
            if kill.any():
                img &= ~kill
                changed = True
    return img.astype(np.float64)


def nms_thin(edge_map: EdgeMap) -> EdgeMap:
    """Sharpen an edge map: orientation NMS for probabilistic maps (using
    the map's own Sobel orientations), morphological thinning for binary
    maps."""
    if edge_map.kind == "binary":
        return EdgeMap(zhang_suen(edge_map.values), "binary")
    gx, gy = sobel_gradients(edge_map.values)
    return EdgeMap(orientation_nms(edge_map.values, gx, gy), "probabilistic")


def magnitude_edges(img: DigitalImage, cfg: PatchConfig, blur_size: int = 5,
                    pad: int = 2, pad_mode: str = "edge") -> EdgeMap:
    """Magnitude-based edge probabilities.

    Blur, pad (so the domain-boundary weight elevation lands outside the
    frame), run the patched magnitude, take absolute weights, crop the pad,
    min-max scale.
    """
    data = img.data
    if blur_size > 1:
        data = gaussian_blur(DigitalImage(data), blur_size).data
    if pad > 0:
        data = np.pad(data, ((pad, pad), (pad, pad), (0, 0)), mode="edge")
    mm = patched_magnitude(DigitalImage(data), cfg, pad_mode=pad_mode)
    w = np.abs(mm.weights)
    if pad > 0:
        w = w[pad:-pad, pad:-pad]
    return EdgeMap(minmax_scale(w), "probabilistic")


def sobel_pipeline(img: DigitalImage, blur_size: int = 5) -> EdgeMap:
    """Grayscale, blur, Sobel: the standard baseline detector."""
    gray = to_grayscale(img)
    return sobel_edges(gaussian_blur(gray, blur_size))


def canny_pipeline(img: DigitalImage, low: float, high: float,
                   blur_size: int = 5, sobel_size: int = 3) -> EdgeMap:
    gray = to_grayscale(img)
    return canny_edges(gaussian_blur(gray, blur_size), low, high, sobel_size)


def fit_canny_thresholds(images, labels, blur_size: int = 5,
                         sobel_size: int = 3, step: float = 0.05):
    """Grid-search Canny thresholds minimising training misclassification.

    Sweeps ``low <= high`` over a grid with the given step and returns the
    pair with the fewest mismatched pixels against the binary labels.
    """
    responses = []
    for img in images:
        gray = gaussian_blur(to_grayscale(img), blur_size)
        responses.append(_canny_response(gray.data[:, :, 0], sobel_size))
    grid = np.round(np.arange(0.0, 1.0 + 1e-9, step), 10)
    best = (np.inf, 0.0, 1.0)
    for low in grid:
        for high in grid:
            if high < low:
                continue
            errs = 0
            for resp, lab in zip(responses, labels):
                pred = _canny_threshold(resp, low, high)
                errs += int(np.sum(pred != lab))
            if errs < best[0]:
                best = (errs, float(low), float(high))
    return best[1], best[2]
