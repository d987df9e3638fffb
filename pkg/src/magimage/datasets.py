"""Dataset handling: paired image/label loading and synthetic generators.

The synthetic block dataset is the library's default test substrate:
piecewise-constant colour cells with additive noise and exact one-pixel
edge labels along the cell boundaries.  Generation is deterministic given
the seed.
"""
from __future__ import annotations

import warnings
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .image import DigitalImage

__all__ = ["synthetic_blocks", "synthetic_textures", "save_pairs", "load_pairs",
           "biped_pairs"]

Pair = Tuple[np.ndarray, np.ndarray]


def _cut_positions(rng: np.random.Generator, extent: int, n_cuts: int,
                   min_gap: int) -> List[int]:
    """Interior cut positions with a minimum spacing between them."""
    min_gap = max(2, min(min_gap, extent // 3))   # small images still get cuts
    cuts: List[int] = []
    candidates = list(range(min_gap, extent - min_gap))
    rng.shuffle(candidates)
    for c in candidates:
        if all(abs(c - e) >= min_gap for e in cuts):
            cuts.append(c)
            if len(cuts) == n_cuts:
                break
    return sorted(cuts)


def synthetic_blocks(n_images: int, size: Tuple[int, int] = (64, 64),
                     channels: int = 3, cuts: Tuple[int, int] = (1, 3),
                     contrast: Tuple[float, float] = (0.25, 0.9),
                     noise: float = 0.03, seed: int = 0,
                     min_gap: int = 8) -> List[Pair]:
    """Images of random colour cells with exact labels on cell boundaries.

    Each image is partitioned by full-span vertical and horizontal cuts;
    every cell gets a random colour, adjacent cells are pushed apart by at
    least the lower ``contrast`` bound on one channel, Gaussian noise is
    added and the result clipped to [0, 1].  The label marks the first
    pixel row/column after each cut, a one-pixel-wide axis-aligned line.
    """
    rng = np.random.default_rng(seed)
    h, w = size
    out: List[Pair] = []
    for _ in range(n_images):
        n_vcuts = int(rng.integers(cuts[0], cuts[1] + 1))
        n_hcuts = int(rng.integers(cuts[0], cuts[1] + 1))
        vcuts = _cut_positions(rng, w, n_vcuts, min_gap)
        hcuts = _cut_positions(rng, h, n_hcuts, min_gap)
        row_edges = [0] + hcuts + [h]
        col_edges = [0] + vcuts + [w]
        img = np.empty((h, w, channels))
        base = rng.uniform(0.05, 0.95, channels)
        for bi in range(len(row_edges) - 1):
            for bj in range(len(col_edges) - 1):
                lo, hi = contrast
                delta = rng.uniform(lo, hi, channels) * rng.choice([-1.0, 1.0], channels)
                colour = np.clip(base + ((bi + bj) % 2) * delta, 0.0, 1.0)
                img[row_edges[bi]:row_edges[bi + 1],
                    col_edges[bj]:col_edges[bj + 1]] = colour
        if noise > 0:
            img = img + rng.normal(0.0, noise, img.shape)
        img = np.clip(img, 0.0, 1.0)
        label = np.zeros((h, w))
        for c in vcuts:
            label[:, c] = 1.0
        for r in hcuts:
            label[r, :] = 1.0
        out.append((img, label))
    return out


def synthetic_textures(n_images: int, size: Tuple[int, int] = (64, 64),
                       seed: int = 0) -> List[np.ndarray]:
    """Textured colour images: block structure plus band-limited noise."""
    rng = np.random.default_rng(seed)
    base = synthetic_blocks(n_images, size=size, noise=0.0,
                            seed=int(rng.integers(0, 2 ** 31)))
    out = []
    for img, _ in base:
        h, w, c = img.shape
        field = rng.normal(0.0, 1.0, (h, w, c))
        # crude band-limiting: two box-smoothing passes
        for _ in range(2):
            field = (field + np.roll(field, 1, 0) + np.roll(field, -1, 0)
                     + np.roll(field, 1, 1) + np.roll(field, -1, 1)) / 5.0
        tex = img + 0.35 * field + rng.normal(0.0, 0.02, img.shape)
        out.append(np.clip(tex, 0.0, 1.0))
    return out


def save_pairs(pairs, image_dir, label_dir) -> None:
    """Write pairs as 8-bit PNGs with matching zero-padded names."""
    image_dir, label_dir = Path(image_dir), Path(label_dir)
    image_dir.mkdir(parents=True, exist_ok=True)
    label_dir.mkdir(parents=True, exist_ok=True)
    for i, (img, lab) in enumerate(pairs):
        DigitalImage.from_array(img).to_png(image_dir / f"{i:04d}.png")
        DigitalImage.from_array(lab).to_png(label_dir / f"{i:04d}.png")


def load_pairs(image_dir, label_dir,
               binarise: float = 0.5) -> Iterator[Tuple[DigitalImage, np.ndarray]]:
    """Lazily yield (image, binary label grid) pairs matched by filename.

    Unpaired files are reported with a warning and skipped.  Labels are
    binarised at ``binarise``.
    """
    image_dir, label_dir = Path(image_dir), Path(label_dir)
    images = {p.stem: p for p in sorted(image_dir.glob("*.png"))}
    labels = {p.stem: p for p in sorted(label_dir.glob("*.png"))}
    unpaired = sorted(set(images) ^ set(labels))
    if unpaired:
        warnings.warn(f"skipping unpaired files: {', '.join(unpaired)}")
    for stem in sorted(set(images) & set(labels)):
        img = DigitalImage.from_png(images[stem])
        lab = DigitalImage.from_png(labels[stem]).gray()
        yield img, (lab >= binarise).astype(np.float64)


def biped_pairs(root, split: str = "test") -> List[Tuple[Path, Path]]:
    """Locate (image, edge map) path pairs in a BIPED-style directory tree.

    Expects ``edges/imgs/<split>/rgbr/real`` and
    ``edges/edge_maps/<split>/rgbr/real`` under ``root``; falls back to any
    ``imgs``/``edge_maps`` sibling layout with matching stems.
    """
    root = Path(root)
    img_dir = root / "edges" / "imgs" / split / "rgbr" / "real"
    lab_dir = root / "edges" / "edge_maps" / split / "rgbr" / "real"
    if not img_dir.is_dir():
        candidates = [p for p in root.rglob("imgs") if (p.parent / "edge_maps").is_dir()]
        if not candidates:
            return []
        img_dir = candidates[0] / split
        lab_dir = candidates[0].parent / "edge_maps" / split
        if not img_dir.is_dir():
            return []
    imgs = {p.stem: p for p in sorted(img_dir.iterdir())
            if p.suffix.lower() in (".png", ".jpg", ".jpeg")}
    labs = {p.stem: p for p in sorted(lab_dir.iterdir())
            if p.suffix.lower() in (".png", ".jpg", ".jpeg")} if lab_dir.is_dir() else {}
    return [(imgs[s], labs[s]) for s in sorted(set(imgs) & set(labs))]
