"""Image containers and file I/O.

Images are kept as ``(height, width, channels)`` float64 arrays.  Channel
values coming from 8-bit files are divided by 255 so they live in [0, 1];
arrays built programmatically only need to be finite (synthetic step images
may exceed the unit range).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = ["DigitalImage", "write_pgm16", "read_csv_grid", "write_csv_grid"]


@dataclass(frozen=True)
class DigitalImage:
    """A pixel grid with unit spacing and ``channels`` values per pixel.

    ``data`` has shape ``(height, width, channels)``.  Pixel ``(row i,
    col j)`` sits at coordinates ``(x=j, y=i)``.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"image data must be 2-D or 3-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"empty image of shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @classmethod
    def from_array(cls, array) -> "DigitalImage":
        return cls(np.asarray(array, dtype=np.float64))

    @classmethod
    def from_png(cls, path) -> "DigitalImage":
        """Load an 8-bit grayscale or RGB PNG; values are scaled to [0, 1]."""
        with PILImage.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
            arr = np.asarray(im, dtype=np.float64) / 255.0
        return cls(arr)

    @classmethod
    def from_csv(cls, path) -> "DigitalImage":
        """Load a single-channel image from a plain-text CSV grid."""
        return cls(read_csv_grid(path))

    def to_png(self, path) -> None:
        """Write as 8-bit PNG (values clipped to [0, 1])."""
        arr = np.clip(self.data, 0.0, 1.0)
        out = np.round(arr * 255.0).astype(np.uint8)
        if out.shape[2] == 1:
            im = PILImage.fromarray(out[:, :, 0], mode="L")
        elif out.shape[2] == 3:
            im = PILImage.fromarray(out, mode="RGB")
        else:
            raise ValueError(f"cannot write {out.shape[2]}-channel image as PNG")
        im.save(path, format="PNG", compress_level=6)

    def gray(self) -> np.ndarray:
        """Mean over channels as a 2-D array (not the perceptual grayscale)."""
        return self.data.mean(axis=2)


def write_pgm16(path, values: np.ndarray) -> None:
    """Write a 2-D field as a min-max scaled 16-bit binary PGM preview."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("PGM preview expects a 2-D array")
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros_like(a) if hi <= lo else (a - lo) / (hi - lo)
    pix = np.round(scaled * 65535.0).astype(">u2")
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pix.tobytes())


def read_csv_grid(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"empty CSV grid: {path}")
    return np.asarray(rows, dtype=np.float64)


def write_csv_grid(path, values: np.ndarray) -> None:
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("CSV grid expects a 2-D array")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in a:
            w.writerow([repr(float(v)) for v in row])
