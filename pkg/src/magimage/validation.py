"""Input validation helpers shared by the estimator API."""
from __future__ import annotations

from typing import List, Sequence, Union

import numpy as np

from .image import DigitalImage

__all__ = ["as_image", "as_image_list", "as_binary_label", "check_paired"]

ImageLike = Union[DigitalImage, np.ndarray]


def as_image(x: ImageLike) -> DigitalImage:
    """Coerce an array (2-D gray or 3-D multi-channel) or DigitalImage."""
    if isinstance(x, DigitalImage):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D image array, got shape {arr.shape}")
    return DigitalImage(arr)


def as_image_list(X) -> List[DigitalImage]:
    """Accept a single image or a sequence of images; always return a list."""
    if isinstance(X, DigitalImage) or (isinstance(X, np.ndarray) and X.ndim in (2, 3)):
        return [as_image(X)]
    if isinstance(X, Sequence) or hasattr(X, "__iter__"):
        return [as_image(x) for x in X]
    raise TypeError(f"cannot interpret {type(X)!r} as image input")


def as_binary_label(y, threshold: float = 0.5) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    if arr.ndim != 2:
        raise ValueError(f"label must be a 2-D grid, got shape {arr.shape}")
    return (arr >= threshold).astype(np.float64)


def check_paired(images: List[DigitalImage], labels: List[np.ndarray]) -> None:
    if len(images) != len(labels):
        raise ValueError(f"{len(images)} images but {len(labels)} labels")
    for i, (img, lab) in enumerate(zip(images, labels)):
        if (img.height, img.width) != lab.shape:
            raise ValueError(
                f"pair {i}: image {img.height}x{img.width} vs label {lab.shape}")
