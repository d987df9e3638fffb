"""Estimator-style front end: fit/transform/predict with get_params.

These classes wrap the functional core so the detectors compose with
pipeline tooling that expects the usual estimator protocol.  ``get_params``
and ``set_params`` follow the standard introspection contract (constructor
arguments are stored unmodified under the same names), so cloning and grid
search utilities work without a hard dependency.
"""
from __future__ import annotations

import inspect
from typing import List, Optional

import numpy as np

from .approx import (PatchConfig, independence_magnitude, patched_magnitude,
                     rank1_magnitude)
from .edges import (EdgeMap, canny_pipeline, fit_canny_thresholds,
                    magnitude_edges, sobel_pipeline)
from .learn import TrainConfig, train, transform_image, validation_loss
from .magnitude import MagnitudeMap, image_magnitude
from .metric import MetricSpec
from .validation import as_binary_label, as_image_list, check_paired

__all__ = ["BaseEstimator", "MagnitudeTransformer", "SobelEdgeDetector",
           "CannyEdgeDetector", "MagnitudeEdgeDetector",
           "LearnedMagnitudeEdgeDetector"]


class BaseEstimator:
    """Parameter introspection base: constructor args are the parameters."""

    @classmethod
    def _param_names(cls) -> List[str]:
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values()
                if p.name != "self" and p.kind != p.VAR_KEYWORD]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "BaseEstimator":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class MagnitudeTransformer(BaseEstimator):
    """Image -> magnitude weight map under the chosen computation scheme.

    method          'dense', 'patched', 'independence' or 'rank1'
    base            base metric for the dense/patched solves
    channel_weight  contrast knob multiplying channel values
    patch_size      (height, width) tile for the patched method
    overlap         tile margin in pixels
    """

    def __init__(self, method: str = "patched", base: str = "l1",
                 channel_weight: float = 1.0, patch_size=(25, 25),
                 overlap: int = 2, pad_mode: str = "edge"):
        self.method = method
        self.base = base
        self.channel_weight = channel_weight
        self.patch_size = patch_size
        self.overlap = overlap
        self.pad_mode = pad_mode

    def fit(self, X=None, y=None) -> "MagnitudeTransformer":
        if self.method not in ("dense", "patched", "independence", "rank1"):
            raise ValueError(f"unknown method {self.method!r}")
        return self

    def _spec(self) -> MetricSpec:
        return MetricSpec(base=self.base, channel_weight=self.channel_weight)

    def transform_one(self, img) -> MagnitudeMap:
        img = as_image_list(img)[0]
        spec = self._spec()
        if self.method == "dense":
            return image_magnitude(img, spec)
        if self.method == "independence":
            return independence_magnitude(img, spec)
        if self.method == "rank1":
            return rank1_magnitude(img, spec)
        cfg = PatchConfig(self.patch_size[0], self.patch_size[1], self.overlap, spec)
        return patched_magnitude(img, cfg, pad_mode=self.pad_mode)

    def transform(self, X) -> List[MagnitudeMap]:
        self.fit()
        return [self.transform_one(img) for img in as_image_list(X)]


class SobelEdgeDetector(BaseEstimator):
    def __init__(self, blur_size: int = 5):
        self.blur_size = blur_size

    def fit(self, X=None, y=None) -> "SobelEdgeDetector":
        return self

    def transform(self, X) -> List[EdgeMap]:
        return [sobel_pipeline(img, self.blur_size) for img in as_image_list(X)]

    predict = transform


class CannyEdgeDetector(BaseEstimator):
    """Binary Canny detector; ``fit`` grid-searches the two thresholds."""

    def __init__(self, low: float = 0.1, high: float = 0.3, blur_size: int = 5,
                 sobel_size: int = 3, grid_step: float = 0.05):
        self.low = low
        self.high = high
        self.blur_size = blur_size
        self.sobel_size = sobel_size
        self.grid_step = grid_step
        self.low_ = None
        self.high_ = None

    def fit(self, X, y) -> "CannyEdgeDetector":
        images = as_image_list(X)
        labels = [as_binary_label(l) for l in y]
        check_paired(images, labels)
        self.low_, self.high_ = fit_canny_thresholds(
            images, labels, self.blur_size, self.sobel_size, self.grid_step)
        return self

    def predict(self, X) -> List[EdgeMap]:
        low = self.low_ if self.low_ is not None else self.low
        high = self.high_ if self.high_ is not None else self.high
        return [canny_pipeline(img, low, high, self.blur_size, self.sobel_size)
                for img in as_image_list(X)]

    transform = predict


class MagnitudeEdgeDetector(BaseEstimator):
    """The untrained magnitude detector (patched solve on the raw metric)."""

    def __init__(self, channel_weight: float = 1.0, patch_size=(25, 25),
                 overlap: int = 2, blur_size: int = 5, pad: int = 2):
        self.channel_weight = channel_weight
        self.patch_size = patch_size
        self.overlap = overlap
        self.blur_size = blur_size
        self.pad = pad

    def fit(self, X=None, y=None) -> "MagnitudeEdgeDetector":
        return self

    def _cfg(self) -> PatchConfig:
        spec = MetricSpec(base="l1", channel_weight=self.channel_weight)
        return PatchConfig(self.patch_size[0], self.patch_size[1], self.overlap, spec)

    def transform(self, X) -> List[EdgeMap]:
        cfg = self._cfg()
        return [magnitude_edges(img, cfg, blur_size=self.blur_size, pad=self.pad)
                for img in as_image_list(X)]

    predict = transform


class LearnedMagnitudeEdgeDetector(BaseEstimator):
    """Trainable pullback-metric detector.

    ``fit`` runs patch-wise gradient descent and keeps the checkpoint with
    the lowest validation loss; ``transform`` applies the learned embedding
    through the patched magnitude.
    """

    def __init__(self, architecture: str = "I", learning_rate: float = 1e-3,
                 lam: float = 1.0, epochs: Optional[int] = None,
                 scenario: str = "random", patch_size=(40, 40), overlap: int = 2,
                 channel_weight: float = 1.0, validation_fraction: float = 0.2,
                 seed: int = 0, blur_size: int = 1, pad: int = 2):
        self.architecture = architecture
        self.learning_rate = learning_rate
        self.lam = lam
        self.epochs = epochs
        self.scenario = scenario
        self.patch_size = patch_size
        self.overlap = overlap
        self.channel_weight = channel_weight
        self.validation_fraction = validation_fraction
        self.seed = seed
        self.blur_size = blur_size
        self.pad = pad
        self.model_ = None
        self.history_ = None

    def _train_config(self) -> TrainConfig:
        spec = MetricSpec(base="l1", channel_weight=self.channel_weight)
        patch = PatchConfig(self.patch_size[0], self.patch_size[1], self.overlap, spec)
        return TrainConfig(learning_rate=self.learning_rate, lam=self.lam,
                           patch=patch, epochs=self.epochs, scenario=self.scenario,
                           validation_fraction=self.validation_fraction,
                           seed=self.seed)

    def fit(self, X, y) -> "LearnedMagnitudeEdgeDetector":
        images = as_image_list(X)
        labels = [as_binary_label(l) for l in y]
        check_paired(images, labels)
        pairs = [(img.data, lab) for img, lab in zip(images, labels)]
        self.model_, self.history_ = train(pairs, self._train_config(),
                                           architecture=self.architecture)
        return self

    def transform(self, X) -> List[EdgeMap]:
        if self.model_ is None:
            raise RuntimeError("fit the detector before calling transform")
        cfg = self._train_config().patch
        return [transform_image(img, self.model_, cfg, blur_size=self.blur_size,
                                pad=self.pad) for img in as_image_list(X)]

    predict = transform

    def score_patch(self, img, label) -> float:
        """Validation-style loss of one full image treated as a patch."""
        if self.model_ is None:
            raise RuntimeError("fit the detector first")
        image = as_image_list(img)[0]
        return validation_loss(image.data, as_binary_label(label), self.model_,
                               self.channel_weight)
