"""Magnitude vectors of images and magnitude-based edge detection.

The package computes per-pixel magnitude weights of images exactly (dense
symmetric solves), analytically (closed-form 1-D step measures), and at
scale (rank-1, independence, and patched approximations), turns them into
edge detectors with an optionally learned pullback metric, and evaluates
both approximation quality and edge quality.
"""
from .analytic1d import (MagnitudeMeasure1D, StepImage1D, analytic_measure,
                         analytic_total_mass, discretise, line_image_scale,
                         numeric_weights)
from .approx import (PatchConfig, crop_boundary, independence_magnitude,
                     patched_magnitude, rank1_magnitude)
from .edges import (EdgeMap, canny_edges, canny_pipeline, gaussian_blur,
                    magnitude_edges, minmax_scale, nms_thin, sobel_edges,
                    sobel_pipeline, to_grayscale, zhang_suen)
from .evaluation import (ApproxReport, EdgeEvalReport, approx_report,
                         edge_eval, pr_at_threshold)
from .image import DigitalImage
from .learn import (EmbeddingModel, TrainConfig, load_checkpoint,
                    pullback_magnitude, save_checkpoint, train,
                    transform_image, validation_loss)
from .magnitude import (MagnitudeMap, NotInvertibleError, image_magnitude,
                        magnitude_scalar, magnitude_vector)
from .metric import MetricSpec, distance, featurize, similarity_matrix
from .topology import BettiCurve, betti_curve, betti_norm, betti_numbers
from .estimators import (CannyEdgeDetector, LearnedMagnitudeEdgeDetector,
                         MagnitudeEdgeDetector, MagnitudeTransformer,
                         SobelEdgeDetector)

__version__ = "0.1.0"

__all__ = [
    "DigitalImage", "MetricSpec", "MagnitudeMap", "NotInvertibleError",
    "featurize", "distance", "similarity_matrix", "magnitude_vector",
    "magnitude_scalar", "image_magnitude",
    "StepImage1D", "MagnitudeMeasure1D", "analytic_measure",
    "analytic_total_mass", "line_image_scale", "discretise", "numeric_weights",
    "PatchConfig", "rank1_magnitude", "independence_magnitude",
    "patched_magnitude", "crop_boundary",
    "EdgeMap", "to_grayscale", "gaussian_blur", "sobel_edges", "canny_edges",
    "magnitude_edges", "nms_thin", "zhang_suen", "minmax_scale",
    "sobel_pipeline", "canny_pipeline",
    "EmbeddingModel", "TrainConfig", "pullback_magnitude", "train",
    "transform_image", "validation_loss", "save_checkpoint", "load_checkpoint",
    "ApproxReport", "EdgeEvalReport", "approx_report", "pr_at_threshold",
    "edge_eval",
    "BettiCurve", "betti_curve", "betti_norm", "betti_numbers",
    "MagnitudeTransformer", "SobelEdgeDetector", "CannyEdgeDetector",
    "MagnitudeEdgeDetector", "LearnedMagnitudeEdgeDetector",
]
