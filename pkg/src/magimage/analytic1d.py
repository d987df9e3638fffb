"""Closed-form magnitude measures of one-dimensional step images.

A step image on a domain of width ``w`` with ``m`` pixels jumps by
``gamma[i]`` (one value per channel) at each locus ``(i/m) * w``.  Its
magnitude measure has a constant density of 1/2 per unit length, atoms of
mass 1/2 at both domain ends, and an atom of mass

    (1 - exp(-sum_j |gamma[i, j]|)) / 2

at each step locus: the CDF of a unit exponential in the total step height.
``discretise`` turns a step image into a 1 x N pixel strip so the analytic
atoms can be compared against a dense matrix solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .image import DigitalImage

__all__ = ["StepImage1D", "MagnitudeMeasure1D", "analytic_measure",
           "analytic_total_mass", "line_image_scale", "discretise", "step_atom_mass"]


@dataclass(frozen=True)
class StepImage1D:
    """Piecewise-constant image on ``[0, width]`` with ``m`` equal pixels.

    gammas   (m-1, channels) step heights at loci (i/m)*width, i = 1..m-1
    offsets  (channels,) constant value of the leftmost pixel
    """

    width: float
    gammas: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        if not (self.width > 0):
            raise ValueError("domain width must be positive")
        g = np.atleast_2d(np.asarray(self.gammas, dtype=np.float64))
        c = np.atleast_1d(np.asarray(self.offsets, dtype=np.float64))
        if g.size == 0:
            g = g.reshape(0, c.shape[0])
        if g.shape[1] != c.shape[0]:
            raise ValueError(
                f"gammas have {g.shape[1]} channels but offsets have {c.shape[0]}")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "offsets", c)

    @property
    def m(self) -> int:
        """Pixel count."""
        return self.gammas.shape[0] + 1

    @property
    def channels(self) -> int:
        return self.offsets.shape[0]

    @property
    def loci(self) -> np.ndarray:
        """Step positions, strictly inside (0, width)."""
        m = self.m
        return self.width * np.arange(1, m) / m

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Channel values at positions ``xs``; H(0) = 0, so a sample exactly
        at a locus takes the left value."""
        xs = np.asarray(xs, dtype=np.float64)
        vals = np.tile(self.offsets, (xs.shape[0], 1))
        for locus, gamma in zip(self.loci, self.gammas):
            vals += np.where(xs[:, None] > locus, gamma[None, :], 0.0)
        return vals


@dataclass(frozen=True)
class MagnitudeMeasure1D:
    """Magnitude measure of a 1-D step image.

    Constant density 1/2 per unit length, atoms of 1/2 at 0 and ``width``,
    plus one atom per nonzero step.
    """

    width: float
    step_atoms: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)
    lebesgue_density: float = 0.5
    boundary_mass: float = 0.5

    @property
    def total_mass(self) -> float:
        return (2 * self.boundary_mass + self.lebesgue_density * self.width
                + sum(m for _, m in self.step_atoms))


def step_atom_mass(gamma_row: np.ndarray) -> float:
    """Atom mass of one step: channels add inside the exponential."""
    return 0.5 * (1.0 - np.exp(-np.abs(np.asarray(gamma_row, dtype=np.float64)).sum()))


def analytic_measure(img: StepImage1D) -> MagnitudeMeasure1D:
    """Closed-form magnitude measure; zero-height steps carry no atom."""
    atoms: List[Tuple[float, float]] = []
    for locus, gamma in zip(img.loci, img.gammas):
        mass = step_atom_mass(gamma)
        if mass > 0.0:
            atoms.append((float(locus), float(mass)))
    return MagnitudeMeasure1D(width=img.width, step_atoms=tuple(atoms))


def analytic_total_mass(img: StepImage1D) -> float:
    """Total mass: ``1 + width/2`` plus all step atoms."""
    return analytic_measure(img).total_mass


def line_image_scale(alpha_abs_sum: float) -> float:
    """Measure scale factor for a constant-slope image.

    A linear ramp with per-channel slopes summing (in absolute value) to
    ``alpha_abs_sum`` scales the base measure by ``alpha_abs_sum + 1``; a
    constant image gives 1.
    """
    if alpha_abs_sum < 0:
        raise ValueError("alpha_abs_sum must be nonnegative")
    return float(alpha_abs_sum) + 1.0


def discretise(img: StepImage1D, points_per_unit: int) -> DigitalImage:
    """Sample the step image on a uniform grid as a 1 x N pixel strip.

    ``N = round(width * points_per_unit)`` samples span ``[0, width]``
    inclusive, so for generic grids each step locus falls strictly between
    the two straddling samples.  A sample landing exactly on a locus takes
    the left value (H(0) = 0).
    """
    if points_per_unit < 2:
        raise ValueError("points_per_unit must be at least 2")
    n = int(round(img.width * points_per_unit))
    if n < 2:
        raise ValueError("grid too coarse for this domain width")
    xs = np.linspace(0.0, img.width, n)
    vals = img.sample(xs)
    return DigitalImage(vals[None, :, :])


def numeric_weights(img: StepImage1D, points_per_unit: int,
                    channel_weight: float = 1.0):
    """Dense-solve weights of the discretised strip, in domain units.

    Unlike a plain pixel strip (unit spacing), the sample coordinate here is
    the domain position, so the weights are directly comparable to the
    analytic measure: interior samples carry about half the grid spacing,
    boundary samples about 1/2, and samples flanking a step share the extra
    step mass.

    Returns ``(positions, weights, rcond)``.
    """
    from .magnitude import magnitude_vector  # local import to avoid a cycle
    from .metric import MetricSpec

    strip = discretise(img, points_per_unit)
    n = strip.width
    xs = np.linspace(0.0, img.width, n)
    vals = strip.data[0] * channel_weight
    feats = np.column_stack([xs, vals])
    result = magnitude_vector(feats, MetricSpec(base="l1"), shape=(1, n))
    return xs, result.weights[0], result.rcond
