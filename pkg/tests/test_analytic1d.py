import numpy as np
import pytest

from magimage import (MetricSpec, StepImage1D, analytic_measure, analytic_total_mass,
                      discretise, line_image_scale, magnitude_vector, numeric_weights)


def step1(width=2.0, gamma=1.0, offset=0.0):
    return StepImage1D(width=width, gammas=np.array([[gamma]]),
                       offsets=np.array([offset]))


# ---------------- closed-form measure ----------------

def test_no_steps_total_mass():
    img = StepImage1D(width=2.0, gammas=np.zeros((0, 1)), offsets=np.array([0.3]))
    measure = analytic_measure(img)
    assert measure.step_atoms == ()
    assert measure.total_mass == pytest.approx(1 + 2.0 / 2)


def test_single_step_atom():
    measure = analytic_measure(step1(gamma=1.0))
    (locus, mass), = measure.step_atoms
    assert locus == pytest.approx(1.0)
    assert mass == pytest.approx(0.5 * (1 - np.exp(-1.0)))


def test_two_channel_step_atom():
    img = StepImage1D(width=2.0, gammas=np.array([[1.0, 1.0]]),
                      offsets=np.array([0.0, 0.0]))
    (_, mass), = analytic_measure(img).step_atoms
    assert mass == pytest.approx(0.43233235838169365)


def test_total_mass_formula():
    img = StepImage1D(width=3.0, gammas=np.array([[1.0], [1.0]]),
                      offsets=np.array([0.2]))
    expected = 1 + 1.5 + (1 - np.exp(-1.0))
    assert analytic_total_mass(img) == pytest.approx(expected)
    assert expected == pytest.approx(3.1321205588285577)


def test_saturated_step_adds_half():
    assert analytic_total_mass(step1(gamma=50.0)) == pytest.approx(2.5, abs=1e-9)


def test_zero_step_atom_omitted():
    img = StepImage1D(width=1.0, gammas=np.array([[0.0], [2.0]]),
                      offsets=np.array([0.0]))
    assert len(analytic_measure(img).step_atoms) == 1


def test_atom_mass_monotone_and_bounded():
    masses = [analytic_measure(step1(gamma=g)).step_atoms[0][1]
              for g in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert all(b > a for a, b in zip(masses, masses[1:]))
    assert all(m < 0.5 for m in masses)


def test_channel_additivity_of_measure():
    one = StepImage1D(width=2.0, gammas=np.array([[1.3]]), offsets=np.array([0.0]))
    two = StepImage1D(width=2.0, gammas=np.array([[1.3, 0.0]]),
                      offsets=np.array([0.0, 0.0]))
    assert analytic_measure(one).step_atoms == analytic_measure(two).step_atoms


# ---------------- line image scaling ----------------

def test_line_scale_values():
    assert line_image_scale(0.0) == 1.0
    assert line_image_scale(1.0) == 2.0
    assert line_image_scale(3.0) == 4.0   # multi-channel slopes (1, 2)


def test_line_scale_rejects_negative():
    with pytest.raises(ValueError):
        line_image_scale(-1.0)


# ---------------- discretisation ----------------

def test_discretise_constant():
    img = StepImage1D(width=1.0, gammas=np.zeros((0, 1)), offsets=np.array([0.7]))
    strip = discretise(img, 4)
    np.testing.assert_array_equal(strip.data[0, :, 0], [0.7] * 4)


def test_discretise_heaviside_convention():
    strip = discretise(step1(width=1.0, gamma=1.0, offset=0.25), 4)
    np.testing.assert_allclose(strip.data[0, :, 0], [0.25, 0.25, 1.25, 1.25])


def test_discretise_rejects_coarse_grid():
    with pytest.raises(ValueError):
        discretise(step1(), 1)


def flank_mass(img, points_per_unit):
    """Extra mass shared by the two samples straddling the single locus."""
    xs, weights, _ = numeric_weights(img, points_per_unit)
    spacing = xs[1] - xs[0]
    locus = img.loci[0]
    k = int(np.searchsorted(xs, locus, side="right")) - 1
    return weights[k] + weights[k + 1] - spacing


def test_numeric_flank_mass_frozen_values():
    # dense-solve oracle, frozen: the inner mass of a unit step approaches
    # tanh(1/2) = 0.4621..., not the closed-form atom 0.3161 (see ledger)
    img = step1(width=2.0, gamma=1.0)
    assert flank_mass(img, 200) == pytest.approx(0.4610, abs=2e-3)
    assert flank_mass(img, 400) == pytest.approx(0.4616, abs=2e-3)


def test_numeric_flank_mass_converges_to_gap_law():
    img = step1(width=2.0, gamma=1.0)
    limit = np.tanh(0.5)
    errs = [abs(flank_mass(img, k) - limit) for k in (100, 200, 400)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] < 0.01


def test_numeric_boundary_weight():
    # boundary sample owns half a grid cell: weight 1/(1+e^-h) = 1/2 + h/4
    xs, weights, _ = numeric_weights(step1(), 200)
    spacing = xs[1] - xs[0]
    assert weights[0] == pytest.approx(0.5 + spacing / 4, abs=1e-4)
    assert weights[len(xs) // 4] == pytest.approx(spacing / 2, abs=1e-4)


def test_numeric_channel_additivity():
    one = StepImage1D(width=2.0, gammas=np.array([[0.8]]), offsets=np.array([0.1]))
    two = StepImage1D(width=2.0, gammas=np.array([[0.8, 0.0]]),
                      offsets=np.array([0.1, 0.4]))
    _, w1, _ = numeric_weights(one, 100)
    _, w2, _ = numeric_weights(two, 100)
    np.testing.assert_allclose(w1, w2, atol=1e-8)


def test_validation():
    with pytest.raises(ValueError):
        StepImage1D(width=0.0, gammas=np.zeros((0, 1)), offsets=np.array([0.0]))
    with pytest.raises(ValueError):
        StepImage1D(width=1.0, gammas=np.array([[1.0, 2.0]]), offsets=np.array([0.0]))
