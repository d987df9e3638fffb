import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from magimage import DigitalImage, MetricSpec, distance, featurize, similarity_matrix


# ---------------- MetricSpec validation ----------------

def test_channel_weight_must_be_nonnegative():
    with pytest.raises(ValueError):
        MetricSpec(channel_weight=-0.1)


def test_unknown_base_rejected():
    with pytest.raises(ValueError):
        MetricSpec(base="l3")


def test_hamming_with_embedding_rejected():
    class Dummy:
        def encode_image(self, data, s):
            return None
    with pytest.raises(ValueError):
        MetricSpec(base="hamming", embedding=Dummy())


# ---------------- featurize ----------------

def test_single_pixel():
    img = DigitalImage.from_array(np.array([[[0.5]]]))
    np.testing.assert_array_equal(featurize(img, MetricSpec()), [[0.0, 0.0, 0.5]])


def test_channel_scaling():
    img = DigitalImage.from_array(np.array([[[0.0], [1.0]]]))
    feats = featurize(img, MetricSpec(channel_weight=2.0))
    np.testing.assert_array_equal(feats, [[0.0, 0.0, 0.0], [1.0, 0.0, 2.0]])


def test_zero_weight_collapses_channels(rng):
    img = DigitalImage.from_array(rng.uniform(0, 1, (2, 2, 3)))
    feats = featurize(img, MetricSpec(channel_weight=0.0))
    assert np.all(feats[:, 2:] == 0.0)
    # pure coordinates remain distinct
    assert len({tuple(row) for row in feats}) == 4


def test_row_major_order():
    img = DigitalImage.from_array(np.arange(6.0).reshape(2, 3) / 10)
    feats = featurize(img, MetricSpec())
    np.testing.assert_array_equal(feats[:, 0], [0, 1, 2, 0, 1, 2])   # x
    np.testing.assert_array_equal(feats[:, 1], [0, 0, 0, 1, 1, 1])   # y


def test_injective_on_grid_positions(rng):
    img = DigitalImage.from_array(np.zeros((5, 4)))
    feats = featurize(img, MetricSpec())
    assert len({tuple(r) for r in feats}) == 20


# ---------------- distance ----------------

def test_l1_example():
    assert distance([0, 0, 0], [1, 0, 2], MetricSpec("l1")) == 3.0


def test_l2_example():
    assert distance([0, 0], [3, 4], MetricSpec("l2")) == 5.0


def test_hamming_example():
    assert distance([0, 0, 7], [0, 1, 7], MetricSpec("hamming")) == 1.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        distance([0, 0], [0, 0, 0], MetricSpec())


vectors = hnp.arrays(np.float64, st.integers(1, 6),
                     elements=st.floats(-50, 50, allow_nan=False))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_metric_axioms(data):
    dim = data.draw(st.integers(1, 5))
    elems = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
    a = np.array(data.draw(st.lists(elems, min_size=dim, max_size=dim)))
    b = np.array(data.draw(st.lists(elems, min_size=dim, max_size=dim)))
    c = np.array(data.draw(st.lists(elems, min_size=dim, max_size=dim)))
    for base in ("l1", "l2", "hamming"):
        spec = MetricSpec(base)
        dab, dba = distance(a, b, spec), distance(b, a, spec)
        assert dab == dba
        assert distance(a, a, spec) == 0.0
        assert dab <= distance(a, c, spec) + distance(c, b, spec) + 1e-9


def test_identity_of_indiscernibles_l1_l2():
    a, b = np.array([1.0, 2.0]), np.array([1.0, 2.0000001])
    assert distance(a, b, MetricSpec("l1")) > 0
    assert distance(a, b, MetricSpec("l2")) > 0


# ---------------- similarity matrix ----------------

def test_single_point_matrix():
    np.testing.assert_array_equal(similarity_matrix(np.array([[2.0]]), MetricSpec()),
                                  [[1.0]])


def test_two_points_ln2():
    z = similarity_matrix(np.array([[0.0], [np.log(2.0)]]), MetricSpec())
    np.testing.assert_allclose(z, [[1.0, 0.5], [0.5, 1.0]], atol=1e-15)


def test_three_collinear_points():
    z = similarity_matrix(np.array([[0.0], [1.0], [2.0]]), MetricSpec())
    np.testing.assert_allclose(z[0], [1.0, np.exp(-1), np.exp(-2)], atol=1e-15)


def test_entries_positive_bounded_and_symmetric(rng):
    feats = rng.uniform(-3, 3, (30, 4))
    z = similarity_matrix(feats, MetricSpec("l2"))
    assert np.all(z > 0.0) and np.all(z <= 1.0)
    np.testing.assert_array_equal(z, z.T)
    np.testing.assert_array_equal(np.diag(z), np.ones(30))


def test_duplicates_allowed_at_build_time():
    z = similarity_matrix(np.array([[1.0], [1.0]]), MetricSpec())
    np.testing.assert_array_equal(z, np.ones((2, 2)))


def test_empty_rejected():
    with pytest.raises(ValueError):
        similarity_matrix(np.zeros((0, 2)), MetricSpec())
