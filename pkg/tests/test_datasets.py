import numpy as np
import pytest

from magimage.datasets import biped_pairs, load_pairs, save_pairs, synthetic_blocks, synthetic_textures
from magimage.image import DigitalImage


def test_synthetic_blocks_deterministic():
    a = synthetic_blocks(3, size=(24, 24), seed=7)
    b = synthetic_blocks(3, size=(24, 24), seed=7)
    for (ia, la), (ib, lb) in zip(a, b):
        np.testing.assert_array_equal(ia, ib)
        np.testing.assert_array_equal(la, lb)


def test_synthetic_blocks_differ_across_seeds():
    a = synthetic_blocks(1, size=(24, 24), seed=1)[0][0]
    b = synthetic_blocks(1, size=(24, 24), seed=2)[0][0]
    assert not np.array_equal(a, b)


def test_synthetic_labels_are_thin_lines():
    for img, lab in synthetic_blocks(4, size=(32, 32), seed=3):
        assert set(np.unique(lab)) <= {0.0, 1.0}
        assert lab.sum() > 0
        assert img.shape == (32, 32, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0


def test_synthetic_edges_lie_on_contrast():
    img, lab = synthetic_blocks(1, size=(32, 32), noise=0.0, seed=5)[0]
    cols = np.nonzero(lab[0])[0]
    for c in cols:
        step = np.abs(img[:, c] - img[:, c - 1]).sum(axis=1)
        assert step.max() > 0.1


def test_textures_deterministic():
    a = synthetic_textures(2, size=(16, 16), seed=4)
    b = synthetic_textures(2, size=(16, 16), seed=4)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_save_load_roundtrip(tmp_path):
    pairs = synthetic_blocks(3, size=(16, 16), seed=11)
    save_pairs(pairs, tmp_path / "images", tmp_path / "labels")
    loaded = list(load_pairs(tmp_path / "images", tmp_path / "labels"))
    assert len(loaded) == 3
    img, lab = loaded[0]
    assert isinstance(img, DigitalImage)
    np.testing.assert_array_equal(np.unique(lab), [0.0, 1.0])
    np.testing.assert_array_equal(lab, pairs[0][1])


def test_save_pairs_byte_identical(tmp_path):
    pairs = synthetic_blocks(2, size=(16, 16), seed=11)
    save_pairs(pairs, tmp_path / "a" / "images", tmp_path / "a" / "labels")
    save_pairs(pairs, tmp_path / "b" / "images", tmp_path / "b" / "labels")
    for sub in ("images/0000.png", "labels/0001.png"):
        assert (tmp_path / "a" / sub).read_bytes() == (tmp_path / "b" / sub).read_bytes()


def test_unpaired_files_skipped_with_warning(tmp_path):
    pairs = synthetic_blocks(2, size=(8, 8), seed=0)
    save_pairs(pairs, tmp_path / "images", tmp_path / "labels")
    (tmp_path / "images" / "orphan.png").write_bytes(
        (tmp_path / "images" / "0000.png").read_bytes())
    with pytest.warns(UserWarning, match="orphan"):
        loaded = list(load_pairs(tmp_path / "images", tmp_path / "labels"))
    assert len(loaded) == 2


def test_empty_dirs_yield_nothing(tmp_path):
    (tmp_path / "images").mkdir()
    (tmp_path / "labels").mkdir()
    assert list(load_pairs(tmp_path / "images", tmp_path / "labels")) == []


def test_biped_layout_discovery(tmp_path):
    root = tmp_path / "BIPED"
    img_dir = root / "edges" / "imgs" / "test" / "rgbr" / "real"
    lab_dir = root / "edges" / "edge_maps" / "test" / "rgbr" / "real"
    img_dir.mkdir(parents=True)
    lab_dir.mkdir(parents=True)
    arr = np.zeros((4, 4))
    for stem in ("a", "b"):
        DigitalImage.from_array(arr).to_png(img_dir / f"{stem}.png")
        DigitalImage.from_array(arr).to_png(lab_dir / f"{stem}.png")
    DigitalImage.from_array(arr).to_png(img_dir / "unpaired.png")
    pairs = biped_pairs(root, "test")
    assert [p[0].stem for p in pairs] == ["a", "b"]


def test_biped_missing_returns_empty(tmp_path):
    assert biped_pairs(tmp_path / "nope") == []
