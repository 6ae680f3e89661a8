from io import BytesIO

import numpy as np
import pytest
import yaml

from entropy_osr.data import (
    Dataset,
    SynthConfig,
    base_pattern,
    bilinear_resize,
    export_dataset,
    gen_synthetic,
    load_dir,
    make_rng,
    read_pgm,
    restrict,
    subsample_per_class,
    write_pgm,
)
from entropy_osr.data.writers.manifest import SIDECAR_NAME
from entropy_osr.errors import ConfigError, DataError


def test_synthetic_shapes_and_range():
    train, test = gen_synthetic(SynthConfig(n_classes=3, per_class=5, test_per_class=2, image_size=16))
    assert train.images.shape == (15, 16, 16)
    assert test.images.shape == (6, 16, 16)
    assert train.counts() == {0: 5, 1: 5, 2: 5}
    assert train.images.min() >= 0.0 and train.images.max() <= 1.0
    assert (train.split_tag, test.split_tag) == ("train", "test")


def test_synthetic_is_deterministic():
    cfg = SynthConfig(n_classes=3, per_class=4, image_size=16, seed=11)
    assert gen_synthetic(cfg) == gen_synthetic(cfg)
    other = gen_synthetic(SynthConfig(n_classes=3, per_class=4, image_size=16, seed=12))
    assert gen_synthetic(cfg)[0] != other[0]


def test_zero_difficulty_gives_identical_patterns():
    patterns = [base_pattern(k, 4, 16, 0.0) for k in range(4)]
    for pattern in patterns[1:]:
        np.testing.assert_array_equal(pattern, patterns[0])
    assert not np.array_equal(base_pattern(0, 4, 16, 0.8), base_pattern(1, 4, 16, 0.8))


def test_huge_looks_leave_the_base_pattern():
    cfg = SynthConfig(n_classes=3, per_class=2, test_per_class=3, image_size=16, speckle_looks=10**6)
    _, test = gen_synthetic(cfg)
    for image, label in zip(test.images, test.labels):
        pattern = np.clip(base_pattern(int(label), 3, 16, cfg.difficulty), 0.0, 1.0)
        assert np.abs(image - pattern).max() <= 0.05


def test_class_means_approach_the_base_pattern():
    def mean_error(per_class):
        train, _ = gen_synthetic(SynthConfig(n_classes=2, per_class=per_class, image_size=16, seed=5))
        errors = []
        for class_id in range(2):
            mean = train.images[train.labels == class_id].mean(axis=0)
            errors.append(np.abs(mean - base_pattern(class_id, 2, 16, 0.8)).mean())
        return max(errors)

    few, many = mean_error(4), mean_error(200)
    assert many < few / 2
    assert many < 0.03


@pytest.mark.parametrize(
    "kwargs",
    [{"n_classes": 1}, {"per_class": 0}, {"difficulty": 1.5}, {"speckle_looks": 0}, {"image_size": 8}],
)
def test_invalid_synth_config(kwargs):
    with pytest.raises(ConfigError):
        SynthConfig(**kwargs)


def test_dataset_is_read_only():
    train, _ = gen_synthetic(SynthConfig(n_classes=2, per_class=2, image_size=16))
    with pytest.raises(ValueError):
        train.images[0, 0, 0] = 1.0


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(images=np.zeros((2, 4, 4)), labels=[0], class_names=("a",))
    with pytest.raises(DataError):
        Dataset(images=np.zeros((1, 4, 4)), labels=[1], class_names=("a",))


def test_restrict_keeps_class_ids(tiny_train):
    subset = restrict(tiny_train, [3, 1])
    assert subset.class_ids == (1, 3)
    assert subset.class_names == tiny_train.class_names
    with pytest.raises(DataError):
        restrict(tiny_train, [])
    with pytest.raises(DataError):
        restrict(tiny_train, [9])


def test_subsample_per_class(tiny_train):
    assert subsample_per_class(tiny_train, 0) is tiny_train
    budget = subsample_per_class(tiny_train, 5)
    assert budget.counts() == {k: 5 for k in range(4)}


def test_pgm_round_trip():
    image = np.linspace(0.0, 1.0, 12).reshape(3, 4)
    buffer = BytesIO()
    write_pgm(buffer, image)
    buffer.seek(0)
    np.testing.assert_allclose(read_pgm(buffer), np.round(image * 255) / 255)


def test_pgm_header_with_comment():
    raw = b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 255])
    np.testing.assert_array_equal(read_pgm(BytesIO(raw)), [[0.0, 1.0]])


def test_white_pgm_is_all_ones():
    raw = b"P5\n3 2\n255\n" + bytes([255] * 6)
    np.testing.assert_array_equal(read_pgm(BytesIO(raw)), np.ones((2, 3)))


@pytest.mark.parametrize(
    "raw",
    [b"P2\n2 1\n255\n\x00\x01", b"P5\n2 1\n65535\n\x00\x01", b"P5\n2 2\n255\n\x00", b"P5\n2"],
)
def test_malformed_pgm(raw):
    with pytest.raises(DataError):
        read_pgm(BytesIO(raw))


def test_missing_pgm(tmp_path):
    with pytest.raises(DataError) as e:
        read_pgm(tmp_path / "nope.pgm")
    assert e.value.code == "missing_file"


def test_bilinear_resize():
    image = np.random.default_rng(0).uniform(size=(8, 8))
    np.testing.assert_array_equal(bilinear_resize(image, 8, 8), image)
    constant = np.full((5, 7), 0.25)
    np.testing.assert_allclose(bilinear_resize(constant, 16, 16), np.full((16, 16), 0.25))
    up = bilinear_resize(np.array([[0.0, 1.0]]), 1, 4)
    np.testing.assert_allclose(up, [[0.0, 0.25, 0.75, 1.0]])


def test_export_and_load(tmp_path):
    train, _ = gen_synthetic(SynthConfig(n_classes=3, per_class=3, image_size=16, seed=5))
    manifest = export_dataset(train, tmp_path / "train", echo={"seed": 5})
    loaded = load_dir(manifest, image_size=16)
    assert loaded.class_names == train.class_names
    np.testing.assert_array_equal(loaded.labels, train.labels)
    np.testing.assert_allclose(loaded.images, np.round(train.images * 255) / 255)

    sidecar = yaml.safe_load((tmp_path / "train" / SIDECAR_NAME).read_text())
    assert sidecar["seed"] == 5
    assert sidecar["splits"][0]["images"] == 9

    with pytest.raises(ConfigError):
        export_dataset(train, tmp_path / "train")


def test_load_with_pinned_class_names(tmp_path):
    train, _ = gen_synthetic(SynthConfig(n_classes=3, per_class=2, image_size=16))
    manifest = export_dataset(restrict(train, [2]), tmp_path / "only2")
    pinned = load_dir(manifest, image_size=16, class_names=train.class_names)
    assert pinned.class_ids == (2,)
    assert load_dir(manifest, image_size=16).class_ids == (0,)


def test_load_resizes(tmp_path):
    (tmp_path / "a").mkdir()
    write_pgm(tmp_path / "a" / "x.pgm", np.full((10, 6), 0.4))
    (tmp_path / "manifest.csv").write_text("a,a/x.pgm\n")
    loaded = load_dir(tmp_path / "manifest.csv", image_size=16)
    assert loaded.images.shape == (1, 16, 16)
    with pytest.raises(DataError):
        load_dir(tmp_path / "missing.csv")


def test_rng_streams_are_independent():
    a = make_rng(1, "episode", 0).integers(1 << 30, size=4)
    assert np.array_equal(a, make_rng(1, "episode", 0).integers(1 << 30, size=4))
    assert not np.array_equal(a, make_rng(1, "episode", 1).integers(1 << 30, size=4))
    assert not np.array_equal(a, make_rng(1, "partition", 0).integers(1 << 30, size=4))
    with pytest.raises(ConfigError):
        make_rng(1, "nope")
