import dataclasses
import math

import numpy as np
import pytest

from entropy_osr.errors import CheckpointError, CheckpointVersionError, ConfigError, ShapeError
from entropy_osr.network import (
    Arch,
    Params,
    discriminate,
    dumps_checkpoint,
    embed,
    init_params,
    load_checkpoint,
    loads_checkpoint,
    save_checkpoint,
)
from entropy_osr.network.checkpoint import MAGIC


def test_default_arch_shapes():
    shapes = Arch().param_shapes()
    assert shapes["conv0.weight"] == (16, 1, 3, 3)
    assert shapes["conv3.weight"] == (64, 64, 3, 3)
    assert shapes["disc.weight"] == (4, 2)
    assert Arch(discriminator_input="embedding").param_shapes()["disc.weight"] == (64, 2)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"input_size": 20},
        {"kernel_size": 2},
        {"conv_channels": ()},
        {"discriminator_input": "logits"},
    ],
)
def test_invalid_arch(kwargs):
    with pytest.raises(ConfigError):
        Arch(**kwargs)


def test_init_is_seeded(tiny_arch):
    assert init_params(tiny_arch, 3) == init_params(tiny_arch, 3)
    assert init_params(tiny_arch, 3) != init_params(tiny_arch, 4)
    params = init_params(tiny_arch, 3)
    assert not params.arrays["conv0.bias"].any()
    bound = np.sqrt(6.0 / 9)
    assert np.abs(params.arrays["conv0.weight"]).max() <= bound


def test_params_are_validated(tiny_arch):
    arrays = dict(init_params(tiny_arch, 0).arrays)
    arrays["disc.bias"] = np.zeros(3)
    with pytest.raises(ShapeError):
        Params(tiny_arch, arrays, seed=0)


def test_sgd_step(tiny_arch):
    params = init_params(tiny_arch, 0)
    grads = {name: np.ones_like(a) for name, a in params.arrays.items()}
    stepped = params.sgd_step(grads, 0.5)
    assert stepped.step == 1
    np.testing.assert_allclose(stepped.arrays["disc.bias"], -0.5 * np.ones(2))
    assert params.step == 0


def test_embed_and_discriminate(tiny_arch, tiny_train):
    params = init_params(dataclasses.replace(tiny_arch, discriminator_input="embedding"), 0)
    features = embed(params, tiny_train.images[:5])
    assert features.shape == (5, 8)
    assert (features >= 0).all()
    np.testing.assert_allclose(embed(params, tiny_train.images[:5], batch_size=2), features)
    p_open = discriminate(params, features)
    assert p_open.shape == (5,)
    assert ((p_open > 0) & (p_open < 1)).all()


def test_init_spread_matches_uniform_bound():
    weight = init_params(Arch(), 0).arrays["conv1.weight"]
    assert weight.shape == (32, 16, 3, 3)
    bound = math.sqrt(6.0 / (16 * 3 * 3))
    assert np.abs(weight).max() <= bound
    assert weight.std() == pytest.approx(bound / math.sqrt(3.0), rel=0.1)


def test_zero_image_gives_zero_embedding(tiny_arch):
    params = init_params(tiny_arch, 0)
    assert all(not params.arrays[name].any() for name in params.names if name.endswith("bias"))
    np.testing.assert_array_equal(embed(params, np.zeros((3, 16, 16))), np.zeros((3, 8)))


def test_embedding_is_batch_independent(tiny_arch, tiny_train):
    params = init_params(tiny_arch, 4)
    images = tiny_train.images[:9]
    batch = embed(params, images)
    np.testing.assert_allclose(embed(params, images[3:4])[0], batch[3], rtol=1e-10, atol=1e-12)

    order = np.random.default_rng(0).permutation(len(images))
    np.testing.assert_allclose(embed(params, images[order]), batch[order], rtol=1e-10, atol=1e-12)


def test_default_arch_embeds_to_64():
    assert embed(init_params(Arch(), 0), np.random.default_rng(0).uniform(size=(2, 32, 32))).shape == (2, 64)


def _with_discriminator(params, weight, bias):
    arrays = dict(params.arrays)
    arrays["disc.weight"] = weight
    arrays["disc.bias"] = bias
    return Params(params.arch, arrays, seed=params.seed)


def test_zero_discriminator_is_undecided(tiny_arch):
    params = _with_discriminator(init_params(tiny_arch, 0), np.zeros((2, 2)), np.zeros(2))
    features = np.random.default_rng(1).normal(size=(4, 2))
    np.testing.assert_allclose(discriminate(params, features), 0.5, atol=1e-15)


@pytest.mark.parametrize("a,t", [(0.0, 2.5), (-1.0, -3.0), (4.0, 0.0)])
def test_discriminator_logit_gap_is_a_sigmoid(tiny_arch, a, t):
    params = _with_discriminator(init_params(tiny_arch, 0), np.zeros((2, 2)), np.array([a, a + t]))
    p_open = discriminate(params, np.ones((3, 2)))
    np.testing.assert_allclose(p_open, 1.0 / (1.0 + math.exp(-t)), rtol=1e-12)


def test_embed_rejects_wrong_size(tiny_arch):
    with pytest.raises(ShapeError):
        embed(init_params(tiny_arch, 0), np.zeros((2, 8, 8)))


def test_checkpoint_round_trip(tmp_path, tiny_arch):
    params = init_params(tiny_arch, 7).sgd_step(
        {name: np.full(a.shape, 0.1) for name, a in init_params(tiny_arch, 7).arrays.items()}, 0.01
    )
    path = save_checkpoint(params, tmp_path / "model.ckpt")
    loaded = load_checkpoint(path)
    assert loaded == params
    assert (loaded.seed, loaded.step, loaded.arch) == (7, 1, tiny_arch)
    with pytest.raises(ConfigError):
        save_checkpoint(params, path)
    save_checkpoint(params, path, force=True)


def test_checkpoint_is_byte_stable(tiny_arch):
    assert dumps_checkpoint(init_params(tiny_arch, 1)) == dumps_checkpoint(init_params(tiny_arch, 1))


def test_corrupt_checkpoints(tiny_arch):
    raw = dumps_checkpoint(init_params(tiny_arch, 1))
    with pytest.raises(CheckpointError) as e:
        loads_checkpoint(raw[:-10])
    assert e.value.code in ("truncated", "checksum")

    with pytest.raises(CheckpointError) as e:
        loads_checkpoint(raw[: len(MAGIC) + 2])
    assert e.value.code == "truncated"

    flipped = bytearray(raw)
    flipped[-20] ^= 0xFF
    with pytest.raises(CheckpointError) as e:
        loads_checkpoint(bytes(flipped))
    assert "checksum" in e.value.message

    with pytest.raises(CheckpointError):
        loads_checkpoint(b"NOTACKPT" + raw[len(MAGIC):])


@pytest.mark.parametrize(
    "old,new",
    [
        (b'"dtype"', b'"dtypf"'),
        (b'"version": 1', b'"version": 7'),
        (b'"tensors"', b'"tensorz"'),
    ],
)
def test_corrupt_header_byte_is_checksum_failure(tiny_arch, old, new):
    raw = dumps_checkpoint(init_params(tiny_arch, 1))
    assert old in raw
    with pytest.raises(CheckpointError) as e:
        loads_checkpoint(raw.replace(old, new, 1))
    assert not isinstance(e.value, CheckpointVersionError)
    assert e.value.code == "checksum"


def test_header_length_corruption(tiny_arch):
    raw = bytearray(dumps_checkpoint(init_params(tiny_arch, 1)))
    raw[len(MAGIC)] ^= 0x01
    with pytest.raises(CheckpointError) as e:
        loads_checkpoint(bytes(raw))
    assert e.value.code in ("header", "truncated")


def test_newer_checkpoint_version(tiny_arch):
    params = init_params(tiny_arch, 1)
    params.version = 99
    with pytest.raises(CheckpointVersionError):
        loads_checkpoint(dumps_checkpoint(params))


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError) as e:
        load_checkpoint(tmp_path / "nope.ckpt")
    assert e.value.message.startswith("checkpoint not found")
    assert e.value.exit_code == 3
