import math

import numpy as np
import pytest

from entropy_osr.autodiff import Graph, ops
from entropy_osr.errors import ConfigError, DataError
from entropy_osr.losses import (
    class_probs,
    loss_entropy,
    loss_meta_ce,
    loss_open,
    loss_total,
    prototypes,
)


def test_uniform_meta_ce():
    graph = Graph()
    probs = graph.leaf(np.full((3, 4), 0.25))
    assert loss_meta_ce(probs, [0, 1, 3]).item() == pytest.approx(math.log(4), abs=1e-12)


def test_uniform_entropy():
    graph = Graph()
    probs = graph.leaf(np.full((2, 5), 0.2))
    assert loss_entropy(probs).item() == pytest.approx(-math.log(5), abs=1e-12)


def test_entropy_without_open_samples():
    graph = Graph()
    assert loss_entropy(graph.leaf(np.zeros((0, 3)))).item() == 0.0


def test_open_bce():
    graph = Graph()
    assert loss_open(graph.leaf(np.array([0.5])), [1]).item() == pytest.approx(math.log(2), abs=1e-12)
    p = np.array([0.9, 0.2])
    expected = -(math.log(0.9) + math.log(0.8)) / 2
    assert loss_open(graph.leaf(p), [1, 0]).item() == pytest.approx(expected, abs=1e-12)
    with pytest.raises(DataError):
        loss_open(graph.leaf(p), [1])


def test_open_bce_is_finite_at_extremes():
    graph = Graph()
    value = loss_open(graph.leaf(np.array([0.0, 1.0])), [1, 0]).item()
    assert value == pytest.approx(-math.log(1e-12))


def test_loss_total_weights():
    breakdown = loss_total(1.2, -0.7, 0.4)
    assert breakdown.total == pytest.approx(0.5 * 1.2 + 0.25 * -0.7 + 0.25 * 0.4, abs=1e-12)
    assert breakdown.weights == (0.5, 0.25, 0.25)
    assert breakdown.tensor is None


def test_loss_total_mixed_parts():
    graph = Graph()
    meta_ce = graph.leaf(np.array(1.2), requires_grad=True)
    breakdown = loss_total(meta_ce, 0.0, 0.4, lambda1=1.0, lambda2=0.0, lambda3=2.0)
    assert breakdown.total == pytest.approx(2.0, abs=1e-12)
    grads = graph.backward(breakdown.tensor)
    assert grads[meta_ce.node_id] == pytest.approx(1.0)


def test_negative_weight():
    with pytest.raises(ConfigError):
        loss_total(1.0, 1.0, 1.0, lambda2=-0.1)


def test_prototypes_match_class_means():
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(7, 3))
    labels = np.array([2, 0, 1, 0, 2, 2, 1])
    graph = Graph()
    protos = prototypes(graph.leaf(emb), labels, 3).data
    for j in range(3):
        np.testing.assert_allclose(protos[j], emb[labels == j].mean(axis=0), atol=1e-12)


def test_prototypes_missing_class():
    graph = Graph()
    with pytest.raises(DataError) as e:
        prototypes(graph.leaf(np.ones((2, 3))), [0, 2], 3)
    assert e.value.code == "missing_class"
    assert "[1]" in e.value.message
    with pytest.raises(DataError):
        prototypes(graph.leaf(np.ones((2, 3))), [0, 3], 3)


def _brute_force_probs(emb, protos, mode, tau):
    out = np.zeros((len(emb), len(protos)))
    for i, e in enumerate(emb):
        if mode == "features":
            e_n = e / np.linalg.norm(e)
            z = np.array([-np.sum((e_n - p / np.linalg.norm(p)) ** 2) for p in protos])
        else:
            d = np.array([-np.sum((e - p) ** 2) for p in protos])
            z = d / np.linalg.norm(d)
        w = np.exp(z / tau - np.max(z / tau))
        out[i] = w / w.sum()
    return out


@pytest.mark.parametrize("mode", ["features", "logits"])
def test_class_probs_match_brute_force(mode):
    rng = np.random.default_rng(1)
    emb = rng.normal(size=(5, 4))
    protos = rng.normal(size=(3, 4))
    graph = Graph()
    probs = class_probs(graph.leaf(emb), graph.leaf(protos), mode=mode, tau=0.1).data
    np.testing.assert_allclose(probs, _brute_force_probs(emb, protos, mode, 0.1), atol=1e-12)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_class_probs_validation():
    graph = Graph()
    emb = graph.leaf(np.ones((2, 3)))
    with pytest.raises(ConfigError):
        class_probs(emb, emb, tau=0.0)
    with pytest.raises(ConfigError):
        class_probs(emb, emb, mode="cosine")


def test_meta_ce_label_range():
    graph = Graph()
    with pytest.raises(DataError):
        loss_meta_ce(graph.leaf(np.full((2, 2), 0.5)), [0, 2])


def test_entropy_bounds():
    graph = Graph()
    assert loss_entropy(graph.leaf(np.array([[0.0, 1.0, 0.0]]))).item() == pytest.approx(0.0, abs=1e-9)
    rows = np.random.default_rng(2).dirichlet(np.ones(4), size=50)
    values = [loss_entropy(graph.leaf(row[None, :])).item() for row in rows]
    assert all(-math.log(4) - 1e-12 <= v <= 0 for v in values)


def test_class_probs_worked_example():
    graph = Graph()
    probs = class_probs(graph.leaf([[1.0, 0.0]]), graph.leaf([[1.0, 0.0], [0.0, 1.0]]), tau=0.1).data
    assert probs[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert probs[0, 1] == pytest.approx(2.06e-9, rel=1e-2)


@pytest.mark.parametrize("tau", [0.01, 0.1, 1.0, 10.0])
def test_most_probable_class_is_the_nearest_prototype(tau):
    rng = np.random.default_rng(3)
    emb = rng.normal(size=(40, 5))
    protos = rng.normal(size=(4, 5))
    graph = Graph()
    probs = class_probs(graph.leaf(emb), graph.leaf(protos), tau=tau).data
    unit_emb = emb / np.linalg.norm(emb, axis=1, keepdims=True)
    unit_protos = protos / np.linalg.norm(protos, axis=1, keepdims=True)
    distances = ((unit_emb[:, None, :] - unit_protos[None, :, :]) ** 2).sum(axis=-1)
    np.testing.assert_array_equal(probs.argmax(axis=1), distances.argmin(axis=1))
    assert (probs > 0).all()
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_entropy_is_stationary_at_uniform_probabilities():
    graph = Graph()
    logits = graph.leaf(np.zeros((2, 4)), requires_grad=True)
    value = loss_entropy(ops.softmax(logits))
    assert value.item() == pytest.approx(-math.log(4), abs=1e-12)
    graph.backward(value)
    np.testing.assert_allclose(logits.grad, np.zeros((2, 4)), atol=1e-12)


def test_weighted_total_worked_example():
    breakdown = loss_total(1.0, -1.386294, 0.693147)
    assert breakdown.total == pytest.approx(0.326713, abs=1e-6)


def test_doubling_weights_doubles_total():
    graph = Graph()
    parts = [graph.leaf(np.array(v), requires_grad=True) for v in (1.3, -0.9, 0.4)]
    single = loss_total(*parts, lambda1=0.5, lambda2=0.25, lambda3=0.25)
    double = loss_total(*parts, lambda1=1.0, lambda2=0.5, lambda3=0.5)
    assert double.total == pytest.approx(2 * single.total, abs=1e-12)
    assert (double.meta_ce, double.entropy_dist, double.open_bce) == (
        single.meta_ce,
        single.entropy_dist,
        single.open_bce,
    )
