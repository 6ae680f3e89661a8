"""
Gradient self-test.

Checks every differentiable primitive, two-class toy episodes on 4-dim features
and the full episode loss at the configured architecture against central
differences.
"""
import dataclasses
import logging
from typing import Callable, Dict, List, Tuple

import numpy as np

from .autodiff import Graph, GradCheckResult, Tensor, grad_check, ops
from .data.rng import make_rng
from .data.synthetic import gen_synthetic
from .data.types import SynthConfig
from .episodes import draw_partition, sample_episode
from .losses import class_probs, loss_entropy, loss_meta_ce, loss_open, loss_total, prototypes
from .meta.trainer import episode_graph
from .meta.types import TrainConfig
from .network import Arch, init_params

log = logging.getLogger("entropy_osr.selftest")

Case = Tuple[Callable[..., Tensor], Dict[str, np.ndarray]]


def primitive_cases(rng: np.random.Generator) -> Dict[str, Case]:
    """op name -> (function of the named inputs, input arrays)."""

    def away_from_zero(*shape):
        x = rng.normal(size=shape)
        return x + np.sign(x) * 0.1

    return {
        "add": (ops.add, {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(4,))}),
        "sub": (ops.sub, {"a": rng.normal(size=(3, 1)), "b": rng.normal(size=(3, 4))}),
        "mul": (ops.mul, {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(1, 4))}),
        "relu": (ops.relu, {"x": away_from_zero(3, 5)}),
        "log": (ops.log, {"x": rng.uniform(0.5, 2.0, size=(4, 3))}),
        "sum": (lambda x: ops.sum(x, axis=1), {"x": rng.normal(size=(3, 4))}),
        "mean": (lambda x: ops.mean(x, axis=0), {"x": rng.normal(size=(3, 4))}),
        "softmax": (ops.softmax, {"x": rng.normal(size=(3, 5))}),
        "l2_normalize": (lambda x: ops.l2_normalize(x, axis=1), {"x": rng.normal(size=(3, 4))}),
        "matmul": (ops.matmul, {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(4, 2))}),
        "dense": (
            lambda x, weight, bias: ops.dense(x, weight, bias),
            {"x": rng.normal(size=(3, 4)), "weight": rng.normal(size=(4, 2)), "bias": rng.normal(size=(2,))},
        ),
        "pairwise_sqdist": (
            ops.pairwise_sqdist,
            {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(2, 4))},
        ),
        "conv2d": (
            lambda x, weight, bias: ops.conv2d(x, weight, bias),
            {
                "x": rng.normal(size=(2, 2, 4, 4)),
                "weight": rng.normal(size=(3, 2, 3, 3)),
                "bias": rng.normal(size=(3,)),
            },
        ),
        # distinct values, so no max-pool window holds a tie
        "max_pool2d": (ops.max_pool2d, {"x": rng.permutation(32).reshape(1, 2, 4, 4) / 8.0}),
        "global_avg_pool": (ops.global_avg_pool, {"x": rng.normal(size=(2, 3, 2, 2))}),
        "sort_rows": (ops.sort_rows, {"x": rng.permutation(12).reshape(3, 4) / 4.0}),
    }


def scalarized(fn: Callable[..., Tensor], rng: np.random.Generator):
    """Builder reducing ``fn``'s output with a random functional fixed on the first run."""
    weights = {}

    def builder(graph, **leaves):
        out = fn(**leaves)
        if "w" not in weights:
            weights["w"] = rng.normal(size=out.shape)
        return ops.sum(ops.mul(out, weights["w"]))

    return builder


def check_graph(graph: Graph, inputs, prefix, eps, tol, max_entries=None, seed=0) -> List[GradCheckResult]:
    graph.forward(**{name: Tensor(value, requires_grad=True) for name, value in inputs.items()})
    results = []
    for name in inputs:
        result = grad_check(graph, name, eps=eps, tol=tol, max_entries=max_entries, seed=seed)
        result.leaf = f"{prefix}:{name}"
        results.append(result)
    return results


def check_primitives(seed=0, eps=1e-5, tol=1e-6) -> List[GradCheckResult]:
    results = []
    cases = primitive_cases(make_rng(seed, "gradcheck", 0))
    for index, (op, (fn, inputs)) in enumerate(cases.items()):
        builder = scalarized(fn, make_rng(seed, "gradcheck", 1, index))
        results.extend(check_graph(Graph(builder), inputs, op, eps, tol))
    return results


def toy_episode_inputs(rng: np.random.Generator, dim=4, per_class=3, n_open=3):
    """Random 2-class episode on ``dim``-dim features plus a linear embedding and a discriminator."""
    return {
        "support": rng.normal(size=(2 * per_class, dim)) + np.repeat([[2.0] * dim, [-2.0] * dim], per_class, axis=0),
        "query": rng.normal(size=(2 * per_class, dim)) + np.repeat([[2.0] * dim, [-2.0] * dim], per_class, axis=0),
        "unknown": rng.normal(size=(n_open, dim)),
        "embed_weight": rng.normal(size=(dim, dim)),
        "embed_bias": rng.normal(size=(dim,)) * 0.1,
        "disc_weight": rng.normal(size=(dim, 2)),
        "disc_bias": rng.normal(size=(2,)) * 0.1,
    }


def toy_episode_builder(per_class=3, n_open=3, tau=1.0, mode="features"):
    support_labels = np.repeat([0, 1], per_class)
    query_labels = np.repeat([0, 1], per_class)

    def builder(graph, support, query, unknown, embed_weight, embed_bias, disc_weight, disc_bias):
        protos = prototypes(ops.dense(support, embed_weight, embed_bias), support_labels, 2)
        n_query = len(query_labels)
        targets = ops.dense(
            ops.matmul(np.eye(n_query + n_open)[:, :n_query], query)
            + ops.matmul(np.eye(n_query + n_open)[:, n_query:], unknown),
            embed_weight,
            embed_bias,
        )
        probs = class_probs(targets, protos, mode=mode, tau=tau)
        select_query = np.eye(n_query + n_open)[:n_query]
        select_open = np.eye(n_query + n_open)[n_query:]
        meta_ce = loss_meta_ce(ops.matmul(select_query, probs), query_labels)
        entropy = loss_entropy(ops.matmul(select_open, probs))
        p_open = ops.sum(
            ops.mul(ops.softmax(ops.dense(targets, disc_weight, disc_bias)), np.array([0.0, 1.0])),
            axis=1,
        )
        open_bce = loss_open(p_open, np.concatenate([np.zeros(n_query), np.ones(n_open)]))
        return loss_total(meta_ce, entropy, open_bce).tensor

    return builder


def check_toy_episodes(trials=1, seed=0, eps=1e-5, tol=1e-6) -> List[GradCheckResult]:
    results = []
    for trial in range(trials):
        inputs = toy_episode_inputs(make_rng(seed, "gradcheck", 2, trial))
        results.extend(check_graph(Graph(toy_episode_builder()), inputs, f"toy[{trial}]", eps, tol))
    return results


def check_episode_loss(
    arch: Arch, cfg: TrainConfig, eps=1e-5, tol=1e-6, max_entries=20, seed=0
) -> List[GradCheckResult]:
    """Episode loss at ``arch`` on a tiny synthetic episode, sampled entries per parameter."""
    synth = SynthConfig(n_classes=cfg.n_closed + 1, per_class=2, image_size=arch.input_size, seed=seed)
    train, _ = gen_synthetic(synth)
    small = cfg.replace(n_support=1, n_query=1, n_open=2)
    partition = draw_partition(train.class_ids, small.n_closed, make_rng(seed, "gradcheck", 3))
    episode = sample_episode(train, partition, 1, 1, 2, make_rng(seed, "gradcheck", 4))
    params = init_params(arch, seed, small.scalar_width)
    graph = episode_graph(arch, episode, small)
    return check_graph(
        graph, dict(params.arrays), "episode", eps, tol, max_entries=max_entries or None, seed=seed
    )


@dataclasses.dataclass
class SelfTestReport:
    results: List[GradCheckResult]

    @property
    def max_error(self) -> float:
        return max((r.max_error for r in self.results), default=0.0)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def json(self):
        return {
            "max_error": self.max_error,
            "passed": self.passed,
            "checks": [r.json for r in self.results],
        }


def run_self_test(
    arch: Arch, cfg: TrainConfig, eps=1e-5, tol=1e-6, max_entries=20, seed=0
) -> SelfTestReport:
    results = check_primitives(seed=seed, eps=eps, tol=tol)
    results += check_toy_episodes(seed=seed, eps=eps, tol=tol)
    results += check_episode_loss(arch, cfg, eps=eps, tol=tol, max_entries=max_entries, seed=seed)
    report = SelfTestReport(results)
    log.info("Self-test max error %.3e (%s)", report.max_error, "passed" if report.passed else "FAILED")
    return report
