import dataclasses
import logging
from typing import Optional, Union

import numpy as np

from ..errors import GraphError, NumericError
from .graph import Graph, Tensor

log = logging.getLogger("entropy_osr.autodiff")


@dataclasses.dataclass
class GradCheckResult:
    leaf: str
    max_error: float
    checked: int
    excluded: int
    tol: float

    @property
    def passed(self):
        return self.max_error <= self.tol

    @property
    def json(self):
        return {
            "leaf": self.leaf,
            "max_error": self.max_error,
            "checked": self.checked,
            "excluded": self.excluded,
            "tol": self.tol,
            "passed": self.passed,
        }


def _same_patterns(left, right):
    return len(left) == len(right) and all(
        np.array_equal(a, b) for a, b in zip(left, right)
    )


def grad_check(
    graph: Graph,
    leaf: Union[str, Tensor],
    eps: float = 1e-5,
    tol: float = 1e-6,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> GradCheckResult:
    """Compares the analytic gradient of a leaf with central differences.

    The graph must have a builder and must have been run with :meth:`Graph.forward`.
    The error of one entry is ``|analytic - numeric| / max(1, |analytic|)``.
    Entries whose +eps and -eps runs disagree on any ReLU sign or max-pool winner
    sit on a kink and are excluded.

    :param max_entries: check only this many entries, sampled with ``seed``
    """
    if eps <= 0:
        raise GraphError(f"eps must be positive, got {eps}", code="eps")
    name = leaf.name if isinstance(leaf, Tensor) else leaf
    if name not in graph.inputs:
        raise GraphError(f"{name} is not an input of the graph", code="unknown_leaf")

    base_inputs = {n: array.copy() for n, (array, _) in graph.inputs.items()}
    output = graph.rerun()
    graph.backward(output)
    analytic = np.array(graph.leaves[name].grad, dtype=np.float64).reshape(-1)

    values = np.array(base_inputs[name], dtype=graph.dtype)
    flat_size = values.size
    if max_entries is not None and max_entries < flat_size:
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(flat_size, size=max_entries, replace=False))
    else:
        indices = np.arange(flat_size)

    max_error = 0.0
    checked = excluded = 0
    for index in indices:
        plus = values.copy().reshape(-1)
        plus[index] += eps
        f_plus = graph.rerun(**{name: plus.reshape(values.shape)}).item()
        patterns_plus = graph.patterns()

        minus = values.copy().reshape(-1)
        minus[index] -= eps
        f_minus = graph.rerun(**{name: minus.reshape(values.shape)}).item()
        patterns_minus = graph.patterns()

        if not _same_patterns(patterns_plus, patterns_minus):
            excluded += 1
            continue

        numeric = (f_plus - f_minus) / (2 * eps)
        if not np.isfinite(numeric):
            raise NumericError(
                f"Non-finite finite-difference estimate for {name}[{index}]",
                code="non_finite",
                location=f"{name}[{index}]",
            )
        error = abs(analytic[index] - numeric) / max(1.0, abs(analytic[index]))
        max_error = max(max_error, float(error))
        checked += 1

    graph.rerun(**base_inputs)
    result = GradCheckResult(
        leaf=name, max_error=max_error, checked=checked, excluded=excluded, tol=tol
    )
    log.info(
        "grad check %s: max error %.3e over %s entries (%s excluded)",
        name,
        max_error,
        checked,
        excluded,
    )
    return result
