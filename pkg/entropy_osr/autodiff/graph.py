"""
Reverse-mode differentiation over dense numpy arrays.

A :class:`Graph` is a tape. Every primitive appends one :class:`Node` holding
the op kind, the ids of its input nodes and its output :class:`Tensor`; node
ids are creation indices, so every input id is smaller than the id of the node
consuming it and the tape is acyclic by construction.

A graph is either built eagerly (create leaves, call primitives from
:mod:`entropy_osr.autodiff.ops`) or from a ``builder`` callable which
:meth:`Graph.forward` re-runs on fresh inputs. Re-runnable graphs are what
:func:`entropy_osr.autodiff.gradcheck.grad_check` perturbs.
"""
import dataclasses
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigError, GraphError, NumericError, ShapeError

log = logging.getLogger("entropy_osr.autodiff")

DTYPES = {"f64": np.float64, "f32": np.float32}

BackwardFn = Callable[[np.ndarray, Tuple[bool, ...]], Sequence[Optional[np.ndarray]]]


def resolve_dtype(width: Union[str, np.dtype, type]) -> np.dtype:
    if isinstance(width, str):
        try:
            return np.dtype(DTYPES[width])
        except KeyError:
            raise ConfigError(
                f"Unknown scalar width {width}, expecting one of {sorted(DTYPES)}",
                code="scalar_width",
            )
    return np.dtype(width)


class Tensor:
    """Dense real array, optionally bound to a node of a :class:`Graph`."""

    __slots__ = ("data", "requires_grad", "grad", "node_id", "graph", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node_id: Optional[int] = None
        self.graph: Optional["Graph"] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(
                f"Only a single element tensor can be converted to a scalar, got shape {self.shape}",
                location=f"node {self.node_id}",
            )
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops

        return ops.mul(other, self)

    def __neg__(self):
        from . import ops

        return ops.neg(self)

    def __repr__(self):
        where = f"node {self.node_id}" if self.node_id is not None else "unbound"
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, {where})"


@dataclasses.dataclass
class Node:
    id: int
    op: str
    inputs: Tuple[int, ...]
    output: Tensor
    backward: Optional[BackwardFn] = None
    # relu signs / max-pool winners, compared by grad_check to detect kinks
    pattern: Optional[np.ndarray] = None


class Graph:
    def __init__(self, builder: Callable[..., Tensor] = None, dtype="f64"):
        """
        :param builder: optional callable ``builder(graph, **leaves) -> Tensor``
               re-run by :meth:`forward`
        :param dtype: scalar width, ``f64`` (default) or ``f32``
        """
        self.builder = builder
        self.dtype = resolve_dtype(dtype)
        self.nodes: List[Node] = []
        self.leaves: Dict[str, Tensor] = {}
        self.inputs: Dict[str, Tuple[np.ndarray, bool]] = {}
        self.output: Optional[Tensor] = None
        self._backward_done = False

    def reset(self):
        self.nodes = []
        self.leaves = {}
        self.output = None
        self._backward_done = False

    def leaf(self, value, requires_grad=False, name=None) -> Tensor:
        if isinstance(value, Tensor):
            requires_grad = requires_grad or value.requires_grad
            name = name or value.name
            value = value.data
        data = np.array(value, dtype=self.dtype)
        tensor = self._record("leaf", (), data, None, requires_grad=requires_grad)
        tensor.name = name
        if name:
            self.leaves[name] = tensor
        return tensor

    def constant(self, value) -> Tensor:
        return self.leaf(value, requires_grad=False)

    def record(
        self,
        op: str,
        inputs: Sequence[Tensor],
        data: np.ndarray,
        backward: BackwardFn,
        pattern: np.ndarray = None,
    ) -> Tensor:
        for tensor in inputs:
            if tensor.graph is not self:
                raise GraphError(
                    f"Input of {op} belongs to a different graph",
                    location=f"node {len(self.nodes)}",
                )
        requires_grad = any(t.requires_grad for t in inputs)
        return self._record(
            op,
            tuple(t.node_id for t in inputs),
            data,
            backward,
            requires_grad=requires_grad,
            pattern=pattern,
        )

    def _record(self, op, input_ids, data, backward, requires_grad, pattern=None):
        node_id = len(self.nodes)
        data = np.asarray(data, dtype=self.dtype)
        if not np.all(np.isfinite(data)):
            raise NumericError(
                f"Non-finite value produced by {op} at node {node_id}",
                code="non_finite",
                location=f"node {node_id}",
                detail={"op": op, "node": node_id},
            )
        tensor = Tensor(data, requires_grad=requires_grad)
        tensor.node_id = node_id
        tensor.graph = self
        self.nodes.append(
            Node(
                id=node_id,
                op=op,
                inputs=tuple(input_ids),
                output=tensor,
                backward=backward,
                pattern=pattern,
            )
        )
        return tensor

    @property
    def next_id(self) -> int:
        return len(self.nodes)

    def forward(self, **inputs: Union[np.ndarray, Tensor, Any]) -> Tensor:
        """Re-runs the builder on ``inputs``.

        Plain arrays become constants, :class:`Tensor` values keep their
        ``requires_grad`` flag. All intermediate activations stay on the tape
        for :meth:`backward`.
        """
        if self.builder is None:
            raise GraphError("Graph has no builder to run", code="no_builder")
        self.reset()
        self.inputs = {}
        leaves = {}
        for name, value in inputs.items():
            if isinstance(value, Tensor):
                array, requires_grad = np.asarray(value.data), value.requires_grad
            else:
                array, requires_grad = np.asarray(value), False
            self.inputs[name] = (array, requires_grad)
            leaves[name] = self.leaf(array, requires_grad=requires_grad, name=name)
        output = self.builder(self, **leaves)
        if not isinstance(output, Tensor) or output.graph is not self:
            raise GraphError(
                "Builder must return a tensor of the graph it was given",
                code="builder_output",
            )
        self.output = output
        return output

    def rerun(self, **overrides: np.ndarray) -> Tensor:
        """Runs forward again with some input arrays replaced."""
        inputs = {}
        for name, (array, requires_grad) in self.inputs.items():
            if name in overrides:
                array = overrides[name]
            inputs[name] = Tensor(array, requires_grad=requires_grad)
        return self.forward(**inputs)

    def backward(self, output: Tensor = None) -> Dict[int, np.ndarray]:
        """Propagates d(output)/d(node) back to the leaves.

        :returns: map node id -> gradient array; every ``requires_grad`` leaf
                  also gets its ``grad`` populated
        """
        if output is None:
            output = self.output
        if output is None or output.graph is not self:
            raise GraphError("Backward needs an output produced by this graph")
        if self._backward_done:
            raise GraphError(
                "Backward called twice without a new forward",
                code="backward_twice",
                location=f"node {output.node_id}",
            )
        if output.size != 1:
            raise GraphError(
                f"Backward needs a scalar output, got shape {output.shape}",
                code="not_scalar",
                location=f"node {output.node_id}",
            )

        grads: Dict[int, np.ndarray] = {
            output.node_id: np.ones_like(output.data, dtype=self.dtype)
        }
        for node in reversed(self.nodes[: output.node_id + 1]):
            grad = grads.get(node.id)
            if grad is None or node.backward is None or not node.output.requires_grad:
                continue
            input_tensors = [self.nodes[i].output for i in node.inputs]
            needs = tuple(t.requires_grad for t in input_tensors)
            input_grads = node.backward(grad, needs)
            for input_id, need, input_grad in zip(node.inputs, needs, input_grads):
                if not need or input_grad is None:
                    continue
                if input_id in grads:
                    # fan-out: contributions of all consumers add up
                    grads[input_id] = grads[input_id] + input_grad
                else:
                    grads[input_id] = np.asarray(input_grad, dtype=self.dtype)

        for node in self.nodes:
            if node.op == "leaf" and node.output.requires_grad:
                grad = grads.get(node.id)
                node.output.grad = (
                    grad if grad is not None else np.zeros_like(node.output.data)
                )
        self._backward_done = True
        return grads

    def patterns(self) -> List[np.ndarray]:
        return [node.pattern for node in self.nodes if node.pattern is not None]

    def __len__(self):
        return len(self.nodes)


def forward(graph: Graph, inputs: Dict[str, Any]) -> Tensor:
    return graph.forward(**inputs)


def backward(graph: Graph, output: Tensor = None) -> Dict[int, np.ndarray]:
    return graph.backward(output)
