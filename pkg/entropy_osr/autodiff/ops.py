"""
Differentiable primitives.

Every primitive takes tensors of one graph, checks its shape contract, computes
the output with numpy and records a backward closure. Backward closures get the
upstream gradient and a tuple telling which inputs need a gradient; they return
one gradient (or None) per input.
"""
from typing import Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError, ShapeError
from .graph import Graph, Tensor

Operand = Union[Tensor, float, int, np.ndarray]


def _graph_of(*operands: Operand) -> Graph:
    for operand in operands:
        if isinstance(operand, Tensor) and operand.graph is not None:
            return operand.graph
    raise ShapeError("At least one operand must be a tensor bound to a graph")


def _as_tensor(graph: Graph, value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        if value.graph is None:
            return graph.leaf(value)
        return value
    return graph.constant(value)


def _shape_error(graph: Graph, op: str, expected, actual):
    node = graph.next_id
    return ShapeError(
        f"Shape mismatch in {op} at node {node}: expected {expected}, got {actual}",
        code="shape_mismatch",
        location=f"node {node}",
        detail={"op": op, "node": node, "expected": str(expected), "actual": str(actual)},
    )


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(graph, op, a: Tensor, b: Tensor):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise _shape_error(graph, op, a.shape, b.shape)


# elementwise


def add(a: Operand, b: Operand) -> Tensor:
    graph = _graph_of(a, b)
    a, b = _as_tensor(graph, a), _as_tensor(graph, b)
    _broadcast_shape(graph, "add", a, b)

    def backward(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(g, b.shape) if needs[1] else None,
        )

    return graph.record("add", (a, b), a.data + b.data, backward)


def sub(a: Operand, b: Operand) -> Tensor:
    graph = _graph_of(a, b)
    a, b = _as_tensor(graph, a), _as_tensor(graph, b)
    _broadcast_shape(graph, "sub", a, b)

    def backward(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(-g, b.shape) if needs[1] else None,
        )

    return graph.record("sub", (a, b), a.data - b.data, backward)


def mul(a: Operand, b: Operand) -> Tensor:
    graph = _graph_of(a, b)
    a, b = _as_tensor(graph, a), _as_tensor(graph, b)
    _broadcast_shape(graph, "mul", a, b)

    def backward(g, needs):
        return (
            _unbroadcast(g * b.data, a.shape) if needs[0] else None,
            _unbroadcast(g * a.data, b.shape) if needs[1] else None,
        )

    return graph.record("mul", (a, b), a.data * b.data, backward)


def neg(x: Tensor) -> Tensor:
    graph = _graph_of(x)

    def backward(g, needs):
        return (-g,)

    return graph.record("neg", (x,), -x.data, backward)


def scale(x: Tensor, factor: float) -> Tensor:
    graph = _graph_of(x)
    factor = float(factor)

    def backward(g, needs):
        return (g * factor,)

    return graph.record("scale", (x,), x.data * factor, backward)


def relu(x: Tensor) -> Tensor:
    """max(x, 0); the subgradient at 0 is 0."""
    graph = _graph_of(x)
    mask = x.data > 0

    def backward(g, needs):
        return (g * mask,)

    return graph.record(
        "relu", (x,), np.where(mask, x.data, 0), backward, pattern=np.sign(x.data)
    )


def log(x: Tensor, floor: Optional[float] = None) -> Tensor:
    """Natural log; with ``floor`` set, entries below it are clamped and get no gradient."""
    graph = _graph_of(x)
    if floor is None:
        if np.any(x.data <= 0):
            node = graph.next_id
            raise NumericError(
                f"Log of a non-positive value at node {node}",
                code="non_finite",
                location=f"node {node}",
                detail={"op": "log", "node": node},
            )
        clamped, live = x.data, None
    else:
        live = x.data >= floor
        clamped = np.where(live, x.data, floor)

    def backward(g, needs):
        grad = g / clamped
        if live is not None:
            grad = grad * live
        return (grad,)

    return graph.record("log", (x,), np.log(clamped), backward)


# reductions


def _normalize_axis(axis, ndim):
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(a % ndim for a in axes)


def sum(x: Tensor, axis=None, keepdims=False) -> Tensor:  # noqa: A001 - mirrors numpy
    graph = _graph_of(x)
    axes = _normalize_axis(axis, x.data.ndim)
    out = np.sum(x.data, axis=axes, keepdims=keepdims)

    def backward(g, needs):
        if axes is not None and not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return graph.record("sum", (x,), out, backward)


def mean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    graph = _graph_of(x)
    axes = _normalize_axis(axis, x.data.ndim)
    count = x.size if axes is None else int(np.prod([x.shape[a] for a in axes]))
    if count == 0:
        raise _shape_error(graph, "mean", "non-empty reduction", x.shape)
    out = np.mean(x.data, axis=axes, keepdims=keepdims)

    def backward(g, needs):
        if axes is not None and not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return graph.record("mean", (x,), out, backward)


# normalizations


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    graph = _graph_of(x)
    if x.data.ndim == 0:
        raise _shape_error(graph, "softmax", "at least one axis", x.shape)
    shifted = x.data - np.max(x.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / np.sum(e, axis=-1, keepdims=True)

    def backward(g, needs):
        return (s * (g - np.sum(g * s, axis=-1, keepdims=True)),)

    return graph.record("softmax", (x,), s, backward)


def l2_normalize(x: Tensor, axis=-1) -> Tensor:
    graph = _graph_of(x)
    norm = np.sqrt(np.sum(x.data * x.data, axis=axis, keepdims=True))
    if np.any(norm == 0):
        node = graph.next_id
        raise NumericError(
            f"L2 normalization of a zero vector at node {node}",
            code="zero_norm",
            location=f"node {node}",
            detail={"op": "l2_normalize", "node": node},
        )
    y = x.data / norm

    def backward(g, needs):
        return ((g - y * np.sum(g * y, axis=axis, keepdims=True)) / norm,)

    return graph.record("l2_normalize", (x,), y, backward)


# linear algebra


def matmul(a: Operand, b: Operand) -> Tensor:
    graph = _graph_of(a, b)
    a, b = _as_tensor(graph, a), _as_tensor(graph, b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _shape_error(graph, "matmul", f"(n, {a.shape[-1]}) @ ({a.shape[-1]}, m)", (a.shape, b.shape))

    def backward(g, needs):
        return (
            g @ b.data.T if needs[0] else None,
            a.data.T @ g if needs[1] else None,
        )

    return graph.record("matmul", (a, b), a.data @ b.data, backward)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``x @ weight + bias`` with ``weight`` of shape (in, out)."""
    graph = _graph_of(x, weight, bias)
    if (
        x.data.ndim != 2
        or weight.data.ndim != 2
        or bias.data.ndim != 1
        or x.shape[1] != weight.shape[0]
        or weight.shape[1] != bias.shape[0]
    ):
        raise _shape_error(
            graph,
            "dense",
            "x (n, d), weight (d, m), bias (m,)",
            (x.shape, weight.shape, bias.shape),
        )

    def backward(g, needs):
        return (
            g @ weight.data.T if needs[0] else None,
            x.data.T @ g if needs[1] else None,
            g.sum(axis=0) if needs[2] else None,
        )

    return graph.record(
        "dense", (x, weight, bias), x.data @ weight.data + bias.data, backward
    )


def pairwise_sqdist(a: Tensor, b: Tensor) -> Tensor:
    """out[i, j] = ||a_i - b_j||^2 for a (n, d) and b (m, d)."""
    graph = _graph_of(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[1]:
        raise _shape_error(graph, "pairwise_sqdist", "(n, d) and (m, d)", (a.shape, b.shape))
    diff = a.data[:, None, :] - b.data[None, :, :]

    def backward(g, needs):
        weighted = 2.0 * g[:, :, None] * diff
        return (
            weighted.sum(axis=1) if needs[0] else None,
            -weighted.sum(axis=0) if needs[1] else None,
        )

    return graph.record(
        "pairwise_sqdist", (a, b), np.sum(diff * diff, axis=-1), backward
    )


def sort_rows(x: Tensor) -> Tensor:
    """Sorts every row of a matrix ascending; ties keep their column order."""
    graph = _graph_of(x)
    if x.data.ndim != 2:
        raise _shape_error(graph, "sort_rows", "(N, K)", x.shape)
    order = np.argsort(x.data, axis=1, kind="stable")

    def backward(g, needs):
        grad = np.zeros_like(g)
        np.put_along_axis(grad, order, g, axis=1)
        return (grad,)

    return graph.record(
        "sort_rows", (x,), np.take_along_axis(x.data, order, axis=1), backward, pattern=order
    )


# convolutional


def _im2col(padded: np.ndarray, k: int, height: int, width: int) -> np.ndarray:
    n, c = padded.shape[:2]
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * height * width, c * k * k)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Stride-1 convolution with zero "same" padding.

    x (N, C, H, W), weight (F, C, k, k) with odd k, bias (F,).
    """
    graph = _graph_of(x, weight, bias)
    if (
        x.data.ndim != 4
        or weight.data.ndim != 4
        or bias.data.ndim != 1
        or weight.shape[1] != x.shape[1]
        or weight.shape[2] != weight.shape[3]
        or weight.shape[2] % 2 != 1
        or bias.shape[0] != weight.shape[0]
    ):
        raise _shape_error(
            graph,
            "conv2d",
            "x (N, C, H, W), weight (F, C, k, k) with odd k, bias (F,)",
            (x.shape, weight.shape, bias.shape),
        )
    n, c, height, width = x.shape
    filters, _, k, _ = weight.shape
    pad = (k - 1) // 2
    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = _im2col(padded, k, height, width)
    w_mat = weight.data.reshape(filters, -1)
    out = (cols @ w_mat.T + bias.data).reshape(n, height, width, filters)

    def backward(g, needs):
        g_mat = g.transpose(0, 2, 3, 1).reshape(n * height * width, filters)
        dx = dw = db = None
        if needs[0]:
            # same-padded stride-1 convolution of g with the flipped, transposed kernel
            g_cols = _im2col(np.pad(g, ((0, 0), (0, 0), (pad, pad), (pad, pad))), k, height, width)
            w_flipped = weight.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(c, -1)
            dx = (g_cols @ w_flipped.T).reshape(n, height, width, c).transpose(0, 3, 1, 2)
        if needs[1]:
            dw = (g_mat.T @ cols).reshape(weight.shape)
        if needs[2]:
            db = g_mat.sum(axis=0)
        return dx, dw, db

    return graph.record(
        "conv2d", (x, weight, bias), out.transpose(0, 3, 1, 2), backward
    )


def _pool_windows(data: np.ndarray) -> np.ndarray:
    n, c, height, width = data.shape
    return (
        data.reshape(n, c, height // 2, 2, width // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, height // 2, width // 2, 4)
    )


def max_pool2d(x: Tensor) -> Tensor:
    """2x2 max-pool, stride 2; ties route the gradient to the first (row-major) maximum."""
    graph = _graph_of(x)
    if x.data.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
        raise _shape_error(graph, "max_pool2d", "(N, C, H, W) with even H and W", x.shape)
    n, c, height, width = x.shape
    windows = _pool_windows(x.data)
    winners = np.argmax(windows, axis=-1)
    out = np.take_along_axis(windows, winners[..., None], axis=-1)[..., 0]

    def backward(g, needs):
        grad_windows = np.zeros(windows.shape, dtype=g.dtype)
        np.put_along_axis(grad_windows, winners[..., None], g[..., None], axis=-1)
        return (
            grad_windows.reshape(n, c, height // 2, width // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, height, width),
        )

    return graph.record("max_pool2d", (x,), out, backward, pattern=winners)


def global_avg_pool(x: Tensor) -> Tensor:
    """Spatial mean of (N, C, H, W) feature maps, giving (N, C)."""
    graph = _graph_of(x)
    if x.data.ndim != 4:
        raise _shape_error(graph, "global_avg_pool", "(N, C, H, W)", x.shape)
    n, c, height, width = x.shape
    area = height * width

    def backward(g, needs):
        return (np.broadcast_to(g[:, :, None, None] / area, x.shape).copy(),)

    return graph.record("global_avg_pool", (x,), x.data.mean(axis=(2, 3)), backward)
