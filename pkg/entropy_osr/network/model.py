"""Embedding backbone (conv -> ReLU -> max-pool blocks, then GAP) and the open-set discriminator."""
from typing import Dict, Optional

import numpy as np

from ..autodiff import Graph, Tensor, ops
from ..errors import ShapeError
from .arch import Arch, Params

OPEN_SLOT = 1
"discriminator output index holding p(open | x)"


def _as_batch(graph: Graph, arch: Arch, images) -> Tensor:
    if isinstance(images, Tensor):
        images = images.data
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[:, None, :, :]
    if images.ndim != 4 or images.shape[1:] != (1, arch.input_size, arch.input_size):
        raise ShapeError(
            f"Expected a batch of {arch.input_size}x{arch.input_size} images, got shape {images.shape}",
            code="shape_mismatch",
            location=f"node {graph.next_id}",
        )
    return graph.constant(images)


def embed_graph(graph: Graph, leaves: Dict[str, Tensor], arch: Arch, images) -> Tensor:
    x = _as_batch(graph, arch, images)
    for block in range(len(arch.conv_channels)):
        x = ops.conv2d(x, leaves[f"conv{block}.weight"], leaves[f"conv{block}.bias"])
        x = ops.relu(x)
        x = ops.max_pool2d(x)
    return ops.global_avg_pool(x)


def discriminate_graph(graph: Graph, leaves: Dict[str, Tensor], features: Tensor) -> Tensor:
    """p(open | x) per row of ``features`` from one dense layer with softmax."""
    weight = leaves["disc.weight"]
    if features.data.ndim != 2 or features.shape[1] != weight.shape[0]:
        raise ShapeError(
            f"Discriminator expects features of width {weight.shape[0]}, got shape {features.shape}",
            code="shape_mismatch",
            location=f"node {graph.next_id}",
        )
    probs = ops.softmax(ops.dense(features, weight, leaves["disc.bias"]))
    return ops.sum(ops.mul(probs, np.eye(2)[OPEN_SLOT]), axis=1)


def embed(params: Params, images, batch_size: Optional[int] = None) -> np.ndarray:
    """Embeddings (N x embed_dim) of an image batch, without gradients."""
    images = np.asarray(images)
    if batch_size is None or len(images) <= batch_size:
        return _embed_chunk(params, images)
    chunks = [
        _embed_chunk(params, images[start : start + batch_size])
        for start in range(0, len(images), batch_size)
    ]
    return np.concatenate(chunks)


def _embed_chunk(params: Params, images) -> np.ndarray:
    graph = Graph(dtype=params.dtype)
    leaves = params.leaves(graph, requires_grad=False)
    return embed_graph(graph, leaves, params.arch, images).data


def discriminate(params: Params, features) -> np.ndarray:
    graph = Graph(dtype=params.dtype)
    leaves = params.leaves(graph, requires_grad=False)
    return discriminate_graph(graph, leaves, graph.constant(features)).data
