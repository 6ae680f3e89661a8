"""
Graph pieces shared by training and decision making.

Adaptation to a task is non-parametric: the prototypes are the class means of
the support embeddings, no inner gradient step is taken.
"""
from typing import Dict, Tuple

import numpy as np

from ..autodiff import Graph, Tensor, ops
from ..errors import DataError
from ..losses import class_probs, prototypes
from ..network import Arch, Params, discriminate_graph, embed, embed_graph


def open_features(graph: Graph, embedding: Tensor, protos: Tensor, arch: Arch) -> Tensor:
    """Discriminator input: the embedding itself, or the ``arch.n_closed`` smallest
    squared distances between the normalized embedding and the prototypes, in
    ascending order.

    Sorting makes the distance features independent of which known class sits in
    which prototype row, so tasks with more known classes than ``arch.n_closed``
    keep the nearest ones.
    """
    if arch.discriminator_input != "distances":
        return embedding
    k = protos.shape[0]
    if k < arch.n_closed:
        raise DataError(
            f"Distance discriminator needs at least {arch.n_closed} known classes, got {k}",
            code="too_few_known",
            location="n_known",
        )
    distances = ops.sort_rows(
        ops.pairwise_sqdist(ops.l2_normalize(embedding, axis=1), ops.l2_normalize(protos, axis=1))
    )
    if k == arch.n_closed:
        return distances
    return ops.matmul(distances, np.eye(k)[:, : arch.n_closed])


def score_embedding(
    graph: Graph, leaves: Dict[str, Tensor], arch: Arch, protos: Tensor, embedding: Tensor, mode: str, tau: float
) -> Tuple[Tensor, Tensor]:
    """(class probabilities, p_open) of already embedded samples."""
    probs = class_probs(embedding, protos, mode=mode, tau=tau)
    p_open = discriminate_graph(graph, leaves, open_features(graph, embedding, protos, arch))
    return probs, p_open


def score_graph(
    graph: Graph,
    leaves: Dict[str, Tensor],
    arch: Arch,
    protos: Tensor,
    images,
    mode: str,
    tau: float,
) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (embedding, class probabilities, p_open) of an image batch."""
    embedding = embed_graph(graph, leaves, arch, images)
    probs, p_open = score_embedding(graph, leaves, arch, protos, embedding, mode, tau)
    return embedding, probs, p_open


def support_prototypes(params: Params, support_images, support_labels, k: int, batch_size=None) -> np.ndarray:
    """Prototype matrix (K x D) from a labeled support set, without gradients."""
    embeddings = embed(params, support_images, batch_size=batch_size)
    graph = Graph(dtype=params.dtype)
    return prototypes(graph.constant(embeddings), support_labels, k).data


def score_images(params: Params, protos: np.ndarray, images, mode: str, tau: float):
    """numpy (embeddings, class probabilities, p_open) for a batch of images."""
    graph = Graph(dtype=params.dtype)
    leaves = params.leaves(graph, requires_grad=False)
    embedding, probs, p_open = score_graph(
        graph, leaves, params.arch, graph.constant(protos), images, mode, tau
    )
    return embedding.data, probs.data, p_open.data
