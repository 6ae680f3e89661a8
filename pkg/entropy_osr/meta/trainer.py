"""
Episodic meta-training.

Each episode adapts to its support set by computing prototypes, then takes one
plain SGD step (no momentum) on the entropy-awareness loss of the query and
open samples. Episodes run strictly in sequence.
"""
import dataclasses
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..autodiff import Graph, Tensor, ops
from ..data.rng import make_rng
from ..data.types import Dataset, subsample_per_class
from ..episodes import Episode, draw_partition, sample_episode
from ..errors import ConfigError, DataError, GraphError, NumericError, ShapeError
from ..losses import LossBreakdown, loss_entropy, loss_meta_ce, loss_open, loss_total, prototypes
from ..network import Arch, Params, embed_graph, init_params
from .adapt import score_embedding
from .callbacks import TrainingCallback
from .schedule import lr
from .types import TrainConfig

log = logging.getLogger("entropy_osr.meta")


def _selector(rows: range, n: int) -> np.ndarray:
    return np.eye(n)[list(rows)]


def episode_loss(
    graph: Graph, leaves: Dict[str, Tensor], arch: Arch, episode: Episode, cfg: TrainConfig
) -> LossBreakdown:
    """Builds the loss of one episode on ``graph``.

    Support, query and open samples are embedded as one batch; constant 0/1
    selector matrices split the rows again.
    """
    n_support = len(episode.support_images)
    n_query, n_open = len(episode.query_images), len(episode.open_images)
    n = n_support + n_query + n_open
    images = np.concatenate([episode.support_images, episode.query_images, episode.open_images])
    embedding = embed_graph(graph, leaves, arch, images)

    support = ops.matmul(_selector(range(n_support), n), embedding)
    protos = prototypes(support, episode.support_labels, episode.n_way)
    targets = ops.matmul(_selector(range(n_support, n), n), embedding)
    probs, p_open = score_embedding(graph, leaves, arch, protos, targets, cfg.mode, cfg.tau)

    n_targets = n_query + n_open
    meta_ce = loss_meta_ce(ops.matmul(_selector(range(n_query), n_targets), probs), episode.query_labels)
    if n_open:
        entropy_dist = loss_entropy(ops.matmul(_selector(range(n_query, n_targets), n_targets), probs))
    else:
        entropy_dist = graph.constant(0.0)
    beta = np.concatenate([np.zeros(n_query), np.ones(n_open)])
    open_bce = loss_open(p_open, beta)
    return loss_total(meta_ce, entropy_dist, open_bce, *cfg.lambdas)


def episode_graph(arch: Arch, episode: Episode, cfg: TrainConfig) -> Graph:
    """Re-runnable graph of the episode loss; its inputs are the parameters by name."""

    def builder(graph, **leaves):
        return episode_loss(graph, leaves, arch, episode, cfg).tensor

    return Graph(builder, dtype=cfg.scalar_width)


def train_episode(
    params: Params, episode: Episode, cfg: TrainConfig, episode_idx: int
) -> Tuple[Params, LossBreakdown]:
    """One outer update; returns the new parameters and the pre-update losses."""
    step_lr = lr(episode_idx, cfg)
    graph = Graph(dtype=params.dtype)
    leaves = params.leaves(graph, requires_grad=True)
    try:
        breakdown = episode_loss(graph, leaves, params.arch, episode, cfg)
        graph.backward(breakdown.tensor)
        grads = {name: leaves[name].grad for name in params.names}
        new_params = params.sgd_step(grads, step_lr)
    except (ShapeError, GraphError):
        raise
    except NumericError as e:
        raise NumericError(
            f"Non-finite loss in episode {episode_idx}: {e.message}",
            code="non_finite_loss",
            location=f"episode {episode_idx}",
            detail={
                "episode": episode_idx,
                "lr": step_lr,
                "partition": episode.partition.json,
                "where": e.location,
                "step": params.step,
            },
        ) from e
    breakdown.episode = episode_idx
    breakdown.lr = step_lr
    return new_params, breakdown


@dataclasses.dataclass
class TrainResult:
    params: Params
    curve: List[LossBreakdown]


def default_arch(dataset: Dataset, cfg: TrainConfig, **overrides) -> Arch:
    return Arch(**{"input_size": dataset.image_size[0], "n_closed": cfg.n_closed, **overrides})


def check_compatible(dataset: Dataset, arch: Arch, cfg: TrainConfig):
    height, width = dataset.image_size
    if height != width or height != arch.input_size:
        raise DataError(
            f"Images are {height}x{width}, the network expects {arch.input_size}x{arch.input_size}",
            code="image_size",
        )
    if arch.discriminator_input == "distances" and arch.n_closed != cfg.n_closed:
        raise ConfigError(
            f"Distance discriminator is built for {arch.n_closed} prototypes, n_closed is {cfg.n_closed}",
            location="n_closed",
        )


def meta_train(
    dataset: Dataset,
    cfg: TrainConfig,
    arch: Optional[Arch] = None,
    callback: Optional[TrainingCallback] = None,
) -> TrainResult:
    """Trains from the seeded initialization for ``cfg.episodes`` episodes.

    Partitions and episodes of episode ``i`` come from their own random streams
    keyed by ``(seed, i)``, so a run is fully determined by the seed and config.
    """
    arch = arch or default_arch(dataset, cfg)
    callback = callback or TrainingCallback()
    check_compatible(dataset, arch, cfg)
    dataset = subsample_per_class(dataset, cfg.train_per_class)
    pool = dataset.class_ids
    if len(pool) < cfg.n_closed + 1:
        raise ConfigError(
            f"Meta-training needs at least {cfg.n_closed + 1} classes, dataset has {len(pool)}",
            code="too_few_classes",
            location="n_closed",
        )

    params = init_params(arch, cfg.seed, cfg.scalar_width)
    curve: List[LossBreakdown] = []
    callback.training_started(cfg)
    for episode_idx in range(cfg.episodes):
        try:
            partition = draw_partition(pool, cfg.n_closed, make_rng(cfg.seed, "partition", episode_idx))
            episode = sample_episode(
                dataset,
                partition,
                cfg.n_support,
                cfg.n_query,
                cfg.n_open,
                make_rng(cfg.seed, "episode", episode_idx),
                balanced_open=cfg.open_balanced,
            )
            callback.episode_started(episode_idx, episode)
            params, breakdown = train_episode(params, episode, cfg, episode_idx)
        except Exception as e:
            callback.episode_error(episode_idx, e)
            raise
        callback.episode_finished(episode_idx, breakdown)
        curve.append(breakdown)
    callback.training_finished(params)
    return TrainResult(params=params, curve=curve)
