"""
Meta-learning tasks.

Each episode splits its class pool into "closed" (known for this episode) and
"open" (unknown for this episode) classes, then draws a support set and a query
set from the closed classes and an open query set from the open classes.
Closed classes are relabeled 0..K-1 in ascending class-id order.
"""
import dataclasses
import logging
from typing import Dict, Iterable, Tuple

import numpy as np

from .data.types import Dataset
from .errors import ConfigError, DataError

log = logging.getLogger("entropy_osr.episodes")


@dataclasses.dataclass(frozen=True)
class Partition:
    closed: Tuple[int, ...]
    open: Tuple[int, ...]

    def __post_init__(self):
        closed = tuple(sorted(int(c) for c in self.closed))
        open_ = tuple(sorted(int(c) for c in self.open))
        if not closed:
            raise ConfigError("A partition needs at least one closed class")
        if set(closed) & set(open_):
            raise ConfigError(
                f"Closed {closed} and open {open_} classes overlap", code="partition"
            )
        object.__setattr__(self, "closed", closed)
        object.__setattr__(self, "open", open_)

    @property
    def pool(self) -> Tuple[int, ...]:
        return tuple(sorted(self.closed + self.open))

    @property
    def label_map(self) -> Dict[int, int]:
        return {class_id: label for label, class_id in enumerate(self.closed)}

    @property
    def json(self):
        return {"closed": list(self.closed), "open": list(self.open)}


@dataclasses.dataclass
class Episode:
    support_images: np.ndarray
    support_labels: np.ndarray
    query_images: np.ndarray
    query_labels: np.ndarray
    open_images: np.ndarray
    partition: Partition
    support_indices: np.ndarray
    query_indices: np.ndarray
    open_indices: np.ndarray
    open_classes: np.ndarray
    "original class ids of the open samples"

    @property
    def episode_label_map(self) -> Dict[int, int]:
        return self.partition.label_map

    @property
    def n_way(self) -> int:
        return len(self.partition.closed)

    @property
    def n_open(self) -> int:
        return len(self.open_images)


def draw_partition(class_pool: Iterable[int], n_closed: int, rng: np.random.Generator) -> Partition:
    pool = sorted(set(int(c) for c in class_pool))
    if not 1 <= n_closed < len(pool):
        raise ConfigError(
            f"n_closed must lie in 1..{len(pool) - 1} for a pool of {len(pool)} classes, got {n_closed}",
            code="n_closed",
            location="n_closed",
        )
    chosen = set(rng.choice(len(pool), size=n_closed, replace=False).tolist())
    return Partition(
        closed=tuple(c for i, c in enumerate(pool) if i in chosen),
        open=tuple(c for i, c in enumerate(pool) if i not in chosen),
    )


def _open_indices(ds, partition, n_open, rng, balanced):
    if n_open == 0:
        return np.zeros(0, dtype=np.int64)
    if not partition.open:
        raise DataError("Open samples requested but the partition has no open class", code="no_open_class")
    per_class = {c: ds.indices_of(c) for c in partition.open}
    if not balanced:
        pooled = np.concatenate([per_class[c] for c in partition.open])
        if len(pooled) < n_open:
            raise DataError(
                f"Open classes {list(partition.open)} have {len(pooled)} samples, {n_open} requested",
                code="insufficient_samples",
                location=f"open classes {list(partition.open)}",
            )
        return np.sort(rng.choice(pooled, size=n_open, replace=False))
    quotas = [n_open // len(partition.open)] * len(partition.open)
    for i in range(n_open % len(partition.open)):
        quotas[i] += 1
    picked = []
    for class_id, quota in zip(partition.open, quotas):
        if len(per_class[class_id]) < quota:
            raise DataError(
                f"Open class {class_id} has {len(per_class[class_id])} samples, {quota} requested",
                code="insufficient_samples",
                location=f"class {class_id}",
            )
        picked.append(rng.choice(per_class[class_id], size=quota, replace=False))
    return np.sort(np.concatenate(picked))


def sample_episode(
    ds: Dataset,
    p: Partition,
    n_support: int,
    n_query: int,
    n_open: int,
    rng: np.random.Generator,
    balanced_open: bool = False,
) -> Episode:
    """Draws support/query per closed class without replacement, plus open samples.

    Open samples are drawn uniformly from the pooled open-class samples unless
    ``balanced_open`` spreads them evenly over the open classes.
    """
    label_map = p.label_map
    support, query = [], []
    for class_id in p.closed:
        indices = ds.indices_of(class_id)
        if len(indices) < n_support + n_query:
            raise DataError(
                f"Class {class_id} ({ds.class_names[class_id]}) has {len(indices)} samples, "
                f"{n_support + n_query} needed",
                code="insufficient_samples",
                location=f"class {class_id}",
            )
        drawn = rng.permutation(indices)[: n_support + n_query]
        support.append(drawn[:n_support])
        query.append(drawn[n_support:])
    support_idx = np.concatenate(support).astype(np.int64)
    query_idx = np.concatenate(query).astype(np.int64)
    open_idx = _open_indices(ds, p, n_open, rng, balanced_open)

    def relabel(indices):
        return np.asarray([label_map[int(c)] for c in ds.labels[indices]], dtype=np.int64)

    return Episode(
        support_images=ds.images[support_idx],
        support_labels=relabel(support_idx),
        query_images=ds.images[query_idx],
        query_labels=relabel(query_idx),
        open_images=ds.images[open_idx],
        partition=p,
        support_indices=support_idx,
        query_indices=query_idx,
        open_indices=open_idx,
        open_classes=ds.labels[open_idx].copy(),
    )
