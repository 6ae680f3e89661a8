"""
Prototype probabilities and the entropy-awareness loss.

The total loss is ``lambda1 * meta_ce + lambda2 * entropy_dist + lambda3 * open_bce``:

* ``meta_ce`` - cross-entropy of the closed query samples under the
  prototype-distance softmax,
* ``entropy_dist`` - mean of ``sum_j p log p`` over the open samples, i.e. the
  negative Shannon entropy of their closed-class distribution (minimizing it
  pushes open samples towards the uniform distribution),
* ``open_bce`` - binary cross-entropy of the discriminator over query and open
  samples.

All three are means over samples. Every log sees probabilities clamped to
``PROB_FLOOR``.
"""
import dataclasses
from typing import Optional, Tuple, Union

import numpy as np

from .autodiff import Tensor, ops
from .errors import ConfigError, DataError

PROB_FLOOR = 1e-12

CLASS_PROB_MODES = ("features", "logits")

Scalar = Union[Tensor, float]


def prototypes(support_embeddings: Tensor, support_labels, k: int) -> Tensor:
    """Row j is the mean support embedding of episode class j (K x D)."""
    labels = np.asarray(support_labels, dtype=np.int64)
    if len(labels) and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"Support labels must lie in 0..{k - 1}", code="label_range")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise DataError(
            f"Support set has no sample of episode classes {missing}",
            code="missing_class",
        )
    averaging = np.zeros((k, len(labels)))
    averaging[labels, np.arange(len(labels))] = 1.0 / counts[labels]
    return ops.matmul(averaging, support_embeddings)


def class_probs(embedding: Tensor, protos: Tensor, mode: str = "features", tau: float = 0.1) -> Tensor:
    """Softmax over negative squared distances to the prototypes (N x K).

    ``features`` normalizes the embeddings and prototypes before measuring
    distances; ``logits`` normalizes the vector of negative distances instead.
    """
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}", location="tau")
    if mode == "features":
        z = ops.neg(
            ops.pairwise_sqdist(
                ops.l2_normalize(embedding, axis=1), ops.l2_normalize(protos, axis=1)
            )
        )
    elif mode == "logits":
        z = ops.l2_normalize(ops.neg(ops.pairwise_sqdist(embedding, protos)), axis=1)
    else:
        raise ConfigError(f"mode must be one of {CLASS_PROB_MODES}, got {mode}", location="mode")
    return ops.softmax(ops.scale(z, 1.0 / tau))


def loss_meta_ce(query_probs: Tensor, query_labels) -> Tensor:
    labels = np.asarray(query_labels, dtype=np.int64)
    n, k = query_probs.shape
    if len(labels) != n or (n and (labels.min() < 0 or labels.max() >= k)):
        raise DataError(f"Query labels must be {n} ids in 0..{k - 1}", code="label_range")
    onehot = np.eye(k)[labels]
    picked = ops.sum(ops.mul(query_probs, onehot), axis=1)
    return ops.neg(ops.mean(ops.log(picked, floor=PROB_FLOOR)))


def loss_entropy(open_probs: Tensor) -> Tensor:
    if open_probs.shape[0] == 0:
        return open_probs.graph.constant(0.0)
    plogp = ops.mul(open_probs, ops.log(open_probs, floor=PROB_FLOOR))
    return ops.mean(ops.sum(plogp, axis=1))


def loss_open(p_open: Tensor, beta) -> Tensor:
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if len(beta) != p_open.shape[0]:
        raise DataError(
            f"{len(beta)} open flags for {p_open.shape[0]} probabilities", code="length_mismatch"
        )
    log_open = ops.log(p_open, floor=PROB_FLOOR)
    log_closed = ops.log(ops.sub(1.0, p_open), floor=PROB_FLOOR)
    terms = ops.add(ops.mul(log_open, beta), ops.mul(log_closed, 1.0 - beta))
    return ops.neg(ops.mean(terms))


@dataclasses.dataclass
class LossBreakdown:
    meta_ce: float
    entropy_dist: float
    open_bce: float
    total: float
    weights: Tuple[float, float, float]
    episode: Optional[int] = None
    lr: Optional[float] = None
    tensor: Optional[Tensor] = dataclasses.field(default=None, repr=False, compare=False)
    "graph node of the total, when the parts were tensors"

    @property
    def json(self):
        return {
            "episode": self.episode,
            "meta_ce": self.meta_ce,
            "entropy_dist": self.entropy_dist,
            "open_bce": self.open_bce,
            "total": self.total,
            "lr": self.lr,
        }


def _value(part: Scalar) -> float:
    return part.item() if isinstance(part, Tensor) else float(part)


def loss_total(
    meta_ce: Scalar,
    entropy_dist: Scalar,
    open_bce: Scalar,
    lambda1: float = 0.5,
    lambda2: float = 0.25,
    lambda3: float = 0.25,
) -> LossBreakdown:
    weights = (float(lambda1), float(lambda2), float(lambda3))
    if any(w < 0 for w in weights):
        raise ConfigError(f"Loss weights must be non-negative, got {weights}", location="lambda")
    parts = (meta_ce, entropy_dist, open_bce)
    tensor = None
    if any(isinstance(p, Tensor) for p in parts):
        graph = next(p.graph for p in parts if isinstance(p, Tensor))
        weighted = [
            ops.scale(p if isinstance(p, Tensor) else graph.constant(float(p)), w)
            for p, w in zip(parts, weights)
        ]
        tensor = ops.add(ops.add(weighted[0], weighted[1]), weighted[2])
        total = tensor.item()
    else:
        total = weights[0] * float(meta_ce) + weights[1] * float(entropy_dist) + weights[2] * float(open_bce)
    return LossBreakdown(
        meta_ce=_value(meta_ce),
        entropy_dist=_value(entropy_dist),
        open_bce=_value(open_bce),
        total=total,
        weights=weights,
        tensor=tensor,
    )
