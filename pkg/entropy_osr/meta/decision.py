"""
Open/closed decisions on test images.

Every rule maps a sample to a rejection score in [0, 1]; a sample is accepted as
known iff its score is below the threshold. Scores are clipped to
``[SCORE_CLIP, 1 - SCORE_CLIP]`` so that threshold 1 accepts and threshold 0
rejects every sample.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ConfigError, DataError
from ..losses import PROB_FLOOR
from ..network import Params
from ..registry import decision_rule
from .adapt import score_images, support_prototypes
from .metrics import evaluate
from .types import Decisions, EvalConfig, MetricsReport, TrainConfig

log = logging.getLogger("entropy_osr.meta")

SCORE_CLIP = 1e-12


def discriminator_score(probs: np.ndarray, p_open: np.ndarray) -> np.ndarray:
    return p_open


def entropy_score(probs: np.ndarray, p_open: np.ndarray) -> np.ndarray:
    """Predictive entropy of the class probabilities divided by log K."""
    k = probs.shape[1]
    if k == 1:
        return np.zeros(len(probs))
    entropy = -np.sum(probs * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)
    return entropy / math.log(k)


def known_labels(support_labels, known_classes):
    support_labels = np.asarray(support_labels, dtype=np.int64)
    present = set(int(c) for c in support_labels)
    known = tuple(sorted(present if known_classes is None else set(int(c) for c in known_classes)))
    missing = sorted(set(known) - present)
    if missing:
        raise DataError(f"Support set has no sample of class {missing}", code="missing_class")
    extra = sorted(present - set(known))
    if extra:
        raise DataError(f"Support set holds classes {extra} outside the known set", code="support_label")
    label_map = {c: i for i, c in enumerate(known)}
    return known, np.asarray([label_map[int(c)] for c in support_labels], dtype=np.int64)


def decide(
    params: Params,
    support_images,
    support_labels,
    test_images,
    threshold: float,
    cfg: TrainConfig,
    known_classes: Optional[Sequence[int]] = None,
    eval_cfg: Optional[EvalConfig] = None,
) -> Decisions:
    """Adapts to the support set and decides every test image.

    ``support_labels`` are class ids; the known classes default to the classes
    present in the support set. Test images are scored in shards of
    ``eval_cfg.batch_size`` on up to ``eval_cfg.workers`` threads; results are
    concatenated in shard order.
    """
    eval_cfg = eval_cfg or EvalConfig()
    rule = decision_rule(eval_cfg.decision_rule)
    known, episode_labels = known_labels(support_labels, known_classes)
    protos = support_prototypes(
        params, support_images, episode_labels, len(known), batch_size=eval_cfg.batch_size
    )

    test_images = np.asarray(test_images)
    starts = range(0, len(test_images), eval_cfg.batch_size)

    def score_shard(start):
        _, probs, p_open = score_images(
            params, protos, test_images[start : start + eval_cfg.batch_size], cfg.mode, cfg.tau
        )
        return probs, rule(probs, p_open)

    if eval_cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=eval_cfg.workers) as executor:
            shards = list(executor.map(score_shard, starts))
    else:
        shards = [score_shard(start) for start in starts]

    if shards:
        probs = np.concatenate([s[0] for s in shards])
        scores = np.concatenate([s[1] for s in shards])
    else:
        probs = np.zeros((0, len(known)))
        scores = np.zeros(0)
    scores = np.clip(scores, SCORE_CLIP, 1.0 - SCORE_CLIP)
    predicted = np.asarray(known, dtype=np.int64)[np.argmax(probs, axis=1)] if len(probs) else np.zeros(0, np.int64)
    decisions = Decisions(
        accept=scores < threshold,
        predicted=predicted,
        p_open=scores,
        scores=probs,
        known_classes=known,
        threshold=float(threshold),
        rule=eval_cfg.decision_rule,
    )
    log.info(
        "Decided %s samples at threshold %s: %s accepted", len(decisions), threshold, decisions.accepted_count
    )
    return decisions


def check_grid(grid: Sequence[float]) -> List[float]:
    grid = [float(t) for t in grid]
    if not grid:
        raise ConfigError("Threshold grid is empty", code="sweep_grid", location="sweep_grid")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"Threshold grid {grid} is not sorted", code="sweep_grid", location="sweep_grid")
    return grid


def threshold_sweep(
    params: Params,
    support_images,
    support_labels,
    test_images,
    test_labels,
    grid: Sequence[float],
    cfg: TrainConfig,
    known_classes: Optional[Sequence[int]] = None,
    unknown_classes: Optional[Sequence[int]] = None,
    eval_cfg: Optional[EvalConfig] = None,
) -> List[MetricsReport]:
    """Scores the test set once and evaluates it at every grid threshold."""
    grid = check_grid(grid)
    decisions = decide(
        params, support_images, support_labels, test_images, grid[0], cfg, known_classes, eval_cfg
    )
    return [
        evaluate(decisions.with_threshold(t), test_labels, decisions.known_classes, unknown_classes)
        for t in grid
    ]
