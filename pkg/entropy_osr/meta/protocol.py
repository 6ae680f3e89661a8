"""
Meta-testing.

A meta-test task pairs a support set drawn from the training split of the known
classes with a test set from the test split covering known and unknown classes.

* Fixed protocol (``0 < n_known < classes``): the first ``n_known`` class ids
  are known, the others unknown; meta-training only sees the known classes.
* Episodic protocol (otherwise): ``eval_rounds`` partitions of the class pool
  into ``n_closed`` known and the remaining unknown classes, reports averaged.
"""
import dataclasses
import logging
from typing import Dict, List, Tuple

import numpy as np

from ..data.rng import make_rng
from ..data.types import Dataset, restrict, subsample_per_class
from ..episodes import draw_partition
from ..network import Params
from .adapt import score_images, support_prototypes
from .decision import decide, known_labels, threshold_sweep
from .metrics import average_reports, evaluate
from .types import EvalConfig, MetricsReport, TrainConfig

log = logging.getLogger("entropy_osr.meta")


@dataclasses.dataclass
class MetaTestTask:
    support: Dataset
    test: Dataset
    known: Tuple[int, ...]
    unknown: Tuple[int, ...]

    @property
    def json(self):
        return {"known": list(self.known), "unknown": list(self.unknown)}


def fixed_protocol(train: Dataset, eval_cfg: EvalConfig) -> bool:
    return 0 < eval_cfg.n_known < len(train.class_ids)


def training_split(train: Dataset, eval_cfg: EvalConfig) -> Dataset:
    """The part of the training split meta-training may see."""
    if fixed_protocol(train, eval_cfg):
        return restrict(train, train.class_ids[: eval_cfg.n_known])
    return train


def _task(train, test, known, unknown, eval_cfg) -> MetaTestTask:
    support = subsample_per_class(restrict(train, known), eval_cfg.test_support_per_class)
    pool = [c for c in test.class_ids if c in set(known) | set(unknown)]
    return MetaTestTask(
        support=support, test=restrict(test, pool), known=tuple(known), unknown=tuple(unknown)
    )


def meta_test_tasks(
    train: Dataset, test: Dataset, train_cfg: TrainConfig, eval_cfg: EvalConfig
) -> List[MetaTestTask]:
    if fixed_protocol(train, eval_cfg):
        known = train.class_ids[: eval_cfg.n_known]
        unknown = tuple(c for c in test.class_ids if c not in known)
        return [_task(train, test, known, unknown, eval_cfg)]
    tasks = []
    for round_idx in range(eval_cfg.eval_rounds):
        partition = draw_partition(
            train.class_ids, train_cfg.n_closed, make_rng(train_cfg.seed, "eval", round_idx)
        )
        tasks.append(_task(train, test, partition.closed, partition.open, eval_cfg))
    return tasks


@dataclasses.dataclass
class MetaTestResult:
    rounds: List[MetricsReport]
    average: MetricsReport
    tasks: List[MetaTestTask]

    @property
    def json(self):
        return {
            "metrics": self.average.json,
            "rounds": [
                {**task.json, "metrics": report.json}
                for task, report in zip(self.tasks, self.rounds)
            ],
        }


def run_task(params: Params, task: MetaTestTask, threshold: float, train_cfg, eval_cfg):
    return decide(
        params,
        task.support.images,
        task.support.labels,
        task.test.images,
        threshold,
        train_cfg,
        known_classes=task.known,
        eval_cfg=eval_cfg,
    )


def meta_test(
    params: Params, train: Dataset, test: Dataset, train_cfg: TrainConfig, eval_cfg: EvalConfig
) -> MetaTestResult:
    tasks = meta_test_tasks(train, test, train_cfg, eval_cfg)
    reports = []
    for round_idx, task in enumerate(tasks):
        decisions = run_task(params, task, eval_cfg.threshold, train_cfg, eval_cfg)
        report = evaluate(decisions, task.test.labels, task.known, task.unknown)
        log.info("Meta-test round %s %s: tpr %.4f fpr %.4f", round_idx, task.json, report.tpr, report.fpr)
        reports.append(report)
    return MetaTestResult(rounds=reports, average=average_reports(reports), tasks=tasks)


def dump_features(
    params: Params, train: Dataset, test: Dataset, train_cfg: TrainConfig, eval_cfg: EvalConfig
) -> List[Dict]:
    """Embedding and p_open of every test sample of the first meta-test task.

    ``sample_id`` indexes the test split.
    """
    task = meta_test_tasks(train, test, train_cfg, eval_cfg)[0]
    _, episode_labels = known_labels(task.support.labels, task.known)
    protos = support_prototypes(
        params, task.support.images, episode_labels, len(task.known), batch_size=eval_cfg.batch_size
    )
    sample_ids = np.flatnonzero(np.isin(test.labels, task.known + task.unknown))
    rows = []
    for start in range(0, len(sample_ids), eval_cfg.batch_size):
        chunk = sample_ids[start : start + eval_cfg.batch_size]
        embeddings, _, p_open = score_images(
            params, protos, test.images[chunk], train_cfg.mode, train_cfg.tau
        )
        for sample_id, embedding, p in zip(chunk, embeddings, p_open):
            true_class = int(test.labels[sample_id])
            row = {
                "sample_id": int(sample_id),
                "true_class": true_class,
                "is_open": true_class not in task.known,
                "p_open": float(p),
            }
            row.update({f"e_{i}": float(v) for i, v in enumerate(embedding)})
            rows.append(row)
    return rows


def sweep_meta_test(
    params: Params,
    train: Dataset,
    test: Dataset,
    train_cfg: TrainConfig,
    eval_cfg: EvalConfig,
    grid,
) -> List[MetricsReport]:
    """Per-threshold reports, averaged over the meta-test tasks like :func:`meta_test`."""
    per_task = [
        threshold_sweep(
            params,
            task.support.images,
            task.support.labels,
            task.test.images,
            task.test.labels,
            grid,
            train_cfg,
            known_classes=task.known,
            unknown_classes=task.unknown,
            eval_cfg=eval_cfg,
        )
        for task in meta_test_tasks(train, test, train_cfg, eval_cfg)
    ]
    return [average_reports(list(reports)) for reports in zip(*per_task)]
