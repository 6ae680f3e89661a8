from typing import Iterable, List, Optional

import numpy as np

from ..errors import DataError
from .types import Decisions, MetricsReport


def _ratio(num: int, den: int, empty: float) -> float:
    return num / den if den else empty


def evaluate(
    decisions: Decisions,
    truths,
    known_class_set: Iterable[int],
    unknown_class_set: Optional[Iterable[int]] = None,
) -> MetricsReport:
    """Confusion counts with known-class samples as positives.

    Empty denominators give tpr 0, fpr 0, precision 1 and closed accuracy 0.
    ``recall_macro`` averages the accept rates of the known classes present in
    ``truths``.
    """
    truths = np.asarray(truths, dtype=np.int64).reshape(-1)
    if len(truths) != len(decisions):
        raise DataError(
            f"{len(decisions)} decisions for {len(truths)} truth labels", code="length_mismatch"
        )
    known = sorted(set(int(c) for c in known_class_set))
    is_known = np.isin(truths, known)
    if unknown_class_set is not None:
        allowed = set(known) | set(int(c) for c in unknown_class_set)
        stray = sorted(set(truths.tolist()) - allowed)
        if stray:
            raise DataError(f"Unknown truth label {stray}", code="unknown_truth")
    elif len(truths) and truths.min() < 0:
        raise DataError(f"Unknown truth label {int(truths.min())}", code="unknown_truth")

    accept = np.asarray(decisions.accept, dtype=bool)
    tp = int(np.count_nonzero(accept & is_known))
    fn = int(np.count_nonzero(~accept & is_known))
    fp = int(np.count_nonzero(accept & ~is_known))
    tn = int(np.count_nonzero(~accept & ~is_known))

    per_class = {
        c: float(np.mean(accept[truths == c])) for c in known if np.any(truths == c)
    }
    n_known = tp + fn
    correct = int(np.count_nonzero(decisions.predicted[is_known] == truths[is_known]))
    return MetricsReport(
        tp=tp,
        fn=fn,
        fp=fp,
        tn=tn,
        tpr=_ratio(tp, tp + fn, 0.0),
        fpr=_ratio(fp, fp + tn, 0.0),
        recall_macro=float(np.mean(list(per_class.values()))) if per_class else 0.0,
        precision=_ratio(tp, tp + fp, 1.0),
        closed_accuracy=_ratio(correct, n_known, 0.0),
        per_class_accept=per_class,
        threshold=decisions.threshold,
    )


def average_reports(reports: List[MetricsReport]) -> MetricsReport:
    """Sums the counts and averages the derived metrics of several rounds."""
    if not reports:
        raise DataError("No reports to average", code="no_reports")
    per_class = {}
    for class_id in sorted(set(c for r in reports for c in r.per_class_accept)):
        rates = [r.per_class_accept[class_id] for r in reports if class_id in r.per_class_accept]
        per_class[class_id] = float(np.mean(rates))
    thresholds = {r.threshold for r in reports}
    return MetricsReport(
        tp=sum(r.tp for r in reports),
        fn=sum(r.fn for r in reports),
        fp=sum(r.fp for r in reports),
        tn=sum(r.tn for r in reports),
        tpr=float(np.mean([r.tpr for r in reports])),
        fpr=float(np.mean([r.fpr for r in reports])),
        recall_macro=float(np.mean([r.recall_macro for r in reports])),
        precision=float(np.mean([r.precision for r in reports])),
        closed_accuracy=float(np.mean([r.closed_accuracy for r in reports])),
        per_class_accept=per_class,
        threshold=thresholds.pop() if len(thresholds) == 1 else None,
    )
