import dataclasses
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from ..autodiff import DTYPES
from ..errors import ConfigError
from ..losses import CLASS_PROB_MODES


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    episodes: int = 2000
    n_closed: int = 4
    n_support: int = 10
    n_query: int = 10
    n_open: int = 10
    lambda1: float = 0.5
    lambda2: float = 0.25
    lambda3: float = 0.25
    lr0: float = 0.01
    lr_halving_period: int = 1000
    tau: float = 0.1
    mode: str = "features"
    seed: int = 0
    scalar_width: str = "f64"
    open_balanced: bool = False
    train_per_class: int = 0
    "per-class training budget, 0 keeps every training sample"

    def __post_init__(self):
        if self.episodes < 0:
            raise ConfigError(f"episodes must be >= 0, got {self.episodes}", location="episodes")
        for key in ("n_closed", "n_support", "n_query", "n_open", "lr_halving_period"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}", location=key)
        if self.train_per_class < 0:
            raise ConfigError("train_per_class must be >= 0", location="train_per_class")
        for key in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be non-negative, got {getattr(self, key)}", location=key)
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}", location="lr0")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}", location="tau")
        if self.mode not in CLASS_PROB_MODES:
            raise ConfigError(f"mode must be one of {CLASS_PROB_MODES}, got {self.mode}", location="mode")
        if self.scalar_width not in DTYPES:
            raise ConfigError(
                f"scalar_width must be one of {sorted(DTYPES)}, got {self.scalar_width}",
                location="scalar_width",
            )

    @property
    def lambdas(self) -> Tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    @property
    def json(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, js):
        return cls(**js)


@dataclasses.dataclass(frozen=True)
class Decision:
    accept_known: bool
    predicted_class: Optional[int]
    "original class id, None when the sample is rejected"
    p_open: float
    scores: np.ndarray


@dataclasses.dataclass
class Decisions:
    """Decisions for a batch of test samples, stored column-wise.

    ``predicted`` holds the argmax class for every sample, rejected or not;
    closed-set accuracy is measured on it.
    """

    accept: np.ndarray
    predicted: np.ndarray
    p_open: np.ndarray
    scores: np.ndarray
    known_classes: Tuple[int, ...]
    threshold: float
    rule: str = "discriminator"

    def __len__(self):
        return len(self.accept)

    def __getitem__(self, index) -> Decision:
        accepted = bool(self.accept[index])
        return Decision(
            accept_known=accepted,
            predicted_class=int(self.predicted[index]) if accepted else None,
            p_open=float(self.p_open[index]),
            scores=self.scores[index],
        )

    def __iter__(self) -> Iterator[Decision]:
        for index in range(len(self)):
            yield self[index]

    @property
    def accepted_count(self) -> int:
        return int(np.count_nonzero(self.accept))

    def with_threshold(self, threshold: float) -> "Decisions":
        """Same scores, re-gated at another threshold."""
        return dataclasses.replace(self, accept=self.p_open < threshold, threshold=float(threshold))


@dataclasses.dataclass
class MetricsReport:
    tp: int
    fn: int
    fp: int
    tn: int
    tpr: float
    fpr: float
    recall_macro: float
    precision: float
    closed_accuracy: float
    per_class_accept: Dict[int, float] = dataclasses.field(default_factory=dict)
    threshold: Optional[float] = None

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def json(self):
        return {
            "tp": self.tp,
            "fn": self.fn,
            "fp": self.fp,
            "tn": self.tn,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "recall_macro": self.recall_macro,
            "precision": self.precision,
            "closed_accuracy": self.closed_accuracy,
            "per_class_accept": {str(k): v for k, v in sorted(self.per_class_accept.items())},
            "threshold": self.threshold,
        }


@dataclasses.dataclass(frozen=True)
class EvalConfig:
    threshold: float = 0.5
    decision_rule: str = "discriminator"
    n_known: int = 0
    "0 < n_known < classes: first n_known class ids are known, the rest unknown"
    eval_rounds: int = 4
    test_support_per_class: int = 0
    workers: int = 1
    batch_size: int = 256

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ConfigError("threshold must be finite", location="threshold")
        for key in ("eval_rounds", "workers", "batch_size"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}", location=key)
        for key in ("n_known", "test_support_per_class"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0, got {getattr(self, key)}", location=key)

    def replace(self, **changes) -> "EvalConfig":
        return dataclasses.replace(self, **changes)

    @property
    def json(self):
        return dataclasses.asdict(self)
