from .ablation import AblationResult, ablate
from .callbacks import StatsKeepingTrainingCallback, TrainingCallback
from .decision import decide, discriminator_score, entropy_score, threshold_sweep
from .metrics import average_reports, evaluate
from .protocol import (
    MetaTestResult,
    MetaTestTask,
    dump_features,
    meta_test,
    meta_test_tasks,
    sweep_meta_test,
    training_split,
)
from .schedule import lr
from .trainer import TrainResult, episode_graph, episode_loss, meta_train, train_episode
from .types import Decision, Decisions, EvalConfig, MetricsReport, TrainConfig

__all__ = (
    "TrainConfig",
    "EvalConfig",
    "Decision",
    "Decisions",
    "MetricsReport",
    "lr",
    "episode_loss",
    "episode_graph",
    "train_episode",
    "meta_train",
    "TrainResult",
    "decide",
    "discriminator_score",
    "entropy_score",
    "threshold_sweep",
    "evaluate",
    "average_reports",
    "meta_test",
    "meta_test_tasks",
    "training_split",
    "MetaTestTask",
    "MetaTestResult",
    "dump_features",
    "sweep_meta_test",
    "ablate",
    "AblationResult",
    "TrainingCallback",
    "StatsKeepingTrainingCallback",
)
