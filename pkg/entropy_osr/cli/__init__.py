from .base import as_command, dispatch, entropy_osr, run
from .data import gen_data
from .evaluate import evaluate, features, sweep
from .selftest import self_test
from .train import ablation, train

__all__ = (
    "entropy_osr",
    "as_command",
    "dispatch",
    "run",
    "gen_data",
    "train",
    "ablation",
    "evaluate",
    "sweep",
    "features",
    "self_test",
)
