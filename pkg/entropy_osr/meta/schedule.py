from ..errors import ConfigError
from .types import TrainConfig


def lr(episode_idx: int, cfg: TrainConfig) -> float:
    """Step decay: ``lr0`` halved every ``lr_halving_period`` episodes."""
    if episode_idx < 0:
        raise ConfigError(f"episode index must be >= 0, got {episode_idx}", location="episode")
    return cfg.lr0 * 0.5 ** (episode_idx // cfg.lr_halving_period)
