from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ...errors import ConfigError


def format_value(value) -> str:
    """Stable text form used for every number written to a report."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def check_overwrite(target: Union[str, Path], force=False) -> Path:
    target = Path(target)
    if target.exists() and not force:
        raise ConfigError(
            f"Refusing to overwrite {target}, use --force",
            code="overwrite",
            location=str(target),
        )
    return target


class BaseWriter(ABC):
    """Base writer.

    Writers never overwrite an existing target unless ``force`` is set. The
    ``echo`` mapping (run configuration including the seed) is embedded in every
    artifact.
    """

    def __init__(
        self,
        *,
        target: Union[str, Path],
        base_path=None,
        echo: Optional[Dict[str, Any]] = None,
        force=False,
        **kwargs,
    ) -> None:
        self.target = Path(base_path).joinpath(target) if base_path else Path(target)
        self.echo = dict(echo or {})
        self.force = force
        check_overwrite(self.target, force)

    @abstractmethod
    def write(self, item) -> None:
        """Writes one item to the target."""

    def finish(self):
        pass
