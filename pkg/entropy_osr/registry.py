import functools
from pathlib import Path

from werkzeug.utils import ImportStringError, import_string

from . import ext_config
from .errors import ConfigError


@functools.lru_cache(maxsize=16)
def _resolve(config_name: str, name: str):
    registry = getattr(ext_config, config_name)
    if name not in registry:
        raise ConfigError(
            f"'{name}' not found in {config_name}, expecting one of {sorted(registry)}",
            code="unknown_plugin",
            location=config_name.lower(),
        )
    value = registry[name]
    if not isinstance(value, str):
        return value
    try:
        return import_string(value)
    except ImportStringError as e:
        raise ConfigError(
            f"Cannot import '{value}' registered as {name} in {config_name}",
            code="unknown_plugin",
            location=config_name.lower(),
        ) from e


def decision_rule(name: str):
    return _resolve("DECISION_RULES", name)


def config_reader_for(path) -> type:
    extension = Path(path).suffix.lstrip(".").lower()
    reader = ext_config.CONFIG_READERS_BY_EXTENSION.get(extension)
    if reader is None:
        raise ConfigError(
            f"No config reader for extension '.{extension}' of {path}",
            code="config_extension",
            location=str(path),
        )
    return _resolve("CONFIG_READERS", reader)
