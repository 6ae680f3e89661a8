from typing import Dict, Iterator, Tuple

import marshmallow as ma

from ..errors import ConfigError

SCHEMA_KEY = "_schema"


def iter_messages(messages, path: str = "") -> Iterator[Tuple[str, str]]:
    """Yields ``(dotted key path, message)`` pairs of nested marshmallow messages."""
    if isinstance(messages, dict):
        for key, nested in messages.items():
            yield from iter_messages(nested, f"{path}.{key}" if path else str(key))
    elif isinstance(messages, (list, tuple)):
        for nested in messages:
            yield from iter_messages(nested, path)
    else:
        yield path or SCHEMA_KEY, str(messages)


def format_validation_error(messages) -> Dict[str, str]:
    """``{"conv_channels": {1: ["Not a valid integer."]}}`` -> ``{"conv_channels.1": "Not a valid integer."}``.

    Several messages for one key are joined with ``"; "``.
    """
    formatted: Dict[str, str] = {}
    for path, message in iter_messages(messages):
        formatted[path] = f"{formatted[path]}; {message}" if path in formatted else message
    return formatted


def config_error(error: ma.ValidationError) -> ConfigError:
    """The first invalid key (in sorted order) becomes the message and location."""
    errors = format_validation_error(error.messages)
    path, message = sorted(errors.items())[0]
    return ConfigError(
        f"Invalid config key {path}: {message}",
        code="invalid_config",
        location=path,
        detail={"errors": errors},
    )
