import logging
from typing import Any, Dict, Iterator

import yaml

from ..data.readers import BaseReader
from ..errors import ConfigError

log = logging.getLogger("entropy_osr.config")


class KeyValueReader(BaseReader):
    """Flat ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""

    def __iter__(self) -> Iterator[Dict[str, Any]]:
        values = {}
        with self._open() as f:
            for line_no, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep or not key.strip():
                    raise ConfigError(
                        f"Expected key=value, got '{line}'",
                        code="config_syntax",
                        location=f"{self.source}:{line_no}",
                    )
                key = key.strip()
                if key in values:
                    raise ConfigError(
                        f"Duplicate key {key}", code="config_syntax", location=f"{self.source}:{line_no}"
                    )
                values[key] = value.strip()
        yield values


class YamlConfigReader(BaseReader):
    """A YAML mapping of config keys."""

    def __iter__(self) -> Iterator[Dict[str, Any]]:
        with self._open() as f:
            try:
                values = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML: {e}", code="config_syntax", location=str(self.source))
        if values is None:
            values = {}
        if not isinstance(values, dict):
            raise ConfigError(
                "Config file must hold a mapping of keys", code="config_syntax", location=str(self.source)
            )
        yield values
