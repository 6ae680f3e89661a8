import json
from typing import Any, Dict

from . import BaseWriter


class JSONWriter(BaseWriter):
    """Writes one JSON document with the config echo and seed merged in."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._payload: Dict[str, Any] = {}

    def write(self, payload: Dict[str, Any]):
        self._payload.update(payload)

    def finish(self):
        document = {
            **self._payload,
            "config": self.echo,
            "seed": self.echo.get("seed"),
        }
        self.target.parent.mkdir(parents=True, exist_ok=True)
        with open(self.target, "w", encoding="utf-8") as f:
            json.dump(document, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
