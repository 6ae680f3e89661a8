import contextlib
from abc import ABC, abstractmethod
from pathlib import Path
from typing import IO, Iterator, Optional, Union

from ...errors import DataError

Source = Union[str, Path, IO]


class BaseReader(ABC):
    """Iterates the records of one file (a manifest, a config file).

    ``source`` is a path or an already opened text stream. Paths found inside the
    source resolve against ``base_path``, which defaults to the directory of
    the source file.
    """

    def __init__(self, *, source: Source, base_path: Optional[Union[str, Path]] = None, **kwargs):
        self.stream = source if hasattr(source, "read") else None
        self.source = None if self.stream else Path(source)
        if base_path is not None:
            self.base_path = Path(base_path)
            if self.source is not None and not self.source.is_absolute():
                self.source = self.base_path / self.source
        elif self.source is not None:
            self.base_path = self.source.parent
        else:
            self.base_path = None

    @abstractmethod
    def __iter__(self) -> Iterator:
        """Yields the parsed records."""

    @contextlib.contextmanager
    def _open(self):
        if self.stream is not None:
            yield self.stream
            return
        try:
            f = open(self.source, "r", encoding="utf-8")
        except FileNotFoundError:
            raise DataError(f"File {self.source} not found", code="missing_file", location=str(self.source))
        with f:
            yield f
