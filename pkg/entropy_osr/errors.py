"""Errors raised by the open-set recognition pipeline."""
import dataclasses
import json
import textwrap
import traceback
from typing import Any, Mapping, Union

JSONObject = Mapping[str, Any]


class OSRError(Exception):
    exit_code = 1

    def __init__(
        self,
        message,
        code=None,
        location=None,
        detail: Union[JSONObject, None] = None,
    ):
        """
        @param message: a string message (overview)
        @param code: a machine processable code
        @param location: where the error was detected, for example a graph node
               (`node 12`), a config key (`train.lr0`) or a file path
        @param detail: a json-serializable object (dictionary) with details
        """
        super().__init__(message)
        assert detail is None or isinstance(detail, dict)
        self.detail = detail
        self.message = message
        self.code = code
        self.location = location


class ConfigError(OSRError):
    """Invalid or unknown configuration."""

    exit_code = 2


class DataError(OSRError):
    """Missing or malformed input data."""

    exit_code = 3


class CheckpointError(DataError):
    """Checkpoint is missing, truncated or fails its checksum."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint was written by a newer format version."""


class NumericError(OSRError):
    """A non-finite value appeared in a computation."""

    exit_code = 4


class ShapeError(NumericError):
    """Inputs of a primitive violate its shape contract."""


class GraphError(NumericError):
    """The computation graph was used out of order."""


@dataclasses.dataclass
class ErrorReport:
    exit_code: int
    code: str
    message: str
    location: Union[str, None] = None
    info: Union[JSONObject, None] = None

    @classmethod
    def from_exception(cls, exc: Exception, limit=30):
        if isinstance(exc, OSRError):
            return cls(
                exit_code=exc.exit_code,
                code=exc.code or type(exc).__name__,
                message=exc.message,
                location=exc.location,
                info=exc.detail,
            )

        # can not use format_exception here, we are called from inside the except block
        stack = traceback.format_exc(limit=limit)
        return cls(
            exit_code=1,
            code=type(exc).__name__,
            message=str(exc) or type(exc).__name__,
            info={"exception": type(exc).__name__, "stack": stack},
        )

    @property
    def json(self) -> JSONObject:
        ret = {"exit_code": self.exit_code, "code": self.code, "message": self.message}
        if self.location:
            ret["location"] = self.location
        if self.info:
            ret["info"] = self.info
        return ret

    @property
    def line(self):
        """Single-line, machine parsable form printed by the command line."""
        message = " ".join(str(self.message).split())
        return f"ERROR {self.exit_code}: {message}"

    def __str__(self):
        formatted_info = textwrap.indent(
            json.dumps(self.info or {}, ensure_ascii=False, indent=4, default=str),
            prefix="    ",
        )
        return f"{self.code}:{self.location if self.location else ''} {self.message}\n{formatted_info}"
