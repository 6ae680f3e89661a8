"""
Checkpoint files.

Layout: ``MAGIC`` | header length (uint32 LE) | UTF-8 JSON header | raw
little-endian scalars of every parameter in header order | CRC32 (uint32 LE)
of header and payload. The header carries the arch, format version, init seed,
scalar width and random-stream algorithm.
"""
import json
import logging
import struct
import zlib
from pathlib import Path

import numpy as np

from ..autodiff import resolve_dtype
from ..data.rng import RNG_ALGORITHM
from ..data.writers import check_overwrite
from ..errors import CheckpointError, CheckpointVersionError, ConfigError
from .arch import PARAMS_VERSION, Arch, Params

log = logging.getLogger("entropy_osr.network")

MAGIC = b"EOSRCKPT"
_U32 = struct.Struct("<I")


def _header(params: Params) -> dict:
    return {
        "version": params.version,
        "arch": params.arch.json,
        "seed": params.seed,
        "dtype": params.dtype,
        "step": params.step,
        "rng_algorithm": RNG_ALGORITHM,
        "tensors": [
            {"name": name, "shape": list(array.shape)}
            for name, array in params.arrays.items()
        ],
    }


def dumps_checkpoint(params: Params) -> bytes:
    header = json.dumps(_header(params), sort_keys=True).encode("utf-8")
    le_dtype = resolve_dtype(params.dtype).newbyteorder("<")
    payload = b"".join(
        np.ascontiguousarray(array, dtype=le_dtype).tobytes()
        for array in params.arrays.values()
    )
    body = header + payload
    return MAGIC + _U32.pack(len(header)) + body + _U32.pack(zlib.crc32(body))


def save_checkpoint(params: Params, path, force=False) -> Path:
    path = check_overwrite(path, force)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_checkpoint(params))
    log.info("Saved checkpoint %s (step %s)", path, params.step)
    return path


def loads_checkpoint(raw: bytes, location="<bytes>") -> Params:
    if not raw.startswith(MAGIC):
        raise CheckpointError("Not a checkpoint file", code="magic", location=location)
    start = len(MAGIC) + _U32.size
    if len(raw) < start + _U32.size:
        raise CheckpointError("Truncated checkpoint", code="truncated", location=location)
    # the trailing CRC covers header and payload, so verify it before parsing either
    (stored_crc,) = _U32.unpack_from(raw, len(raw) - _U32.size)
    if zlib.crc32(raw[start : len(raw) - _U32.size]) != stored_crc:
        raise CheckpointError("Checkpoint checksum failure", code="checksum", location=location)

    (header_len,) = _U32.unpack_from(raw, len(MAGIC))
    if len(raw) < start + header_len + _U32.size:
        raise CheckpointError("Truncated checkpoint", code="truncated", location=location)
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise CheckpointError("Checkpoint header is not valid JSON", code="header", location=location)

    version = header.get("version")
    if not isinstance(version, int) or version > PARAMS_VERSION:
        raise CheckpointVersionError(
            f"Checkpoint version {version} is not supported (newest known is {PARAMS_VERSION})",
            code="version",
            location=location,
        )

    try:
        le_dtype = resolve_dtype(header["dtype"]).newbyteorder("<")
        sizes = [int(np.prod(t["shape"], dtype=np.int64)) for t in header["tensors"]]
        arch = Arch.from_json(header["arch"])
    except (KeyError, TypeError, ConfigError) as e:
        raise CheckpointError(
            f"Checkpoint header is malformed: {e}", code="header", location=location
        )
    end = start + header_len + sum(sizes) * le_dtype.itemsize
    if len(raw) != end + _U32.size:
        raise CheckpointError("Truncated checkpoint", code="truncated", location=location)

    arrays = {}
    offset = start + header_len
    for tensor, size in zip(header["tensors"], sizes):
        array = np.frombuffer(raw, dtype=le_dtype, count=size, offset=offset)
        arrays[tensor["name"]] = array.reshape(tensor["shape"])
        offset += size * le_dtype.itemsize
    return Params(
        arch,
        arrays,
        seed=header.get("seed"),
        dtype=header["dtype"],
        version=version,
        step=header.get("step", 0),
    )


def load_checkpoint(path) -> Params:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(
            f"checkpoint not found: {path}", code="missing_checkpoint", location=str(path)
        )
    return loads_checkpoint(path.read_bytes(), location=str(path))
