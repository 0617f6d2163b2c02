"""
Versioned binary checkpoint container.

Layout::

    b"SHGC" | version (1 byte) | header length (uint32 LE) | header (UTF-8 JSON)
    | tensor data (float64 LE, in header order)

The header holds the run config echo, the name and shape of every tensor,
and free-form metadata (loss curve, best epoch).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
from pydantic import ValidationError

from config import RunConfig
from engine.module import Module
from errors import SchemaError
from utils import atomic_write_bytes

MAGIC = b"SHGC"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")
_DTYPE = np.dtype("<f8")

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    config: Dict[str, Any]
    tensors: Dict[str, np.ndarray]
    meta: Dict[str, Any] = field(default_factory=dict)

    def run_config(self) -> RunConfig:
        try:
            return RunConfig.model_validate(self.config)
        except ValidationError as exc:
            raise SchemaError(f"checkpoint config is invalid: {exc}") from exc


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = {
        "version": FORMAT_VERSION,
        "config": checkpoint.config,
        "tensors": [{"name": name, "shape": list(array.shape)} for name, array in checkpoint.tensors.items()],
        "meta": checkpoint.meta,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(np.ascontiguousarray(a, dtype=_DTYPE).tobytes() for a in checkpoint.tensors.values())
    return MAGIC + bytes([FORMAT_VERSION]) + _LENGTH.pack(len(header_bytes)) + header_bytes + body


def decode_checkpoint(payload: bytes) -> Checkpoint:
    """
    Raises:
        SchemaError: On a bad magic, unknown version, or truncated content.
    """
    prefix = len(MAGIC) + 1 + _LENGTH.size
    if len(payload) < prefix or payload[:len(MAGIC)] != MAGIC:
        raise SchemaError("not a checkpoint file")
    version = payload[len(MAGIC)]
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported checkpoint version {version}")
    (header_len,) = _LENGTH.unpack_from(payload, len(MAGIC) + 1)
    try:
        header = json.loads(payload[prefix:prefix + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"corrupt checkpoint header: {exc}") from exc

    offset = prefix + header_len
    tensors: Dict[str, np.ndarray] = {}
    for entry in header.get("tensors", []):
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        if offset + nbytes > len(payload):
            raise SchemaError(f"checkpoint truncated inside tensor {entry['name']!r}")
        tensors[entry["name"]] = np.frombuffer(payload, _DTYPE, count=nbytes // _DTYPE.itemsize,
                                               offset=offset).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(payload):
        raise SchemaError(f"{len(payload) - offset} trailing bytes after the last tensor")
    return Checkpoint(header.get("config", {}), tensors, header.get("meta", {}))


def write_checkpoint(path: PathLike, model: Module, config: RunConfig, **meta: Any) -> Path:
    return atomic_write_bytes(path, encode_checkpoint(Checkpoint(config.echo(), model.state_dict(), meta)))


def read_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())


def load_model(path: PathLike):
    """Rebuild the model from a checkpoint's config echo and load its parameters."""
    from models.pipeline import SituationHyperGraphModel

    checkpoint = read_checkpoint(path)
    config = checkpoint.run_config()
    model = SituationHyperGraphModel(config.model, seed=config.seed)
    model.load_state_dict(checkpoint.tensors)
    model.eval()
    return model, config, checkpoint
