"""Binary checkpoint container for a SafeNetwork.

Layout (all integers little-endian)::

    magic        8 bytes   b"SAFECKPT"
    version      u32       1
    header_len   u32
    header       UTF-8 JSON, keys sorted: {"config", "groups", "metadata"}
    count        u32       number of parameters
    count times:
        name_len   u16
        name       UTF-8
        trainable  u8
        ndim       u8
        dims       u32 * ndim
        data       float32 * prod(dims), C order

Parameters appear in network order: groups in ``header["groups"]`` order,
layers in plan order, weight/bias/slope within a layer. Saving a loaded
checkpoint reproduces the file byte for byte.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import CheckpointError
from app.core.logging import get_logger
from app.safenet.network import (
    SC_DECODER,
    SC_DECODER_2,
    SM_ENCODER,
    SM_ENCODER_2,
    SafeNetwork,
    base_group_names,
    build,
    clone_group,
)
from app.safenet.schemas import SafeConfig

logger = get_logger(__name__)

MAGIC = b"SAFECKPT"
VERSION = 1
STORAGE_DTYPE = np.dtype("<f4")

CLONE_SOURCES = {SM_ENCODER_2: SM_ENCODER, SC_DECODER_2: SC_DECODER}


@dataclass
class Checkpoint:
    net: SafeNetwork
    metadata: dict[str, Any] = field(default_factory=dict)


def encode_checkpoint(net: SafeNetwork, metadata: dict[str, Any] | None = None) -> bytes:
    """Serialize ``net`` and JSON-compatible ``metadata`` to bytes."""
    header = json.dumps(
        {
            "config": net.config.model_dump(mode="json"),
            "groups": list(net.groups),
            "metadata": metadata or {},
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    params = net.parameters()
    chunks = [
        MAGIC,
        struct.pack("<II", VERSION, len(header)),
        header,
        struct.pack("<I", len(params)),
    ]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<BB", int(p.trainable), p.data.ndim))
        chunks.append(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype=STORAGE_DTYPE).tobytes())
    return b"".join(chunks)


def save_checkpoint(
    net: SafeNetwork, path: Path, metadata: dict[str, Any] | None = None
) -> Path:
    """Write a checkpoint file, creating parent directories.

    Raises:
        CheckpointError: If the file cannot be written.
    """
    payload = encode_checkpoint(net, metadata)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc
    logger.info(
        "safenet.checkpoint.save_completed",
        path=str(path),
        groups=list(net.groups),
        size_bytes=len(payload),
    )
    return path


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CheckpointError(
                f"truncated checkpoint: {what} needs {size} bytes at offset {self.offset}, "
                f"only {len(self.data) - self.offset} left"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(data: bytes) -> Checkpoint:
    """Rebuild a network from checkpoint bytes.

    Raises:
        CheckpointError: On a bad magic or version, truncation, an invalid
            config, or parameters that do not match the rebuilt network.
    """
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, header_len = reader.unpack("<II", "version/header length")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        header = json.loads(reader.take(header_len, "header").decode("utf-8"))
        config = SafeConfig.model_validate(header["config"])
        groups: list[str] = list(header["groups"])
        metadata: dict[str, Any] = dict(header.get("metadata", {}))
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint header: {exc}") from exc
    except ValidationError as exc:
        raise CheckpointError(f"checkpoint header has an invalid config: {exc}") from exc

    net = build(config)
    base = base_group_names(config)
    if groups[: len(base)] != base:
        raise CheckpointError(f"checkpoint groups {groups} do not start with {base}")
    for extra in groups[len(base) :]:
        if extra not in CLONE_SOURCES:
            raise CheckpointError(f"checkpoint names unknown group {extra!r}")
        clone_group(net, CLONE_SOURCES[extra], extra)

    expected = net.parameters()
    (count,) = reader.unpack("<I", "parameter count")
    if count != len(expected):
        raise CheckpointError(
            f"checkpoint holds {count} parameters, network expects {len(expected)}"
        )
    for position, param in enumerate(expected):
        (name_len,) = reader.unpack("<H", "name length")
        name = reader.take(name_len, "parameter name").decode("utf-8", errors="replace")
        trainable, ndim = reader.unpack("<BB", "flags")
        shape = reader.unpack(f"<{ndim}I", "dims")
        if name != param.name or shape != param.shape:
            raise CheckpointError(
                f"parameter {position}: file has {name} {shape}, network expects "
                f"{param.name} {param.shape}"
            )
        size = int(np.prod(shape, dtype=np.int64)) * STORAGE_DTYPE.itemsize
        values = np.frombuffer(reader.take(size, f"data of {name}"), dtype=STORAGE_DTYPE)
        np.copyto(param.data, values.reshape(shape))
        param.trainable = bool(trainable)
    if reader.offset != len(data):
        raise CheckpointError(f"{len(data) - reader.offset} trailing bytes after parameters")
    return Checkpoint(net, metadata)


def load_checkpoint(path: Path) -> Checkpoint:
    """Read and decode a checkpoint file.

    Raises:
        CheckpointError: If the file is unreadable or malformed.
    """
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    checkpoint = decode_checkpoint(data)
    logger.info(
        "safenet.checkpoint.load_completed", path=str(path), groups=list(checkpoint.net.groups)
    )
    return checkpoint
