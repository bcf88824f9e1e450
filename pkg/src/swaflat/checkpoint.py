"""SWCK checkpoint files.

Layout (all integers little-endian)::

    b"SWCK"                     magic
    u32                         format version
    u32                         number of groups
    per group:
        u32                     name length in bytes
        bytes                   UTF-8 name
        u64                     offset
        u64                     length
    f64 * total                 parameter values, IEEE-754 little-endian

A sibling ``<name>.json`` file holds ``{step, seed, config_digest, created_at}``.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import ClassVar

import numpy as np

from swaflat.errors import CheckpointError, LayoutError
from swaflat.params import Group, ParamVector

UTC = timezone.utc

SWCK_MAGIC = b"SWCK"
SWCK_VERSION = 1


@dataclass(frozen=True)
class CheckpointMetadata:
    step: int
    seed: int
    config_digest: str
    created_at: str = ""

    @classmethod
    def now(cls, step: int, seed: int, config_digest: str) -> CheckpointMetadata:
        """Metadata stamped with the current UTC time, or ``SOURCE_DATE_EPOCH`` if set."""
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        moment = (
            datetime.fromtimestamp(int(epoch), tz=UTC) if epoch else datetime.now(tz=UTC)
        )
        return cls(step, seed, config_digest, moment.isoformat(timespec="seconds"))


class _Header:
    start: ClassVar[struct.Struct] = struct.Struct(
        "<"
        "4s"  # magic
        "I"  # format version
        "I"  # group count
    )
    name_length: ClassVar[struct.Struct] = struct.Struct("<I")
    extent: ClassVar[struct.Struct] = struct.Struct(
        "<"
        "Q"  # offset
        "Q"  # length
    )


def encode(w: ParamVector) -> bytes:
    """Serialize ``w`` to SWCK bytes."""
    parts = [_Header.start.pack(SWCK_MAGIC, SWCK_VERSION, len(w.groups))]
    for group in w.groups:
        name = group.name.encode("utf-8")
        parts.append(_Header.name_length.pack(len(name)))
        parts.append(name)
        parts.append(_Header.extent.pack(group.offset, group.length))
    parts.append(w.values.astype("<f8").tobytes())
    return b"".join(parts)


def decode(data: bytes, source: str = "<bytes>") -> ParamVector:
    """Parse SWCK bytes; raises ``CheckpointError`` on any inconsistency."""
    view = memoryview(data)
    if len(view) < _Header.start.size:
        raise CheckpointError(f"{source}: file too small for a SWCK header")
    magic, version, count = _Header.start.unpack_from(view, 0)
    if magic != SWCK_MAGIC:
        raise CheckpointError(f"{source}: not a SWCK checkpoint (magic {magic!r})")
    if version != SWCK_VERSION:
        raise CheckpointError(
            f"{source}: unsupported SWCK version {version} (supported: {SWCK_VERSION})"
        )
    position = _Header.start.size
    groups = []
    try:
        for _ in range(count):
            (length,) = _Header.name_length.unpack_from(view, position)
            position += _Header.name_length.size
            raw_name = bytes(view[position : position + length])
            if len(raw_name) != length:
                raise CheckpointError(f"{source}: truncated group table")
            position += length
            offset, size = _Header.extent.unpack_from(view, position)
            position += _Header.extent.size
            groups.append(Group(raw_name.decode("utf-8"), offset, size))
    except struct.error as exc:
        raise CheckpointError(f"{source}: truncated group table") from exc
    except UnicodeDecodeError as exc:
        raise CheckpointError(f"{source}: group name is not valid UTF-8") from exc

    total = groups[-1].stop if groups else 0
    payload = view[position:]
    if len(payload) != total * 8:
        raise CheckpointError(
            f"{source}: expected {total * 8} bytes of parameter data, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    try:
        return ParamVector(values, groups)
    except LayoutError as exc:
        raise CheckpointError(f"{source}: invalid group table: {exc}") from exc


def metadata_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_checkpoint(
    path: str | Path, w: ParamVector, metadata: CheckpointMetadata | None = None
) -> Path:
    """Write ``w`` (and its metadata sidecar, if given) and return the checkpoint path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode(w))
    if metadata is not None:
        metadata_path(path).write_text(json.dumps(asdict(metadata), indent=2, sort_keys=True))
    return path


def read_checkpoint(path: str | Path) -> ParamVector:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise CheckpointError(f"Checkpoint not found: {path}") from exc
    return decode(data, source=str(path))


def read_metadata(path: str | Path) -> CheckpointMetadata | None:
    """Metadata of the checkpoint at ``path``; ``None`` when there is no sidecar."""
    sidecar = metadata_path(Path(path))
    if not sidecar.exists():
        return None
    try:
        return CheckpointMetadata(**json.loads(sidecar.read_text()))
    except (json.JSONDecodeError, TypeError) as exc:
        raise CheckpointError(f"Corrupt checkpoint metadata: {sidecar}") from exc
