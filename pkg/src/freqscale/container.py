"""Bit-exact binary container for tensors and trajectories.

Layout (all integers little-endian):

    magic  4 bytes  46 51 53 31 ("FQS" + format version "1")
    kind   u8       0 = tensor, 1 = trajectory

    tensor:      u32 H, u32 W, u32 C, then H*W*C float32 values,
                 channel-outermost (C contiguous H x W planes)
    trajectory:  u32 T, u32 H, u32 W, u32 C, u32 metadata_len,
                 metadata_len bytes of UTF-8 JSON object, then T records:
                     u32 step_index, f64 timestep,
                     u8 presence bitmap (bit0 x_t, bit1 eps_cond, bit2 eps_uncond),
                     present tensors' raw float32 payloads in bitmap order

Reads are strict: anything malformed raises :class:`ContainerError` with a
stable message class, never a partial value.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .tensors import (
    LatentTensor,
    Trajectory,
    TrajectoryRecord,
    ValidationError,
    build_trajectory,
)

MAGIC_PREFIX = b"FQS"
FORMAT_VERSION = b"1"
MAGIC = MAGIC_PREFIX + FORMAT_VERSION

KIND_TENSOR = 0
KIND_TRAJECTORY = 1

_PRESENT_X = 1
_PRESENT_COND = 2
_PRESENT_UNCOND = 4

# Hard ceiling on a single tensor payload (elements); anything above is
# treated as a corrupt header rather than an allocation request.
MAX_ELEMENTS = 1 << 28

PathLike = Union[str, Path]


class ContainerError(ValueError):
    """Malformed container input."""


def _f32_payload(tensor: LatentTensor) -> bytes:
    with np.errstate(over="ignore"):  # overflow is rejected explicitly below
        f32 = tensor.data.astype("<f4")
    if not np.isfinite(f32).all():
        raise ValidationError("tensor value exceeds float32 range")
    return f32.tobytes()


def _serialize_tensor(tensor: LatentTensor) -> bytes:
    h, w, c = tensor.shape
    return (
        MAGIC
        + struct.pack("<B", KIND_TENSOR)
        + struct.pack("<III", h, w, c)
        + _f32_payload(tensor)
    )


def _record_bitmap(rec: TrajectoryRecord) -> int:
    bitmap = _PRESENT_X
    if rec.eps_cond is not None:
        bitmap |= _PRESENT_COND
    if rec.eps_uncond is not None:
        bitmap |= _PRESENT_UNCOND
    return bitmap


def _serialize_trajectory(traj: Trajectory) -> bytes:
    if not traj.records:
        raise ValidationError("cannot serialize an empty trajectory")
    h, w, c = traj.shape
    metadata = json.dumps(traj.metadata, sort_keys=True).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<B", KIND_TRAJECTORY),
        struct.pack("<IIIII", traj.steps, h, w, c, len(metadata)),
        metadata,
    ]
    for rec in traj.records:
        parts.append(struct.pack("<Id B", rec.step_index, rec.timestep, _record_bitmap(rec)))
        for _, tensor in rec.tensors():
            parts.append(_f32_payload(tensor))
    return b"".join(parts)


def write_container(value: Union[LatentTensor, Trajectory], destination: PathLike) -> int:
    """Serialize a tensor or trajectory to ``destination``, atomically.

    Returns the number of bytes written. The file appears only once fully
    written (temp file + rename), so readers never observe partial output.
    """
    if isinstance(value, LatentTensor):
        blob = _serialize_tensor(value)
    elif isinstance(value, Trajectory):
        blob = _serialize_trajectory(value)
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")

    dest = Path(destination)
    dest.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=dest.parent, prefix=dest.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp_name, dest)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return len(blob)


class _Cursor:
    """Strict forward reader over an in-memory blob."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise ContainerError(f"truncated payload: expected {n} more bytes for {what}")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]

    def done(self) -> bool:
        return self.pos == len(self.blob)


def _check_dims(h: int, w: int, c: int) -> None:
    if min(h, w, c) < 1:
        raise ContainerError(f"invalid dimensions {h}x{w}x{c}")
    if h * w * c > MAX_ELEMENTS:
        raise ContainerError(f"dimension overflow: {h}x{w}x{c} exceeds element limit")


def _read_tensor_payload(cur: _Cursor, h: int, w: int, c: int, what: str) -> LatentTensor:
    raw = cur.take(4 * h * w * c, what)
    values = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(c, h, w)
    if not np.isfinite(values).all():
        raise ContainerError(f"NaN in payload: {what}")
    return LatentTensor(values)


def _read_trajectory(cur: _Cursor) -> Trajectory:
    steps = cur.u32("record count")
    h = cur.u32("height")
    w = cur.u32("width")
    c = cur.u32("channels")
    _check_dims(h, w, c)
    metadata_len = cur.u32("metadata length")
    raw_metadata = cur.take(metadata_len, "metadata")
    try:
        metadata = json.loads(raw_metadata.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"invalid metadata: {exc}") from exc
    if not isinstance(metadata, dict):
        raise ContainerError("invalid metadata: not a key/value object")

    records = []
    for i in range(steps):
        step_index = cur.u32(f"record {i} step index")
        if step_index != i:
            raise ContainerError(f"record {i} has out-of-order step index {step_index}")
        timestep = cur.f64(f"record {i} timestep")
        if not np.isfinite(timestep):
            raise ContainerError(f"NaN in payload: record {i} timestep")
        bitmap = cur.u8(f"record {i} presence bitmap")
        if bitmap & ~(_PRESENT_X | _PRESENT_COND | _PRESENT_UNCOND):
            raise ContainerError(f"record {i} has unknown presence bits {bitmap:#04x}")
        if not bitmap & _PRESENT_X:
            raise ContainerError(f"record {i} is missing the x_t tensor")
        x_t = _read_tensor_payload(cur, h, w, c, f"record {i} x_t")
        eps_cond = (
            _read_tensor_payload(cur, h, w, c, f"record {i} eps_cond")
            if bitmap & _PRESENT_COND
            else None
        )
        eps_uncond = (
            _read_tensor_payload(cur, h, w, c, f"record {i} eps_uncond")
            if bitmap & _PRESENT_UNCOND
            else None
        )
        records.append(TrajectoryRecord(step_index, timestep, x_t, eps_cond, eps_uncond))
    if not records:
        raise ContainerError("trajectory must contain at least one record")
    return build_trajectory(records, metadata)


def read_container(source: PathLike) -> Union[LatentTensor, Trajectory]:
    """Parse a container file, validating every structural invariant."""
    blob = Path(source).read_bytes()
    cur = _Cursor(blob)

    magic = cur.take(4, "magic")
    if magic[:3] != MAGIC_PREFIX:
        raise ContainerError(f"bad magic: {magic!r}")
    if magic[3:4] != FORMAT_VERSION:
        raise ContainerError(f"version mismatch: got {magic[3:4]!r}, expected {FORMAT_VERSION!r}")

    kind = cur.u8("kind")
    if kind == KIND_TENSOR:
        h = cur.u32("height")
        w = cur.u32("width")
        c = cur.u32("channels")
        _check_dims(h, w, c)
        value: Union[LatentTensor, Trajectory] = _read_tensor_payload(cur, h, w, c, "tensor data")
    elif kind == KIND_TRAJECTORY:
        value = _read_trajectory(cur)
    else:
        raise ContainerError(f"unknown kind byte {kind}")

    if not cur.done():
        raise ContainerError(f"trailing data: {len(blob) - cur.pos} unexpected bytes")
    return value


def tensor_file_size(height: int, width: int, channels: int) -> int:
    """Exact byte size of a tensor container with the given dims."""
    return 4 + 1 + 12 + 4 * height * width * channels


def trajectory_file_size(
    steps: int, height: int, width: int, channels: int, metadata_bytes: int, tensors_per_record: int
) -> int:
    """Exact byte size of a trajectory container."""
    record = 4 + 8 + 1 + tensors_per_record * 4 * height * width * channels
    return 4 + 1 + 20 + metadata_bytes + steps * record
