"""Core tensor and trajectory data model.

All values are immutable after construction (backing arrays are frozen), so
they can be shared freely across threads. Computation happens in float64;
the on-disk container format stores float32 (see :mod:`freqscale.container`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """A value violates its type invariants (bad dims, non-finite data, ...)."""


def _frozen_array(data: Any, dtype: np.dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype, order="C", copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LatentTensor:
    """A real H x W x C field: a latent, a noise prediction, or a noise difference.

    Data is stored channel-outermost as a (C, H, W) float64 array, so each
    channel plane is a contiguous H x W slice.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValidationError(f"tensor data must be (C, H, W), got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ValidationError(f"tensor dims must be positive, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("tensor contains non-finite values")
        object.__setattr__(self, "data", _frozen_array(arr, np.float64))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        """(H, W, C)."""
        c, h, w = self.data.shape
        return (h, w, c)

    @classmethod
    def zeros(cls, height: int, width: int, channels: int = 1) -> "LatentTensor":
        return cls(np.zeros((channels, height, width)))

    @classmethod
    def full(cls, height: int, width: int, value: float, channels: int = 1) -> "LatentTensor":
        return cls(np.full((channels, height, width), float(value)))

    def same_shape(self, other: "LatentTensor") -> bool:
        return self.data.shape == other.data.shape

    def __add__(self, other: "LatentTensor") -> "LatentTensor":
        if not self.same_shape(other):
            raise ValidationError("shape mismatch in tensor addition")
        return LatentTensor(self.data + other.data)

    def __sub__(self, other: "LatentTensor") -> "LatentTensor":
        if not self.same_shape(other):
            raise ValidationError("shape mismatch in tensor subtraction")
        return LatentTensor(self.data - other.data)

    def __mul__(self, scalar: float) -> "LatentTensor":
        return LatentTensor(self.data * float(scalar))

    __rmul__ = __mul__


def quantize_f32(tensor: LatentTensor) -> LatentTensor:
    """Round values to the nearest float32, keeping float64 storage.

    Tensors produced this way survive a container write/read cycle
    bit-exactly, because the on-disk payload is float32.
    """
    return LatentTensor(tensor.data.astype(np.float32).astype(np.float64))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One denoising step: the latent plus the raw noise-prediction branches.

    Either prediction branch may be absent. A record without the
    unconditional branch only supports the epsilon guidance target (which
    rescales the conditional prediction directly); the delta target needs
    both branches so the difference can always be recomputed from source.
    """

    step_index: int
    timestep: float
    x_t: LatentTensor
    eps_cond: Optional[LatentTensor] = None
    eps_uncond: Optional[LatentTensor] = None

    def __post_init__(self) -> None:
        if self.step_index < 0:
            raise ValidationError(f"step_index must be >= 0, got {self.step_index}")
        if not np.isfinite(self.timestep):
            raise ValidationError("timestep must be finite")
        for name, t in (("eps_cond", self.eps_cond), ("eps_uncond", self.eps_uncond)):
            if t is not None and not t.same_shape(self.x_t):
                raise ValidationError(f"{name} shape differs from x_t")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.x_t.shape

    def tensors(self) -> Iterator[tuple[str, LatentTensor]]:
        yield "x_t", self.x_t
        if self.eps_cond is not None:
            yield "eps_cond", self.eps_cond
        if self.eps_uncond is not None:
            yield "eps_uncond", self.eps_uncond


@dataclass(frozen=True)
class Trajectory:
    """Ordered step records from a sampling run, plus free-form metadata."""

    records: tuple[TrajectoryRecord, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        for i, rec in enumerate(records):
            if rec.step_index != i:
                raise ValidationError(
                    f"records must be contiguous: expected step_index {i}, got {rec.step_index}"
                )
            if rec.shape != records[0].shape:
                raise ValidationError("all records must share the same tensor shape")
        if not isinstance(self.metadata, dict) or any(
            not isinstance(k, str) for k in self.metadata
        ):
            raise ValidationError("metadata must be a dict with string keys")

    @property
    def steps(self) -> int:
        return len(self.records)

    @property
    def shape(self) -> tuple[int, int, int]:
        if not self.records:
            raise ValidationError("empty trajectory has no shape")
        return self.records[0].shape

    def has_branch(self, name: str) -> bool:
        """True when every record carries the named prediction branch."""
        if name not in ("eps_cond", "eps_uncond"):
            raise ValueError(f"unknown branch {name!r}")
        return all(getattr(r, name) is not None for r in self.records)

    def select(self, representation: str) -> list[LatentTensor]:
        """Pull one tensor sequence out of the records.

        representation: "x" (latents), "eps" (conditional prediction) or
        "delta" (conditional minus unconditional prediction).
        """
        if representation == "x":
            return [r.x_t for r in self.records]
        if representation == "eps":
            if not self.has_branch("eps_cond"):
                raise MissingBranchError("representation 'eps' needs eps_cond on every record")
            return [r.eps_cond for r in self.records]
        if representation == "delta":
            if not (self.has_branch("eps_cond") and self.has_branch("eps_uncond")):
                raise MissingBranchError("representation 'delta' needs both prediction branches")
            return [r.eps_cond - r.eps_uncond for r in self.records]
        raise ValueError(f"unknown representation {representation!r}")


class MissingBranchError(ValueError):
    """A record lacks the prediction branch required by the requested operation."""


def build_trajectory(
    records: Sequence[TrajectoryRecord], metadata: Optional[dict[str, Any]] = None
) -> Trajectory:
    return Trajectory(tuple(records), dict(metadata or {}))
