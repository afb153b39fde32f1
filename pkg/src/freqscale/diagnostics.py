"""Spectral analysis instruments for denoising trajectories.

Three views: radially bucketed relative log amplitudes per step, cumulative
energy against radius per step, and time-averaged per-channel min-max
normalized maps. Everything exports to plain CSV; plotting is left to
external tooling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .cutoff import cumulative_energy_fractions
from .spectral import SpectralField, squared_radius_grid
from .tensors import LatentTensor, ValidationError


@dataclass(frozen=True)
class RadialProfile:
    """Mean spectral amplitude per integer radius bucket, relative to DC.

    Buckets hold bins with floor(radius) == bucket, pooled over channels.
    ``relative`` is log(mean/mean at bucket 0); buckets that are empty or
    have zero amplitude carry NaN rather than -inf.
    """

    step: Optional[int]
    mean_amplitude: np.ndarray
    relative: np.ndarray

    @property
    def buckets(self) -> int:
        return self.mean_amplitude.size


@dataclass(frozen=True)
class EnergyCurve:
    """Cumulative |U| fraction enclosed within each integer radius."""

    step: Optional[int]
    fractions: np.ndarray

    @property
    def max_radius(self) -> int:
        return self.fractions.size - 1

    def crossing(self, ratio: float) -> int:
        """Smallest radius whose enclosed fraction reaches ``ratio``."""
        return int(np.searchsorted(self.fractions, ratio, side="left"))


@dataclass(frozen=True)
class TimeAverageMap:
    """Mean over steps of per-channel min-max normalized tensors; values in [0, 1]."""

    values: LatentTensor

    def __post_init__(self) -> None:
        data = self.values.data
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValidationError("time-average map values must lie in [0, 1]")


def _floor_radius(height: int, width: int) -> np.ndarray:
    r2 = squared_radius_grid(height, width)
    s = np.floor(np.sqrt(r2.astype(np.float64))).astype(np.int64)
    s = np.where((s + 1) ** 2 <= r2, s + 1, s)
    s = np.where(s**2 > r2, s - 1, s)
    return s


def _bucket_count(height: int, width: int) -> int:
    r2_max = int(squared_radius_grid(height, width).max())
    floor_r = math.isqrt(r2_max)
    ceil_r = floor_r if floor_r * floor_r == r2_max else floor_r + 1
    return ceil_r + 1


def radial_profile(spectrum: SpectralField, step: Optional[int] = None) -> RadialProfile:
    """Relative log amplitude per radius bucket (reference: the DC bucket)."""
    magnitudes = np.abs(spectrum.data).sum(axis=0)
    floors = _floor_radius(spectrum.height, spectrum.width)
    buckets = _bucket_count(spectrum.height, spectrum.width)
    sums = np.bincount(floors.ravel(), weights=magnitudes.ravel(), minlength=buckets)
    counts = np.bincount(floors.ravel(), minlength=buckets) * spectrum.channels
    mean = np.divide(sums, counts, out=np.zeros(buckets), where=counts > 0)
    if mean[0] == 0.0:
        raise ValidationError("undefined relative reference: DC bucket has zero amplitude")
    logs = np.log(mean, out=np.full(buckets, np.nan), where=mean > 0.0)
    relative = logs - logs[0]
    relative[0] = 0.0
    return RadialProfile(step, mean, relative)


def energy_curve(spectrum: SpectralField, step: Optional[int] = None) -> EnergyCurve:
    """Cumulative energy fractions; shares its machinery with the energy cutoff,
    so the cutoff radius is exactly this curve's threshold crossing."""
    return EnergyCurve(step, cumulative_energy_fractions(spectrum))


def time_average(tensors: Sequence[LatentTensor]) -> TimeAverageMap:
    """Mean over steps of per-channel min-max normalized tensors.

    A constant channel has no range to stretch and maps to 0.5.
    """
    if not tensors:
        raise ValidationError("time_average needs at least one tensor")
    shape = tensors[0].shape
    if any(t.shape != shape for t in tensors):
        raise ValidationError("all tensors must share dims")
    acc = np.zeros_like(tensors[0].data)
    for t in tensors:
        lo = t.data.min(axis=(1, 2), keepdims=True)
        hi = t.data.max(axis=(1, 2), keepdims=True)
        span = hi - lo
        normalized = np.where(span > 0.0, (t.data - lo) / np.where(span > 0.0, span, 1.0), 0.5)
        acc += normalized
    return TimeAverageMap(LatentTensor(np.clip(acc / len(tensors), 0.0, 1.0)))


# ---------------------------------------------------------------------------
# CSV export. Floats are written with repr(), which round-trips exactly.

PathLike = Union[str, Path]


def _open_writer(destination: PathLike):
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="", encoding="utf-8")


def write_profiles_csv(profiles: Sequence[RadialProfile], destination: PathLike) -> None:
    """Rows step,radius,value with one row per nonempty bucket."""
    with _open_writer(destination) as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "radius", "value"])
        for profile in profiles:
            for radius, value in enumerate(profile.relative):
                if np.isnan(value):
                    continue
                writer.writerow([profile.step if profile.step is not None else 0, radius, repr(float(value))])


def write_curves_csv(curves: Sequence[EnergyCurve], destination: PathLike) -> None:
    with _open_writer(destination) as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "radius", "value"])
        for curve in curves:
            for radius, value in enumerate(curve.fractions):
                writer.writerow([curve.step if curve.step is not None else 0, radius, repr(float(value))])


def write_map_csv(average: TimeAverageMap, destination: PathLike) -> None:
    data = average.values.data
    channels, height, width = data.shape
    with _open_writer(destination) as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "x", "channel", "value"])
        for y in range(height):
            for x in range(width):
                for c in range(channels):
                    writer.writerow([y, x, c, repr(float(data[c, y, x]))])


def export_csv(
    items: Union[Sequence[RadialProfile], Sequence[EnergyCurve], TimeAverageMap],
    destination: PathLike,
) -> None:
    """Dispatch to the right CSV schema for the given diagnostic values."""
    if isinstance(items, TimeAverageMap):
        write_map_csv(items, destination)
        return
    items = list(items)
    if not items:
        with _open_writer(destination) as fh:
            csv.writer(fh).writerow(["step", "radius", "value"])
        return
    if isinstance(items[0], RadialProfile):
        write_profiles_csv(items, destination)
    elif isinstance(items[0], EnergyCurve):
        write_curves_csv(items, destination)
    else:
        raise TypeError(f"cannot export {type(items[0]).__name__}")
