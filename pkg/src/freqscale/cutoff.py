"""Per-step cutoff radius rules and time schedules for the band scales.

Two cutoff strategies:
  * spatial ratio: radius = r0 * min(H/2, W/2), a real value;
  * energy: the smallest integer radius whose enclosed spectral magnitude
    reaches a fraction r0 of the total, summed over all channels.

Time schedules modulate only the high-band scale; the low-band scale is
constant over the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import SpectralField, squared_radius_grid
from .tensors import ValidationError

STRATEGY_SPATIAL = "spatial_ratio"
STRATEGY_ENERGY = "energy"
STRATEGIES = (STRATEGY_SPATIAL, STRATEGY_ENERGY)

SCHEDULE_CONSTANT = "constant"
SCHEDULE_LINEAR_DECAY = "linear_decay"
SCHEDULE_LINEAR_GROWTH = "linear_growth"
SCHEDULE_KINDS = (SCHEDULE_CONSTANT, SCHEDULE_LINEAR_DECAY, SCHEDULE_LINEAR_GROWTH)


@dataclass(frozen=True)
class CutoffPolicy:
    strategy: str
    ratio: float

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown cutoff strategy {self.strategy!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValidationError(f"cutoff ratio must be in [0, 1], got {self.ratio}")

    def radius_for(self, spectrum: SpectralField) -> float:
        if self.strategy == STRATEGY_SPATIAL:
            return spatial_cutoff_radius(spectrum.height, spectrum.width, self.ratio)
        return float(energy_cutoff_radius(spectrum, self.ratio))


@dataclass(frozen=True)
class ScaleSchedule:
    """Band scales over a run.

    ``high`` is the constant high-band scale for kind "constant" and the
    peak value for the linear kinds, which interpolate between the peak and
    1 across the run. ``steps`` is the run length; it may be left None for
    constant schedules or filled in later from a trajectory.
    """

    kind: str = SCHEDULE_CONSTANT
    low: float = 1.0
    high: float = 1.0
    steps: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if self.low < 0 or self.high < 0:
            raise ValidationError("band scales must be >= 0")
        if self.steps is not None and self.kind != SCHEDULE_CONSTANT and self.steps < 2:
            raise ValidationError("linear schedules need at least 2 steps")

    def with_steps(self, steps: int) -> "ScaleSchedule":
        if self.steps is not None and self.steps != steps and self.kind != SCHEDULE_CONSTANT:
            raise ValidationError(
                f"schedule is defined over {self.steps} steps but the run has {steps}"
            )
        return ScaleSchedule(self.kind, self.low, self.high, steps)

    def at(self, step: int) -> tuple[float, float]:
        return schedule_scales(self, step)


def spatial_cutoff_radius(height: int, width: int, ratio: float) -> float:
    """Cutoff radius as a fixed fraction of the smaller half-dimension."""
    if height < 1 or width < 1:
        raise ValidationError("dims must be >= 1")
    if not 0.0 <= ratio <= 1.0:
        raise ValidationError(f"ratio must be in [0, 1], got {ratio}")
    return ratio * min(height / 2.0, width / 2.0)


def _min_enclosing_radius(height: int, width: int) -> np.ndarray:
    """Per-bin ceil(sqrt(ky^2 + kx^2)), computed exactly on integers."""
    r2 = squared_radius_grid(height, width)
    s = np.floor(np.sqrt(r2.astype(np.float64))).astype(np.int64)
    # repair any off-by-one from the float sqrt
    s = np.where((s + 1) ** 2 <= r2, s + 1, s)
    s = np.where(s**2 > r2, s - 1, s)
    return s + (s * s != r2)


def cumulative_energy_fractions(spectrum: SpectralField) -> np.ndarray:
    """Fraction of total |U| enclosed within each integer radius 0..R_max.

    Channels are summed so one curve (and one cutoff) covers the whole
    field. Raises on an all-zero spectrum, which has no energy to split.
    """
    magnitudes = np.abs(spectrum.data).sum(axis=0)
    rmin = _min_enclosing_radius(spectrum.height, spectrum.width)
    buckets = np.bincount(rmin.ravel(), weights=magnitudes.ravel(), minlength=int(rmin.max()) + 1)
    cumulative = np.cumsum(buckets)
    total = cumulative[-1]
    if total == 0.0:
        raise ValidationError("all-zero spectrum has no cumulative energy curve")
    return cumulative / total


def energy_cutoff_radius(spectrum: SpectralField, ratio: float) -> int:
    """Smallest integer radius R with cumulative |U| fraction >= ratio.

    An all-zero spectrum yields R = 0: the threshold holds vacuously there.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValidationError(f"ratio must be in [0, 1], got {ratio}")
    if not np.abs(spectrum.data).any():
        return 0
    fractions = cumulative_energy_fractions(spectrum)
    return int(np.searchsorted(fractions, ratio, side="left"))


def schedule_scales(schedule: ScaleSchedule, step: int) -> tuple[float, float]:
    """(low, high) scales at a sampler-call step (0 = first, noisiest call).

    Linear decay starts at the peak and falls to 1 over the run; linear
    growth is its mirror. Growth is computed as (1 + peak) - decay, which
    is the same line but keeps decay(t) + growth(t) == 1 + peak exact in
    float64 at every step.
    """
    if schedule.kind == SCHEDULE_CONSTANT:
        return schedule.low, schedule.high

    if schedule.steps is None:
        raise ValidationError("linear schedule used without a step count")
    total = schedule.steps
    if total < 2:
        raise ValidationError("linear schedules need at least 2 steps")
    if not 0 <= step <= total - 1:
        raise ValidationError(f"step {step} outside [0, {total - 1}]")

    peak = schedule.high
    frac = (total - 1 - step) / (total - 1)
    decay = frac * (peak - 1.0) + 1.0
    if schedule.kind == SCHEDULE_LINEAR_DECAY:
        return schedule.low, decay
    return schedule.low, (1.0 + peak) - decay
