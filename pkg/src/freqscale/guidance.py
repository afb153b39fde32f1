"""The guided-step mechanism: band-rescaled classifier-free guidance.

Per step: take the conditional/unconditional prediction difference, split
its spectrum at the active cutoff radius, scale the two bands independently,
and recombine into the final guided noise prediction. With both scales at 1
this reduces exactly to plain classifier-free guidance. The epsilon target
mode rescales a single (conditional) prediction directly instead, for
pipelines that run a fixed guidance scale of 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .cutoff import (
    STRATEGY_ENERGY,
    CutoffPolicy,
    ScaleSchedule,
    spatial_cutoff_radius,
)
from .spectral import (
    FrequencyMask,
    SpectralField,
    build_radial_mask,
    fft2_centered,
    ifft2_centered,
)
from .tensors import LatentTensor, MissingBranchError, Trajectory, TrajectoryRecord, ValidationError

TARGET_DELTA = "delta"
TARGET_EPSILON = "epsilon"
TARGETS = (TARGET_DELTA, TARGET_EPSILON)


@dataclass(frozen=True)
class GuidanceConfig:
    guidance_scale: float
    schedule: ScaleSchedule
    cutoff: CutoffPolicy
    target: str = TARGET_DELTA

    def __post_init__(self) -> None:
        if self.guidance_scale < 0:
            raise ValidationError(f"guidance scale must be >= 0, got {self.guidance_scale}")
        if self.target not in TARGETS:
            raise ValidationError(f"unknown guidance target {self.target!r}")


@dataclass(frozen=True)
class GuidedStepOutput:
    """Everything produced at one step.

    ``delta_raw``/``delta_scaled`` are the manipulation target before and
    after band rescaling: the prediction difference in delta mode, the
    conditional prediction itself in epsilon mode.
    """

    eps_hat: LatentTensor
    delta_raw: LatentTensor
    delta_scaled: LatentTensor
    radius_used: float
    low_scale: float
    high_scale: float


def noise_difference(eps_cond: LatentTensor, eps_uncond: LatentTensor) -> LatentTensor:
    """Conditional minus unconditional prediction."""
    if not eps_cond.same_shape(eps_uncond):
        raise ValidationError("prediction branches differ in shape")
    return eps_cond - eps_uncond


def scale_bands(
    tensor: LatentTensor, mask: FrequencyMask, low_scale: float, high_scale: float
) -> LatentTensor:
    """Rescale the low/high bands of a tensor independently.

    Applied in the spectral domain as a single weighted mask, so exactly one
    inverse transform runs; the result equals low_scale * low_band +
    high_scale * high_band.
    """
    h, w, _ = tensor.shape
    if (mask.height, mask.width) != (h, w):
        raise ValidationError("mask dims do not match tensor dims")
    weights = low_scale * mask.low + high_scale * mask.high
    spectrum = fft2_centered(tensor)
    return ifft2_centered(SpectralField(spectrum.data * weights))


def _resolve_radius(policy: CutoffPolicy, target: LatentTensor) -> float:
    if policy.strategy == STRATEGY_ENERGY:
        return policy.radius_for(fft2_centered(target))
    h, w, _ = target.shape
    return spatial_cutoff_radius(h, w, policy.ratio)


def guided_step(record: TrajectoryRecord, config: GuidanceConfig, step: int) -> GuidedStepOutput:
    """Run one guided denoising step on a recorded step's branches.

    delta target:   eps_hat = eps_uncond + scale * rescale(eps_cond - eps_uncond)
    epsilon target: eps_hat = rescale(eps_cond); the guidance scale is not
                    applied (the single branch is used as-is).

    The cutoff radius comes from the config policy, evaluated on this step's
    dims (spatial) or on the spectrum of the tensor being rescaled (energy).
    """
    low_scale, high_scale = config.schedule.at(step)

    if config.target == TARGET_DELTA:
        if record.eps_cond is None or record.eps_uncond is None:
            raise MissingBranchError("delta target needs both eps_cond and eps_uncond")
        target = noise_difference(record.eps_cond, record.eps_uncond)
    else:
        if record.eps_cond is None:
            raise MissingBranchError("epsilon target needs the conditional prediction")
        target = record.eps_cond

    radius = _resolve_radius(config.cutoff, target)
    h, w, _ = target.shape
    mask = build_radial_mask(h, w, radius)
    scaled = scale_bands(target, mask, low_scale, high_scale)

    if config.target == TARGET_DELTA:
        eps_hat = record.eps_uncond + config.guidance_scale * scaled
    else:
        eps_hat = scaled

    return GuidedStepOutput(eps_hat, target, scaled, radius, low_scale, high_scale)


class GuidanceStepError(RuntimeError):
    """A per-step failure inside a trajectory run, tagged with its step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


def _worker_count() -> int:
    raw = os.environ.get("FQS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def process_trajectory(
    trajectory: Trajectory, config: GuidanceConfig, max_workers: int | None = None
) -> list[GuidedStepOutput]:
    """Apply the guided step to every record, in step order.

    Steps are independent; FQS_THREADS (or ``max_workers``) caps how many run
    concurrently. Results are returned in step order regardless.
    """
    if not trajectory.records:
        return []
    resolved = GuidanceConfig(
        config.guidance_scale,
        config.schedule.with_steps(trajectory.steps),
        config.cutoff,
        config.target,
    )

    def run(record: TrajectoryRecord) -> GuidedStepOutput:
        try:
            return guided_step(record, resolved, record.step_index)
        except Exception as exc:
            raise GuidanceStepError(record.step_index, exc) from exc

    workers = max_workers if max_workers is not None else _worker_count()
    if workers <= 1:
        return [run(r) for r in trajectory.records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, trajectory.records))
