"""Capture per-step prediction branches from a diffusion pipeline.

The recorder is capture-only: it stores the raw conditional and
unconditional noise predictions (plus the latent) before the pipeline's own
guidance merge, so the merge can always be recomputed or rescaled offline.
It never applies any band rescaling itself.

Tensors are accepted as numpy arrays or anything with a
``detach().cpu().numpy()`` chain (framework tensors); they are moved to host
memory and stored float32. The batch dimension, if present, must be 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from freqscale import (
    LatentTensor,
    TrajectoryRecord,
    build_trajectory,
    write_container,
)


class RecorderError(RuntimeError):
    """Capture failed; no output file was produced."""


class UnsupportedPipelineError(RecorderError):
    """The pipeline does not expose both prediction branches before merging."""


@dataclass(frozen=True)
class HookSpec:
    """What to record: which pipeline, how many steps, where to write."""

    pipeline_id: str
    steps: int
    prompt: str
    output_path: str
    seed: int = 0
    guidance_scale: float = 7.5

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise RecorderError("steps must be >= 1")


def _to_host_f32(value: Any, what: str) -> np.ndarray:
    if hasattr(value, "detach"):  # framework tensor
        value = value.detach()
        if hasattr(value, "cpu"):
            value = value.cpu()
        value = value.numpy()
    arr = np.asarray(value)
    if arr.ndim == 4:
        if arr.shape[0] != 1:
            raise RecorderError(f"{what}: batch dimension must be 1, got {arr.shape[0]}")
        arr = arr[0]
    if arr.ndim != 3:
        raise RecorderError(f"{what}: expected (C, H, W) or (1, C, H, W), got shape {arr.shape}")
    arr = arr.astype(np.float32)
    if not np.isfinite(arr).all():
        raise RecorderError(f"{what}: non-finite values captured")
    return arr


@dataclass
class StepBuffer:
    """Accumulates captured steps; validates shape consistency as it goes.

    Real pipelines plug this into their denoising loop: call :meth:`add`
    once per step with the pre-merge branches, then hand the buffer to
    :func:`write_capture`.
    """

    expected_steps: int
    _steps: list[tuple[float, np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]] = field(
        default_factory=list
    )

    def add(
        self,
        timestep: float,
        latents: Any,
        noise_pred_cond: Any = None,
        noise_pred_uncond: Any = None,
    ) -> None:
        if noise_pred_cond is None and noise_pred_uncond is None:
            raise UnsupportedPipelineError(
                "capture requires at least one pre-merge prediction branch"
            )
        x = _to_host_f32(latents, "latents")
        cond = None if noise_pred_cond is None else _to_host_f32(noise_pred_cond, "noise_pred_cond")
        uncond = (
            None if noise_pred_uncond is None else _to_host_f32(noise_pred_uncond, "noise_pred_uncond")
        )
        for name, branch in (("noise_pred_cond", cond), ("noise_pred_uncond", uncond)):
            if branch is not None and branch.shape != x.shape:
                raise RecorderError(f"{name} shape {branch.shape} differs from latents {x.shape}")
        if self._steps and x.shape != self._steps[0][1].shape:
            raise RecorderError(
                f"step {len(self._steps)}: shape {x.shape} differs from first step"
            )
        self._steps.append((float(timestep), x, cond, uncond))

    def __len__(self) -> int:
        return len(self._steps)

    @property
    def timesteps(self) -> list[float]:
        return [s[0] for s in self._steps]


def write_capture(buffer: StepBuffer, spec: HookSpec, extra_metadata: Optional[dict] = None) -> Path:
    """Validate a finished capture and write the trajectory container.

    Refuses a step-count mismatch (early-stopped pipeline) outright, so a
    partial run never leaves a file behind.
    """
    if len(buffer) != buffer.expected_steps:
        raise RecorderError(
            f"pipeline produced {len(buffer)} steps, expected {buffer.expected_steps}; not writing"
        )
    records = []
    for index, (timestep, x, cond, uncond) in enumerate(buffer._steps):
        records.append(
            TrajectoryRecord(
                index,
                timestep,
                LatentTensor(x.astype(np.float64)),
                None if cond is None else LatentTensor(cond.astype(np.float64)),
                None if uncond is None else LatentTensor(uncond.astype(np.float64)),
            )
        )
    metadata = {
        "recorder": "fqs-recorder/0.1.0",
        "model": spec.pipeline_id,
        "prompt": spec.prompt,
        "seed": spec.seed,
        "guidance_scale": spec.guidance_scale,
        "steps": spec.steps,
        "scheduler_timesteps": buffer.timesteps,
    }
    metadata.update(extra_metadata or {})
    out = Path(spec.output_path)
    write_container(build_trajectory(records, metadata), out)
    return out


def record_run(spec: HookSpec, pipeline: Any = None) -> Path:
    """Drive a pipeline for ``spec.steps`` steps and write the trajectory.

    ``pipeline`` may be any object with an ``iter_steps(spec)`` method
    yielding per-step ``(timestep, latents, noise_pred_cond,
    noise_pred_uncond)`` tuples; when omitted, ``spec.pipeline_id`` is
    resolved against the built-in registry (``mock:*``).
    """
    if pipeline is None:
        from .pipelines import resolve_pipeline

        pipeline = resolve_pipeline(spec.pipeline_id)
    if not hasattr(pipeline, "iter_steps"):
        raise UnsupportedPipelineError(
            f"pipeline {spec.pipeline_id!r} does not expose per-step branch access; "
            "wrap its denoising loop with StepBuffer instead"
        )
    buffer = StepBuffer(expected_steps=spec.steps)
    steps: Iterable = pipeline.iter_steps(spec)
    for timestep, latents, cond, uncond in steps:
        buffer.add(timestep, latents, cond, uncond)
    return write_capture(buffer, spec)
