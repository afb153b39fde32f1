"""Built-in pipelines for the recorder.

The mocks behave like a float32 latent-diffusion loop: descending scheduler
timesteps, a latent that evolves step to step, and two prediction branches
that the pipeline itself merges with its guidance scale. Real pipelines are
integrated by wrapping their denoising loop with
:class:`fqs_recorder.StepBuffer`; the registry refuses anything it cannot
drive with pre-merge branch access.
"""

from __future__ import annotations

import zlib

import numpy as np

from .capture import HookSpec, UnsupportedPipelineError


def _scheduler_timesteps(steps: int, train_steps: int = 1000) -> np.ndarray:
    return np.round(np.linspace(train_steps, 1, steps)).astype(int)


class CfgMockPipeline:
    """Emits pseudo-random float32 branches and merges them like real CFG.

    The merged predictions are retained on the instance so tests can check
    that recomputing the merge from the captured branches reproduces them.
    """

    def __init__(self, height: int = 16, width: int = 16, channels: int = 4):
        self.shape = (channels, height, width)
        self.merged: list[np.ndarray] = []

    def iter_steps(self, spec: HookSpec):
        self.merged = []
        key = zlib.adler32(spec.prompt.encode("utf-8")) ^ (spec.seed & 0xFFFFFFFF)
        rng = np.random.default_rng(key)
        latents = rng.standard_normal(self.shape).astype(np.float32)
        omega = np.float32(spec.guidance_scale)
        for timestep in _scheduler_timesteps(spec.steps):
            cond = rng.standard_normal(self.shape).astype(np.float32)
            uncond = rng.standard_normal(self.shape).astype(np.float32)
            merged = uncond + omega * (cond - uncond)  # float32, like the pipeline
            self.merged.append(merged.copy())
            yield float(timestep), latents.copy(), cond, uncond
            latents = (0.9 * latents - 0.1 * merged).astype(np.float32)


class ConstantMockPipeline:
    """Emits exactly known constant tensors: step i carries value i + 0.5."""

    def __init__(self, height: int = 4, width: int = 4, channels: int = 1):
        self.shape = (channels, height, width)

    def iter_steps(self, spec: HookSpec):
        for index, timestep in enumerate(_scheduler_timesteps(spec.steps)):
            base = np.float32(index + 0.5)
            yield (
                float(timestep),
                np.full(self.shape, base, dtype=np.float32),
                np.full(self.shape, base * 2, dtype=np.float32),
                np.full(self.shape, -base, dtype=np.float32),
            )


class EarlyStopMockPipeline(CfgMockPipeline):
    """Stops after half the requested steps; recording it must fail cleanly."""

    def iter_steps(self, spec: HookSpec):
        for index, step in enumerate(super().iter_steps(spec)):
            if index >= spec.steps // 2:
                return
            yield step


class MergedOnlyMockPipeline:
    """Stands in for pipelines that only surface the post-merge prediction."""


_REGISTRY = {
    "mock:cfg": CfgMockPipeline,
    "mock:const": ConstantMockPipeline,
    "mock:early-stop": EarlyStopMockPipeline,
    "mock:merged-only": MergedOnlyMockPipeline,
}


def resolve_pipeline(pipeline_id: str):
    try:
        factory = _REGISTRY[pipeline_id]
    except KeyError:
        raise UnsupportedPipelineError(
            f"unknown pipeline {pipeline_id!r}; built-ins: {sorted(_REGISTRY)}. "
            "For a real model, wrap its denoising loop with StepBuffer/write_capture."
        ) from None
    return factory()
