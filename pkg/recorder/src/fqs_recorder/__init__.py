"""Capture adapter: per-step diffusion pipeline branches into FQS1 files."""

from .capture import (
    HookSpec,
    RecorderError,
    StepBuffer,
    UnsupportedPipelineError,
    record_run,
    write_capture,
)
from .pipelines import resolve_pipeline

__version__ = "0.1.0"

__all__ = [
    "HookSpec",
    "RecorderError",
    "StepBuffer",
    "UnsupportedPipelineError",
    "record_run",
    "resolve_pipeline",
    "write_capture",
]
