"""Band-split rescaling of classifier-free guidance.

The package splits the conditional/unconditional noise-prediction gap of a
diffusion sampler into low and high radial-frequency bands, rescales the
bands independently under spatial-ratio or energy cutoffs and optional time
schedules, and verifies the whole mechanism on an analytic Gaussian-mixture
backend plus recorded trajectories.
"""

from .container import ContainerError, read_container, write_container
from .cutoff import (
    CutoffPolicy,
    ScaleSchedule,
    energy_cutoff_radius,
    schedule_scales,
    spatial_cutoff_radius,
)
from .diagnostics import (
    EnergyCurve,
    RadialProfile,
    TimeAverageMap,
    energy_curve,
    export_csv,
    radial_profile,
    time_average,
)
from .guidance import (
    GuidanceConfig,
    GuidedStepOutput,
    guided_step,
    noise_difference,
    process_trajectory,
    scale_bands,
)
from .spectral import (
    FrequencyMask,
    ImaginaryResidueError,
    SpectralField,
    build_radial_mask,
    decompose,
    fft2_centered,
    ifft2_centered,
)
from .tensors import (
    LatentTensor,
    MissingBranchError,
    Trajectory,
    TrajectoryRecord,
    ValidationError,
    build_trajectory,
    quantize_f32,
)
from .toy import (
    GaussianMixture,
    MixtureComponent,
    NoiseSchedule,
    ddim_sample,
    linear_beta_schedule,
    log_density,
    optimal_noise,
    point_mass_mixture,
    spectral_trend_mixture,
    two_band_mixture,
)

__version__ = "0.1.0"

__all__ = [
    "ContainerError",
    "CutoffPolicy",
    "EnergyCurve",
    "FrequencyMask",
    "GaussianMixture",
    "GuidanceConfig",
    "GuidedStepOutput",
    "ImaginaryResidueError",
    "LatentTensor",
    "MissingBranchError",
    "MixtureComponent",
    "NoiseSchedule",
    "RadialProfile",
    "ScaleSchedule",
    "SpectralField",
    "TimeAverageMap",
    "Trajectory",
    "TrajectoryRecord",
    "ValidationError",
    "build_radial_mask",
    "build_trajectory",
    "ddim_sample",
    "decompose",
    "energy_curve",
    "energy_cutoff_radius",
    "export_csv",
    "fft2_centered",
    "guided_step",
    "ifft2_centered",
    "linear_beta_schedule",
    "log_density",
    "noise_difference",
    "optimal_noise",
    "point_mass_mixture",
    "process_trajectory",
    "quantize_f32",
    "radial_profile",
    "read_container",
    "scale_bands",
    "schedule_scales",
    "spatial_cutoff_radius",
    "spectral_trend_mixture",
    "time_average",
    "two_band_mixture",
    "write_container",
]
