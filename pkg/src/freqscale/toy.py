"""Analytic diffusion backend over isotropic Gaussian mixtures.

The learned noise predictor is replaced by the exact posterior-mean
predictor of a Gaussian mixture under the variance-preserving forward
process, so guided sampling runs end-to-end against a known ground truth.
Conditioning restricts the mixture to the components carrying a label;
the unconditional branch uses all components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .guidance import GuidanceConfig, guided_step
from .tensors import (
    LatentTensor,
    Trajectory,
    TrajectoryRecord,
    ValidationError,
    build_trajectory,
    quantize_f32,
)

RESPONSIBILITY_FLOOR = 1e-300


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal fractions alpha_bar[t-1] for timesteps t = 1..T.

    Larger t is noisier: values are strictly decreasing, close to 1 at the
    data end and close to 0 at the noise end.
    """

    alpha_bar: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(np.asarray(self.alpha_bar, dtype=np.float64), copy=True)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("alpha_bar must be a non-empty 1D sequence")
        if not ((arr > 0).all() and (arr <= 1).all()):
            raise ValidationError("alpha_bar values must lie in (0, 1]")
        if not (np.diff(arr) < 0).all():
            raise ValidationError("alpha_bar must be strictly decreasing in t")
        arr.flags.writeable = False
        object.__setattr__(self, "alpha_bar", arr)

    @property
    def steps(self) -> int:
        return self.alpha_bar.size

    def at(self, t: int) -> float:
        if not 1 <= t <= self.steps:
            raise ValidationError(f"timestep {t} outside [1, {self.steps}]")
        return float(self.alpha_bar[t - 1])


def linear_beta_schedule(steps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Variance-preserving schedule with linearly spaced per-step betas."""
    if steps < 2:
        raise ValidationError("schedule needs at least 2 steps")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValidationError("betas must satisfy 0 < beta_start <= beta_end < 1")
    betas = np.linspace(beta_start, beta_end, steps)
    return NoiseSchedule(np.cumprod(1.0 - betas))


@dataclass(frozen=True)
class MixtureComponent:
    mean: LatentTensor
    variance: float
    weight: float
    label: str

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValidationError(f"component variance must be >= 0, got {self.variance}")
        if self.weight <= 0:
            raise ValidationError(f"component weight must be > 0, got {self.weight}")


@dataclass(frozen=True)
class GaussianMixture:
    components: tuple[MixtureComponent, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValidationError("mixture needs at least one component")
        if abs(sum(c.weight for c in comps) - 1.0) > 1e-12:
            raise ValidationError("component weights must sum to 1")
        shape = comps[0].mean.shape
        if any(c.mean.shape != shape for c in comps):
            raise ValidationError("all component means must share dims")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.components[0].mean.shape

    @property
    def labels(self) -> set[str]:
        return {c.label for c in self.components}

    def subset(self, condition: Optional[str]) -> tuple[MixtureComponent, ...]:
        if condition is None:
            return self.components
        chosen = tuple(c for c in self.components if c.label == condition)
        if not chosen:
            raise ValidationError(f"no mixture component carries label {condition!r}")
        return chosen


def _logsumexp(values: np.ndarray) -> float:
    peak = values.max()
    return float(peak + np.log(np.exp(values - peak).sum()))


def _posterior_stats(
    components: Sequence[MixtureComponent], x: np.ndarray, alpha_bar: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log joint weights plus per-component posterior means of the clean field."""
    root = math.sqrt(alpha_bar)
    dim = x.size
    log_joint = np.empty(len(components))
    means = np.empty((len(components),) + x.shape)
    for i, comp in enumerate(components):
        s2 = alpha_bar * comp.variance + (1.0 - alpha_bar)
        centered = x - root * comp.mean.data
        sq_dist = float((centered * centered).sum())
        log_joint[i] = (
            math.log(comp.weight) - 0.5 * dim * math.log(2.0 * math.pi * s2) - sq_dist / (2.0 * s2)
        )
        means[i] = comp.mean.data + (root * comp.variance / s2) * centered
    return log_joint, means, np.array([c.weight for c in components])


def _check_inputs(gmm: GaussianMixture, x_t: LatentTensor, alpha_bar: float) -> None:
    if x_t.shape != gmm.shape:
        raise ValidationError("x_t dims do not match the mixture")
    if not 0.0 < alpha_bar < 1.0:
        raise ValidationError(f"alpha_bar must be in (0, 1), got {alpha_bar}")


def optimal_noise(
    gmm: GaussianMixture,
    x_t: LatentTensor,
    schedule: NoiseSchedule,
    t: int,
    condition: Optional[str] = None,
) -> LatentTensor:
    """The noise prediction a perfectly trained denoiser would output.

    Computes the mixture posterior mean of the clean field given the noisy
    one (responsibilities in log space) and converts it to a noise estimate.
    """
    alpha_bar = schedule.at(t)
    _check_inputs(gmm, x_t, alpha_bar)
    components = gmm.subset(condition)
    log_joint, means, _ = _posterior_stats(components, x_t.data, alpha_bar)
    weights = np.exp(log_joint - _logsumexp(log_joint))
    weights[weights < RESPONSIBILITY_FLOOR] = 0.0
    posterior_mean = np.tensordot(weights, means, axes=1)
    root = math.sqrt(alpha_bar)
    eps = (x_t.data - root * posterior_mean) / math.sqrt(1.0 - alpha_bar)
    return LatentTensor(eps)


def log_density(
    gmm: GaussianMixture,
    x_t: LatentTensor,
    schedule: NoiseSchedule,
    t: int,
    condition: Optional[str] = None,
) -> float:
    """Log density of the noised mixture at x_t (priors renormalized if conditioned)."""
    alpha_bar = schedule.at(t)
    _check_inputs(gmm, x_t, alpha_bar)
    components = gmm.subset(condition)
    log_joint, _, weights = _posterior_stats(components, x_t.data, alpha_bar)
    return _logsumexp(log_joint) - math.log(weights.sum())


def ddim_sample(
    gmm: GaussianMixture,
    schedule: NoiseSchedule,
    config: GuidanceConfig,
    condition: Optional[str],
    seed: int,
    substeps: int,
    metadata: Optional[dict[str, Any]] = None,
) -> tuple[LatentTensor, Trajectory]:
    """Deterministic reverse run from pure noise; returns (sample, trajectory).

    Uses the eta = 0 update: reconstruct the clean estimate from the guided
    prediction, then re-noise to the previous level. The recorded trajectory
    stores float32-rounded copies of every step, so it survives a container
    round trip bit-exactly. Same seed and config give bitwise-identical output.
    """
    if not 1 <= substeps <= schedule.steps:
        raise ValidationError(f"substeps must be in [1, {schedule.steps}], got {substeps}")
    if condition is not None:
        gmm.subset(condition)

    resolved = GuidanceConfig(
        config.guidance_scale, config.schedule.with_steps(substeps), config.cutoff, config.target
    )
    timesteps = np.round(np.linspace(schedule.steps, 1, substeps)).astype(int)

    h, w, c = gmm.shape
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((c, h, w))

    records = []
    for s, tau in enumerate(timesteps):
        tau = int(tau)
        alpha_bar = schedule.at(tau)
        current = LatentTensor(x)
        eps_cond = optimal_noise(gmm, current, schedule, tau, condition)
        eps_uncond = optimal_noise(gmm, current, schedule, tau, None)
        records.append(
            TrajectoryRecord(
                s, float(tau), quantize_f32(current), quantize_f32(eps_cond), quantize_f32(eps_uncond)
            )
        )
        live = TrajectoryRecord(s, float(tau), current, eps_cond, eps_uncond)
        eps_hat = guided_step(live, resolved, s).eps_hat.data

        alpha_prev = schedule.at(int(timesteps[s + 1])) if s + 1 < substeps else 1.0
        x0_hat = (x - math.sqrt(1.0 - alpha_bar) * eps_hat) / math.sqrt(alpha_bar)
        x = math.sqrt(alpha_prev) * x0_hat + math.sqrt(1.0 - alpha_prev) * eps_hat

    run_metadata = {
        "model": "toy-gmm",
        "condition": condition,
        "seed": seed,
        "substeps": substeps,
        "schedule_steps": schedule.steps,
        "guidance_scale": config.guidance_scale,
        "target": config.target,
        "low": config.schedule.low,
        "high": config.schedule.high,
        "scale_schedule": config.schedule.kind,
        "cutoff_strategy": config.cutoff.strategy,
        "cutoff_ratio": config.cutoff.ratio,
    }
    run_metadata.update(metadata or {})
    return LatentTensor(x), build_trajectory(records, run_metadata)


# ---------------------------------------------------------------------------
# Shipped mixture fixtures


def _cosine_field(
    height: int, width: int, terms: Sequence[tuple[int, int, float]], constant: float = 0.0
) -> np.ndarray:
    """constant + sum of amplitude * cos(2*pi*(kx*x/W + ky*y/H)) planes."""
    y = np.arange(height)[:, None]
    x = np.arange(width)[None, :]
    field = np.full((height, width), float(constant))
    for kx, ky, amplitude in terms:
        field += amplitude * np.cos(2.0 * np.pi * (kx * x / width + ky * y / height))
    return field


def _mono(field: np.ndarray) -> LatentTensor:
    return LatentTensor(field[None, :, :])


def point_mass_mixture(height: int = 16, width: int = 16) -> GaussianMixture:
    """Single zero-variance component: the sampler must land exactly on its mean."""
    mean = _mono(_cosine_field(height, width, [(1, 0, 0.5)], constant=0.25))
    return GaussianMixture((MixtureComponent(mean, 0.0, 1.0, "point"),))


def two_band_mixture(height: int = 16, width: int = 16) -> GaussianMixture:
    """Smooth component A and textured component B = A + checkerboard tone.

    The two lowest nonzero cosine modes sit at bin radius 1; the
    checkerboard sits at the corner of the frequency grid, so a small
    cutoff separates the A/B distinction into the high band by construction.
    """
    base = [(1, 0, 1.0), (0, 1, 1.0)]
    checker = (width // 2, height // 2, 0.8)
    mean_a = _mono(_cosine_field(height, width, base))
    mean_b = _mono(_cosine_field(height, width, base + [checker]))
    var = 0.0625
    return GaussianMixture(
        (
            MixtureComponent(mean_a, var, 0.5, "smooth"),
            MixtureComponent(mean_b, var, 0.5, "textured"),
        )
    )


def spectral_trend_mixture(height: int = 16, width: int = 16) -> GaussianMixture:
    """Three overlapping components whose guidance difference drifts spectrally.

    At high noise the conditional/unconditional gap is the prior-mean gap,
    which is built to sit in the DC and lowest cosine modes. Near the data
    end the posterior concentrates and the gap collapses onto the direction
    toward the nearest background component, which differs from the target
    almost purely by the checkerboard tone. Amplitudes are kept small
    relative to the shared component variance so the posterior never fully
    saturates and the gap stays visible at float32 precision.
    """
    tones = 0.08
    checker_amp = 0.08
    dc = 0.03
    var = 0.1024
    low = [(1, 0, tones), (0, 1, tones)]
    target = _mono(_cosine_field(height, width, low, constant=dc))
    near = _mono(
        _cosine_field(height, width, low + [(width // 2, height // 2, checker_amp)])
    )
    far = _mono(_cosine_field(height, width, [(kx, ky, -a) for kx, ky, a in low]))
    third = 1.0 / 3.0
    return GaussianMixture(
        (
            MixtureComponent(target, var, third, "target"),
            MixtureComponent(near, var, third, "background"),
            MixtureComponent(far, var, 1.0 - 2 * third, "background"),
        )
    )


MIXTURE_BUILDERS = {
    "point": point_mass_mixture,
    "two-band": two_band_mixture,
    "spectral-trend": spectral_trend_mixture,
}


def mixture_from_spec(spec: dict[str, Any]) -> GaussianMixture:
    """Build a mixture from a config mapping.

    Expected keys: height, width, components (list of {label, weight,
    variance, mean: {constant?, cosines?: [{kx, ky, amplitude}]}}).
    """
    try:
        height = int(spec["height"])
        width = int(spec["width"])
        entries = spec["components"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"mixture spec missing field: {exc}") from exc
    components = []
    for entry in entries:
        mean_spec = entry.get("mean", {})
        terms = [
            (int(c["kx"]), int(c["ky"]), float(c["amplitude"]))
            for c in mean_spec.get("cosines", [])
        ]
        field = _cosine_field(height, width, terms, constant=float(mean_spec.get("constant", 0.0)))
        components.append(
            MixtureComponent(
                _mono(field),
                float(entry.get("variance", 0.0)),
                float(entry["weight"]),
                str(entry["label"]),
            )
        )
    return GaussianMixture(tuple(components))


def resolve_mixture(spec: Any) -> GaussianMixture:
    """Accept a fixture name or an inline mixture mapping."""
    if isinstance(spec, str):
        try:
            return MIXTURE_BUILDERS[spec]()
        except KeyError:
            raise ValidationError(
                f"unknown mixture fixture {spec!r}; known: {sorted(MIXTURE_BUILDERS)}"
            ) from None
    if isinstance(spec, dict):
        return mixture_from_spec(spec)
    raise ValidationError("mixture must be a fixture name or a mapping")
