"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one `[ACCEPTANCE] <criterion>: PASS` line (visible with
`pytest -s` or `-v` plus captured output) and enforces its runtime budget.
Run via `pytest tests/test_acceptance.py -v`.
"""

import hashlib
import math
import struct
import time
from pathlib import Path

import numpy as np
import pytest

from freqscale import (
    ContainerError,
    CutoffPolicy,
    GaussianMixture,
    GuidanceConfig,
    LatentTensor,
    MixtureComponent,
    ScaleSchedule,
    SpectralField,
    TrajectoryRecord,
    build_radial_mask,
    build_trajectory,
    ddim_sample,
    decompose,
    energy_curve,
    energy_cutoff_radius,
    fft2_centered,
    guided_step,
    linear_beta_schedule,
    log_density,
    optimal_noise,
    point_mass_mixture,
    quantize_f32,
    radial_profile,
    read_container,
    spectral_trend_mixture,
    two_band_mixture,
    write_container,
)

DATA_DIR = Path(__file__).parent / "data"


def report(name: str, started: float, budget: float | None = None) -> None:
    elapsed = time.monotonic() - started
    if budget is not None:
        assert elapsed < budget, f"{name} took {elapsed:.1f}s, budget {budget}s"
    print(f"[ACCEPTANCE] {name}: PASS ({elapsed:.2f}s)")


def test_faithfulness_reduces_to_plain_guidance():
    """Unit band scales reproduce plain guidance within 1e-8, both cutoffs."""
    started = time.monotonic()
    rng = np.random.default_rng(101)
    strategies = (CutoffPolicy("spatial_ratio", 0.3), CutoffPolicy("energy", 0.7))
    for trial in range(100):
        cond = LatentTensor(rng.standard_normal((4, 16, 16)))
        uncond = LatentTensor(rng.standard_normal((4, 16, 16)))
        x = LatentTensor(rng.standard_normal((4, 16, 16)))
        omega = float(rng.uniform(0, 12))
        plain = uncond.data + omega * (cond.data - uncond.data)
        for cutoff in strategies:
            config = GuidanceConfig(omega, ScaleSchedule("constant", 1.0, 1.0), cutoff, "delta")
            out = guided_step(TrajectoryRecord(0, 1.0, x, cond, uncond), config, 0)
            assert np.abs(out.eps_hat.data - plain).max() < 1e-8
    report("faithfulness: l=h=1 equals plain guidance (100 triples, both cutoffs)", started, 10.0)


def test_spectral_core_property_suite():
    """Reconstruction, band orthogonality, linearity, idempotence, masks."""
    started = time.monotonic()
    rng = np.random.default_rng(202)
    instances = 520
    for trial in range(instances):
        h = int(rng.integers(2, 33))
        w = int(rng.integers(2, 33))
        c = int(rng.integers(1, 5))
        cutoff = float(rng.uniform(0, math.hypot(h, w) / 2))
        mask = build_radial_mask(h, w, cutoff)

        # complementarity is exact, symmetry holds wherever the partner exists
        assert np.all(mask.low ^ mask.high)
        for i in range(h):
            pi = 2 * (h // 2) - i
            if not 0 <= pi < h:
                continue
            for j in range(w):
                pj = 2 * (w // 2) - j
                if 0 <= pj < w:
                    assert mask.low[i, j] == mask.low[pi, pj]

        u = LatentTensor(rng.standard_normal((c, h, w)))
        low, high = decompose(u, mask)
        assert np.abs(low.data + high.data - u.data).max() <= 1e-9

        total = (u.data**2).sum()
        split = (low.data**2).sum() + (high.data**2).sum()
        assert abs(total - split) <= 1e-7 * max(total, 1e-12)

        low_again, _ = decompose(low, mask)
        assert np.abs(low_again.data - low.data).max() <= 1e-9

        v = LatentTensor(rng.standard_normal((c, h, w)))
        a, b = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
        low_ab, high_ab = decompose(LatentTensor(a * u.data + b * v.data), mask)
        low_v, high_v = decompose(v, mask)
        scale = max(1.0, np.abs(low_ab.data).max(), np.abs(high_ab.data).max())
        assert np.abs(low_ab.data - (a * low.data + b * low_v.data)).max() <= 1e-9 * scale
        assert np.abs(high_ab.data - (a * high.data + b * high_v.data)).max() <= 1e-9 * scale
    report(f"spectral core: property suite over {instances} randomized instances", started, 30.0)


def test_energy_cutoff_oracle_equivalence():
    """Exact agreement with sort-and-prefix-sum brute force, 200 trials."""
    started = time.monotonic()
    rng = np.random.default_rng(303)

    def oracle(spectrum: SpectralField, ratio: float) -> int:
        mags = np.abs(spectrum.data).sum(axis=0)
        h, w = mags.shape
        ky = np.arange(h)[:, None] - h // 2
        kx = np.arange(w)[None, :] - w // 2
        r2 = (ky * ky + kx * kx).ravel()
        order = np.argsort(r2, kind="stable")
        sorted_r = np.sqrt(r2[order].astype(float))
        prefix = np.cumsum(mags.ravel()[order])
        total = prefix[-1]
        if total == 0:
            return 0
        max_r = int(np.ceil(sorted_r[-1]))
        for radius in range(max_r + 1):
            inside = np.searchsorted(sorted_r, radius, side="right")
            if inside and prefix[inside - 1] >= ratio * total:
                return radius
            if radius == 0 and ratio * total <= 0:
                return 0
        return max_r

    for trial in range(200):
        h = int(rng.integers(1, 17))
        w = int(rng.integers(1, 17))
        c = int(rng.integers(1, 4))
        data = rng.standard_normal((c, h, w)) + 1j * rng.standard_normal((c, h, w))
        spectrum = SpectralField(data)
        ratio = float(rng.uniform(0, 1))
        assert energy_cutoff_radius(spectrum, ratio) == oracle(spectrum, ratio)

        # monotone in the ratio
        radii = [energy_cutoff_radius(spectrum, r) for r in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(a <= b for a, b in zip(radii, radii[1:]))

        # invariant under positive rescaling
        scaled = SpectralField(data * 2.0 ** float(rng.integers(-20, 20)))
        assert energy_cutoff_radius(scaled, ratio) == energy_cutoff_radius(spectrum, ratio)
    report("energy cutoff: exact oracle equivalence, monotonicity, scale invariance", started, 10.0)


def test_schedule_endpoints_exact():
    """Linear schedules hit their endpoints and sum identity exactly in f64."""
    started = time.monotonic()
    for peak in (1.1, 1.5, 2.0):
        for steps in (2, 50, 1000):
            decay = ScaleSchedule("linear_decay", 1.0, peak, steps)
            growth = ScaleSchedule("linear_growth", 1.0, peak, steps)
            assert decay.at(0)[1] == peak
            assert decay.at(steps - 1)[1] == 1.0
            assert growth.at(0)[1] == 1.0
            assert growth.at(steps - 1)[1] == peak
            for step in range(steps):
                assert decay.at(step)[1] + growth.at(step)[1] == 1.0 + peak
    report("schedules: endpoints and decay+growth identity exact to f64", started)


def test_analytic_score_matches_finite_differences():
    """-eps/sqrt(1-abar) equals the log-density gradient to 1e-5 relative."""
    started = time.monotonic()
    rng = np.random.default_rng(404)
    means = [LatentTensor(rng.standard_normal((1, 2, 2))) for _ in range(3)]
    gmm = GaussianMixture(
        (
            MixtureComponent(means[0], 0.09, 0.5, "a"),
            MixtureComponent(means[1], 0.16, 0.25, "b"),
            MixtureComponent(means[2], 0.04, 0.25, "a"),
        )
    )
    schedule = linear_beta_schedule(50, 0.02, 0.25)
    step_size = 1e-5
    for trial in range(50):
        t = int(rng.integers(2, 51))
        alpha_bar = schedule.at(t)
        x = LatentTensor(rng.standard_normal((1, 2, 2)))
        score = -optimal_noise(gmm, x, schedule, t).data / math.sqrt(1 - alpha_bar)

        fd = np.zeros(4)
        flat = x.data.ravel()
        for i in range(4):
            bump = np.zeros(4)
            bump[i] = step_size
            up = LatentTensor((flat + bump).reshape(1, 2, 2))
            down = LatentTensor((flat - bump).reshape(1, 2, 2))
            fd[i] = (log_density(gmm, up, schedule, t) - log_density(gmm, down, schedule, t)) / (
                2 * step_size
            )
        assert np.linalg.norm(score.ravel() - fd) <= 1e-5 * np.linalg.norm(fd)
    report("analytic score: finite-difference agreement, 50 points", started, 5.0)


def test_end_to_end_convergence_and_determinism():
    """Point-mass run lands on the mean; same seed is bitwise identical."""
    started = time.monotonic()
    gmm = point_mass_mixture()
    schedule = linear_beta_schedule(50, 0.02, 0.25)
    config = GuidanceConfig(
        1.0, ScaleSchedule("constant", 1.0, 1.0), CutoffPolicy("spatial_ratio", 0.3), "delta"
    )
    first, traj_a = ddim_sample(gmm, schedule, config, "point", seed=0, substeps=50)
    second, traj_b = ddim_sample(gmm, schedule, config, "point", seed=0, substeps=50)
    assert np.abs(first.data - gmm.components[0].mean.data).max() < 1e-3
    assert np.array_equal(first.data, second.data)
    for a, b in zip(traj_a.records, traj_b.records):
        assert np.array_equal(a.x_t.data, b.x_t.data)
        assert np.array_equal(a.eps_cond.data, b.eps_cond.data)
        assert np.array_equal(a.eps_uncond.data, b.eps_uncond.data)
    report("end to end: point-mass convergence within 1e-3, bitwise determinism", started)


def test_spectral_steering_direction():
    """Boosting the high band strictly raises high-band energy of the sample."""
    started = time.monotonic()
    gmm = two_band_mixture()
    schedule = linear_beta_schedule(50, 0.02, 0.25)
    mask = build_radial_mask(16, 16, 0.3 * 8)

    def high_fraction(sample: LatentTensor) -> float:
        low, high = decompose(sample, mask)
        return float((high.data**2).sum() / (sample.data**2).sum())

    means = {}
    for high_scale in (0.5, 1.0, 2.0):
        config = GuidanceConfig(
            3.0,
            ScaleSchedule("constant", 1.0, high_scale),
            CutoffPolicy("spatial_ratio", 0.3),
            "delta",
        )
        fractions = [
            high_fraction(ddim_sample(gmm, schedule, config, "textured", seed, 50)[0])
            for seed in range(64)
        ]
        means[high_scale] = float(np.mean(fractions))
    assert means[0.5] < means[1.0] < means[2.0], means
    report(
        "steering: mean high-band fraction over 64 seeds ordered h=0.5 < 1 < 2",
        started,
        60.0,
    )


def test_diagnostics_consistency():
    """Curve/cutoff crossing agreement, profile scale invariance, trend."""
    started = time.monotonic()
    rng = np.random.default_rng(505)
    for _ in range(20):
        spectrum = fft2_centered(LatentTensor(rng.standard_normal((2, 16, 16))))
        curve = energy_curve(spectrum)
        for ratio in np.linspace(0.05, 1.0, 20):
            assert curve.crossing(ratio) == energy_cutoff_radius(spectrum, ratio)
        profile = radial_profile(spectrum)
        scaled = radial_profile(SpectralField(spectrum.data * 1234.5))
        assert np.allclose(profile.relative, scaled.relative, equal_nan=True)

    gmm = spectral_trend_mixture()
    schedule = linear_beta_schedule(50, 0.02, 0.25)
    config = GuidanceConfig(
        3.0, ScaleSchedule("constant", 1.0, 1.0), CutoffPolicy("spatial_ratio", 0.3), "delta"
    )
    _, trajectory = ddim_sample(gmm, schedule, config, "target", seed=0, substeps=50)
    low_fractions = [
        energy_curve(fft2_centered(delta)).fractions[2] for delta in trajectory.select("delta")
    ]
    quarter = len(low_fractions) // 4
    early = float(np.mean(low_fractions[:quarter]))
    late = float(np.mean(low_fractions[-quarter:]))
    assert early > late, (early, late)
    report("diagnostics: curve/cutoff consistency, scale invariance, early low-pass trend", started)


def test_container_format_criteria(tmp_path):
    """Golden parse, bit-exact round trip, every malformed class rejected."""
    started = time.monotonic()

    golden = DATA_DIR / "golden_tensor.fqs1"
    digest = hashlib.sha256(golden.read_bytes()).hexdigest()
    assert digest == "25c446b171f6dd28c30a41981c46b3d3d39f2d3ddde7e18a749196b9f2fadc2c"
    tensor = read_container(golden)
    assert tensor.shape == (2, 3, 2)
    assert tensor.data[0, 0, 1] == 0.5 and tensor.data[1, 1, 2] == -5.5

    rng = np.random.default_rng(606)
    value = quantize_f32(LatentTensor(rng.standard_normal((3, 9, 5))))
    path = tmp_path / "rt.fqs1"
    write_container(value, path)
    assert np.array_equal(read_container(path).data, value.data)

    records = [
        TrajectoryRecord(
            s,
            float(3 - s),
            quantize_f32(LatentTensor(rng.standard_normal((1, 4, 4)))),
            quantize_f32(LatentTensor(rng.standard_normal((1, 4, 4)))),
            quantize_f32(LatentTensor(rng.standard_normal((1, 4, 4)))),
        )
        for s in range(3)
    ]
    trajectory = build_trajectory(records, {"model": "acceptance"})
    traj_path = tmp_path / "traj.fqs1"
    write_container(trajectory, traj_path)
    parsed = read_container(traj_path)
    for original, back in zip(trajectory.records, parsed.records):
        assert np.array_equal(original.x_t.data, back.x_t.data)
        assert np.array_equal(original.eps_cond.data, back.eps_cond.data)
        assert np.array_equal(original.eps_uncond.data, back.eps_uncond.data)

    minimal = b"FQS1" + bytes([0]) + struct.pack("<III", 1, 1, 1) + struct.pack("<f", 0.0)
    malformed = {
        "bad magic": b"XXXX" + minimal[4:],
        "version mismatch": b"FQS9" + minimal[4:],
        "truncated payload": minimal[:-1],
        "dimension overflow": b"FQS1" + bytes([0]) + struct.pack("<III", 1 << 16, 1 << 16, 64),
        "NaN in payload": minimal[:-4] + struct.pack("<f", float("nan")),
    }
    for fragment, blob in malformed.items():
        bad = tmp_path / "bad.fqs1"
        bad.write_bytes(blob)
        with pytest.raises(ContainerError, match=fragment.split(":")[0]):
            read_container(bad)
    report("container: golden parse, bit-exact round trip, malformed classes rejected", started)
