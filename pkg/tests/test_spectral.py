"""Spectral core: centered transforms, radial masks, band decomposition."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqscale import (
    ImaginaryResidueError,
    LatentTensor,
    SpectralField,
    ValidationError,
    build_radial_mask,
    decompose,
    fft2_centered,
    ifft2_centered,
)

from conftest import random_tensor


def tone(height, width, kx=0, ky=0, amplitude=1.0, channels=1):
    y = np.arange(height)[:, None]
    x = np.arange(width)[None, :]
    plane = amplitude * np.cos(2 * np.pi * (kx * x / width + ky * y / height))
    return LatentTensor(np.broadcast_to(plane, (channels, height, width)).copy())


def brute_force_low_count(height, width, cutoff):
    count = 0
    for ky in range(-(height // 2), (height + 1) // 2):
        for kx in range(-(width // 2), (width + 1) // 2):
            if np.sqrt(ky * ky + kx * kx) <= cutoff:
                count += 1
    return count


# --- forward transform ------------------------------------------------------


def test_constant_tensor_is_dc_only():
    h, w, c = 6, 10, 2
    u = LatentTensor.full(h, w, 3.25, channels=c)
    spectrum = fft2_centered(u)
    dc = spectrum.data[:, h // 2, w // 2]
    assert np.allclose(dc, 3.25 * h * w)
    rest = spectrum.data.copy()
    rest[:, h // 2, w // 2] = 0
    assert np.abs(rest).max() < 1e-9 * h * w


def test_single_tone_lands_on_two_bins():
    h, w = 8, 16
    spectrum = fft2_centered(tone(h, w, kx=1))
    mags = np.abs(spectrum.data[0])
    expected = np.zeros((h, w))
    expected[h // 2, w // 2 + 1] = h * w / 2
    expected[h // 2, w // 2 - 1] = h * w / 2
    assert np.allclose(mags, expected, atol=1e-9)


def test_round_trip(rng):
    u = random_tensor(rng, 8, 8, 2)
    back = ifft2_centered(fft2_centered(u))
    assert np.abs(back.data - u.data).max() < 1e-10


def test_round_trip_non_power_of_two(rng):
    u = random_tensor(rng, 12, 7, 3)
    back = ifft2_centered(fft2_centered(u))
    assert np.abs(back.data - u.data).max() < 1e-10


def test_fft_output_is_hermitian(rng):
    u = random_tensor(rng, 9, 7)  # odd dims: every bin has a partner
    spectrum = fft2_centered(u).data[0]
    h, w = 9, 7
    worst = 0.0
    for i in range(h):
        for j in range(w):
            pi, pj = 2 * (h // 2) - i, 2 * (w // 2) - j
            if 0 <= pi < h and 0 <= pj < w:
                worst = max(worst, abs(spectrum[i, j] - np.conj(spectrum[pi, pj])))
    assert worst < 1e-9 * np.abs(spectrum).max()


# --- inverse transform ------------------------------------------------------


def test_dc_only_spectrum_inverts_to_ones():
    h, w = 6, 6
    data = np.zeros((1, h, w), dtype=complex)
    data[0, h // 2, w // 2] = h * w
    back = ifft2_centered(SpectralField(data))
    assert np.allclose(back.data, 1.0, atol=1e-12)


def test_explicit_hermitian_spectrum_inverts_to_real(rng):
    h, w = 7, 9
    spectrum = np.zeros((1, h, w), dtype=complex)
    for i in range(h):
        for j in range(w):
            pi, pj = 2 * (h // 2) - i, 2 * (w // 2) - j
            if (i, j) == (h // 2, w // 2):
                spectrum[0, i, j] = rng.normal()
            elif spectrum[0, pi, pj] == 0:
                spectrum[0, i, j] = rng.normal() + 1j * rng.normal()
            else:
                spectrum[0, i, j] = np.conj(spectrum[0, pi, pj])
    back = ifft2_centered(SpectralField(spectrum))
    assert np.isrealobj(back.data)


def test_asymmetric_spectrum_raises():
    data = np.zeros((1, 8, 8), dtype=complex)
    data[0, 4, 5] = 1.0  # single off-center bin, no conjugate partner
    with pytest.raises(ImaginaryResidueError, match="imaginary residue"):
        ifft2_centered(SpectralField(data))


# --- masks ------------------------------------------------------------------


def test_radius_zero_mask_selects_dc_only():
    mask = build_radial_mask(8, 8, 0.0)
    assert mask.low_count == 1
    assert mask.low[4, 4]


def test_radius_one_mask_selects_five_bins():
    mask = build_radial_mask(8, 8, 1.0)
    assert mask.low_count == 5


def test_mask_matches_brute_force_lattice_count():
    mask = build_radial_mask(64, 64, 16.0)
    assert mask.low_count == brute_force_low_count(64, 64, 16.0)


def test_mask_complementarity_and_symmetry(rng):
    for h, w in ((8, 8), (7, 9), (6, 11)):
        cutoff = float(rng.uniform(0, max(h, w)))
        mask = build_radial_mask(h, w, cutoff)
        assert np.array_equal(mask.low ^ mask.high, np.ones((h, w), dtype=bool))
        for i in range(h):
            for j in range(w):
                pi, pj = 2 * (h // 2) - i, 2 * (w // 2) - j
                if 0 <= pi < h and 0 <= pj < w:
                    assert mask.low[i, j] == mask.low[pi, pj]


def test_mask_monotone_in_cutoff(rng):
    for _ in range(20):
        r_small = float(rng.uniform(0, 6))
        r_big = r_small + float(rng.uniform(0, 6))
        small = build_radial_mask(16, 16, r_small)
        big = build_radial_mask(16, 16, r_big)
        assert np.all(big.low | ~small.low)  # small low-set contained in big


def test_mask_rejects_negative_radius():
    with pytest.raises(ValidationError):
        build_radial_mask(8, 8, -0.5)


# --- decomposition ----------------------------------------------------------


def test_all_pass_mask_keeps_everything(rng):
    u = random_tensor(rng, 8, 8, 2)
    mask = build_radial_mask(8, 8, 100.0)
    low, high = decompose(u, mask)
    assert np.abs(low.data - u.data).max() < 1e-9
    assert np.abs(high.data).max() < 1e-9


def test_constant_tensor_is_all_low_at_radius_zero():
    u = LatentTensor.full(8, 8, 2.5)
    low, high = decompose(u, build_radial_mask(8, 8, 0.0))
    assert np.abs(low.data - u.data).max() < 1e-9
    assert np.abs(high.data).max() < 1e-9


def test_two_tone_split():
    h = w = 16
    low_tone = tone(h, w, kx=1)
    high_tone = tone(h, w, ky=3, amplitude=0.5)
    u = LatentTensor(low_tone.data + high_tone.data)
    low, high = decompose(u, build_radial_mask(h, w, 2.0))
    assert np.abs(low.data - low_tone.data).max() < 1e-8
    assert np.abs(high.data - high_tone.data).max() < 1e-8


def test_decompose_rejects_dim_mismatch(rng):
    with pytest.raises(ValidationError, match="mask dims"):
        decompose(random_tensor(rng, 8, 8), build_radial_mask(8, 10, 2.0))


# --- properties -------------------------------------------------------------

dims = st.tuples(st.integers(2, 32), st.integers(2, 32), st.integers(1, 4))


@settings(max_examples=80, deadline=None)
@given(dims, st.floats(0, 24), st.integers(0, 2**32 - 1))
def test_reconstruction_and_parseval(shape, cutoff, seed):
    h, w, c = shape
    u = random_tensor(np.random.default_rng(seed), h, w, c)
    low, high = decompose(u, build_radial_mask(h, w, cutoff))
    assert np.abs(low.data + high.data - u.data).max() < 1e-9

    total = (u.data**2).sum()
    split = (low.data**2).sum() + (high.data**2).sum()
    assert abs(total - split) <= 1e-7 * max(total, 1e-12)


@settings(max_examples=50, deadline=None)
@given(
    dims,
    st.floats(0, 24),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.integers(0, 2**32 - 1),
)
def test_linearity(shape, cutoff, a, b, seed):
    h, w, c = shape
    gen = np.random.default_rng(seed)
    u = random_tensor(gen, h, w, c)
    v = random_tensor(gen, h, w, c)
    mask = build_radial_mask(h, w, cutoff)
    low_uv, high_uv = decompose(LatentTensor(a * u.data + b * v.data), mask)
    low_u, high_u = decompose(u, mask)
    low_v, high_v = decompose(v, mask)
    scale = max(np.abs(low_uv.data).max(), np.abs(high_uv.data).max(), 1.0)
    assert np.abs(low_uv.data - (a * low_u.data + b * low_v.data)).max() < 1e-9 * scale
    assert np.abs(high_uv.data - (a * high_u.data + b * high_v.data)).max() < 1e-9 * scale


@settings(max_examples=50, deadline=None)
@given(dims, st.floats(0, 24), st.integers(0, 2**32 - 1))
def test_low_pass_idempotent(shape, cutoff, seed):
    h, w, c = shape
    u = random_tensor(np.random.default_rng(seed), h, w, c)
    mask = build_radial_mask(h, w, cutoff)
    low, _ = decompose(u, mask)
    low_again, _ = decompose(low, mask)
    assert np.abs(low_again.data - low.data).max() < 1e-9
