"""Centered per-channel 2D Fourier transform, radial binary masks, band split.

Frequency coordinates are integer offsets from the centered DC bin, rows
spanning [-floor(H/2), ceil(H/2)-1] and columns [-floor(W/2), ceil(W/2)-1].
The forward transform is unnormalized; the inverse carries the 1/(H*W)
factor. General (non power-of-two) dims are supported.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tensors import LatentTensor, ValidationError


class ImaginaryResidueError(FloatingPointError):
    """Inverse transform produced a non-negligible imaginary part.

    This signals a broken mask/spectrum symmetry: inverting a spectrum that
    came from real data through symmetric binary masks must give a real field.
    """


@dataclass(frozen=True)
class SpectralField:
    """Complex centered spectrum of a LatentTensor; DC at (H//2, W//2)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ValidationError(f"spectrum data must be (C, H, W), got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ValidationError(f"spectrum dims must be positive, got shape {arr.shape}")
        frozen = np.array(arr, dtype=np.complex128, order="C", copy=True)
        frozen.flags.writeable = False
        object.__setattr__(self, "data", frozen)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        c, h, w = self.data.shape
        return (h, w, c)


@dataclass(frozen=True)
class FrequencyMask:
    """Complementary binary low/high masks under a radial cutoff."""

    cutoff: float
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        low = np.asarray(self.low, dtype=bool)
        high = np.asarray(self.high, dtype=bool)
        if low.ndim != 2 or low.shape != high.shape:
            raise ValidationError("mask planes must be matching 2D arrays")
        if not np.all(low ^ high):
            raise ValidationError("low and high masks must be exact complements")
        for name, plane in (("low", low), ("high", high)):
            frozen = np.array(plane, copy=True)
            frozen.flags.writeable = False
            object.__setattr__(self, name, frozen)

    @property
    def height(self) -> int:
        return self.low.shape[0]

    @property
    def width(self) -> int:
        return self.low.shape[1]

    @property
    def low_count(self) -> int:
        return int(self.low.sum())

    @property
    def high_count(self) -> int:
        return int(self.high.sum())


@lru_cache(maxsize=64)
def squared_radius_grid(height: int, width: int) -> np.ndarray:
    """Integer k_y^2 + k_x^2 at every bin of the centered grid (read-only)."""
    ky = np.arange(height, dtype=np.int64) - height // 2
    kx = np.arange(width, dtype=np.int64) - width // 2
    grid = ky[:, None] ** 2 + kx[None, :] ** 2
    grid.flags.writeable = False
    return grid


def max_radius(height: int, width: int) -> float:
    """Largest Euclidean bin radius present on the centered grid."""
    return float(np.sqrt(squared_radius_grid(height, width).max()))


def fft2_centered(u: LatentTensor) -> SpectralField:
    """Per-channel 2D DFT with the spectrum shifted so DC sits at the center."""
    spectrum = np.fft.fftshift(np.fft.fft2(u.data, axes=(-2, -1)), axes=(-2, -1))
    return SpectralField(spectrum)


def ifft2_centered(spectrum: SpectralField) -> LatentTensor:
    """Inverse of :func:`fft2_centered`; returns the real part.

    The imaginary residue must stay below 1e-6 times the real magnitude
    (with a 1e-12 floor); a larger residue means the spectrum was not
    conjugate-symmetric and the real part would silently lose information.
    """
    out = np.fft.ifft2(np.fft.ifftshift(spectrum.data, axes=(-2, -1)), axes=(-2, -1))
    real = out.real
    residue = float(np.abs(out.imag).max())
    threshold = max(1e-6 * float(np.abs(real).max()), 1e-12)
    if residue >= threshold:
        raise ImaginaryResidueError(
            f"non-negligible imaginary residue {residue:.3e} (threshold {threshold:.3e})"
        )
    return LatentTensor(real)


def build_radial_mask(height: int, width: int, cutoff: float) -> FrequencyMask:
    """Binary masks selecting bins with radius <= cutoff (low) and the rest.

    The comparison squares both sides so bins at exact integer lattice
    distances never flip due to a lossy square root.
    """
    if height < 1 or width < 1:
        raise ValidationError("mask dims must be >= 1")
    if not np.isfinite(cutoff) or cutoff < 0:
        raise ValidationError(f"cutoff radius must be finite and >= 0, got {cutoff}")
    low = squared_radius_grid(height, width) <= float(cutoff) * float(cutoff)
    return FrequencyMask(float(cutoff), low, ~low)


def decompose(u: LatentTensor, mask: FrequencyMask) -> tuple[LatentTensor, LatentTensor]:
    """Split a tensor into its low and high band components (they sum to u)."""
    h, w, _ = u.shape
    if (mask.height, mask.width) != (h, w):
        raise ValidationError(
            f"mask dims {mask.height}x{mask.width} do not match tensor {h}x{w}"
        )
    spectrum = fft2_centered(u)
    low = ifft2_centered(SpectralField(spectrum.data * mask.low))
    high = ifft2_centered(SpectralField(spectrum.data * mask.high))
    return low, high
