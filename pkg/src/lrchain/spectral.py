"""Fourier machinery on the periodic chain and the macroscopic line.

Lattice transforms use the centered layout: sites and frequencies both run
over j = -N/2 .. N/2-1, frequencies as k_j = j/N in [-1/2, 1/2).  The
forward transform carries no 1/N so that (1/N) sum_j approximates the
integral over the unit torus; the inverse restores it.  On top of the
transforms sit the sign multiplier, the fractional first-order multipliers
used by the wave system, their semigroups, and the conversion between the
complex wave amplitude and the (momentum, stretch-current) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lrchain.potential import const_c1

__all__ = [
    "LatticeGrid",
    "WaveSpectrum",
    "MacroField",
    "forward_transform",
    "inverse_transform",
    "lattice_forward",
    "lattice_inverse",
    "hilbert_multiplier",
    "apply_hilbert",
    "limit_exponent",
    "d_theta_multiplier",
    "d3l_multiplier",
    "semigroup_multiplier",
    "wave_to_pl",
    "pl_to_wave",
    "symmetric_grid",
]


@dataclass(frozen=True)
class LatticeGrid:
    """Periodic chain of an even number of sites with centered frequencies."""

    n_sites: int

    def __post_init__(self) -> None:
        if self.n_sites <= 0 or self.n_sites % 2 != 0:
            raise ValueError("n_sites must be a positive even integer")

    @property
    def sites(self) -> np.ndarray:
        half = self.n_sites // 2
        return np.arange(-half, half)

    @property
    def frequencies(self) -> np.ndarray:
        return self.sites / float(self.n_sites)

    @property
    def nyquist_index(self) -> int:
        # Centered layout stores k = -1/2 first.
        return 0

    @property
    def zero_index(self) -> int:
        return self.n_sites // 2


@dataclass
class WaveSpectrum:
    """Complex amplitudes on the frequency grid of a chain."""

    grid: LatticeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n_sites,):
            raise ValueError("values must match the grid size")

    def copy(self) -> "WaveSpectrum":
        return WaveSpectrum(self.grid, self.values.copy())


@dataclass
class MacroField:
    """Samples of a macroscopic transform on a symmetric frequency grid."""

    xi_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.xi_grid = np.asarray(self.xi_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.xi_grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal shape")

    def hermitian_defect(self) -> float:
        """Largest |value(-xi) - value(xi)*| over exactly mirrored nodes."""
        order = np.argsort(self.xi_grid)
        xi = self.xi_grid[order]
        vals = self.values[order]
        if not np.allclose(xi, -xi[::-1], atol=1e-12):
            return math.inf
        return float(np.max(np.abs(vals - np.conj(vals[::-1]))))


def symmetric_grid(cutoff: float, spacing: float) -> np.ndarray:
    """Frequency nodes j*spacing for |j*spacing| <= cutoff, symmetric about 0."""
    m = int(round(cutoff / spacing))
    return np.arange(-m, m + 1, dtype=np.float64) * spacing


def lattice_forward(site_values: np.ndarray) -> np.ndarray:
    """Centered-layout transform sum_x exp(-2 pi i k x) h_x, no 1/N."""
    a = np.asarray(site_values)
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(a, axes=-1), axis=-1), axes=-1)


def lattice_inverse(freq_values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`lattice_forward`, carrying the 1/N weight."""
    a = np.asarray(freq_values)
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(a, axes=-1), axis=-1), axes=-1)


def forward_transform(site_values, grid: LatticeGrid | None = None) -> WaveSpectrum:
    """Transform site data into a WaveSpectrum on its grid."""
    a = np.asarray(site_values, dtype=np.complex128)
    if grid is None:
        grid = LatticeGrid(a.shape[-1])
    elif a.shape != (grid.n_sites,):
        raise ValueError("site data does not match the grid")
    return WaveSpectrum(grid, lattice_forward(a))


def inverse_transform(spectrum: WaveSpectrum) -> np.ndarray:
    """Site data of a spectrum; complex in general."""
    return lattice_inverse(spectrum.values)


def _sgn(k):
    # sign with sgn(0) = 0; the grid's Nyquist node -1/2 gets -1.
    return np.sign(k)


def hilbert_multiplier(k):
    """Frequency symbol -i sgn(k) of the discrete Hilbert transform."""
    k = np.asarray(k, dtype=np.float64)
    out = -1j * _sgn(k)
    return complex(out) if np.ndim(out) == 0 else out


def apply_hilbert(spectrum: WaveSpectrum) -> WaveSpectrum:
    """Multiply by -i sgn(k), zeroing the Nyquist amplitude.

    Keeping a phantom k = -1/2 mode would break realness of the output for
    real input fields, since that frequency has no conjugate partner.
    """
    vals = spectrum.values * hilbert_multiplier(spectrum.grid.frequencies)
    vals[spectrum.grid.nyquist_index] = 0.0
    return WaveSpectrum(spectrum.grid, vals)


def limit_exponent(theta: float) -> float:
    """Frequency exponent min((theta - 1)/2, 1) of the limiting wave speed.

    The same branch point at theta = 3 enters the multiplier below, the
    limiting mode generators, and the oscillatory recentering semigroups,
    so it is defined exactly once.
    """
    if not theta > 1.0:
        raise ValueError("theta must exceed 1")
    return min(0.5 * (theta - 1.0), 1.0)


def d_theta_multiplier(xi, theta: float):
    """Symbol of the fractional first-order operator driving the wave pair.

    Equals i sgn(xi) |2 pi xi|^((theta-1)/2) in the superdiffusive range
    1 < theta <= 3 and i 2 pi xi (a plain derivative) beyond.
    """
    xi = np.asarray(xi, dtype=np.float64)
    out = 1j * _sgn(xi) * np.abs(2.0 * np.pi * xi) ** limit_exponent(theta)
    return complex(out) if np.ndim(out) == 0 else out


def d3l_multiplier(xi):
    """Symbol i sgn(xi) |2 pi xi| log(1/|2 pi xi|) of the log-corrected operator."""
    xi = np.asarray(xi, dtype=np.float64)
    w = np.abs(2.0 * np.pi * xi)
    logw = np.zeros_like(w)
    np.log(np.where(w > 0.0, 1.0 / np.where(w > 0.0, w, 1.0), 1.0), out=logw,
           where=w > 0.0)
    out = 1j * _sgn(xi) * w * logw
    return complex(out) if np.ndim(out) == 0 else out


def semigroup_multiplier(xi, t: float, sign: int, theta: float):
    """Unit-modulus symbol exp(sign * sqrt(C1) * D_theta symbol * t).

    ``sign`` selects the right- or left-moving mode family (+1 or -1).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    speed = math.sqrt(const_c1(theta))
    out = np.exp(sign * speed * t * d_theta_multiplier(xi, theta))
    return out


def _reverse_centered(values: np.ndarray) -> np.ndarray:
    # Index of -k on the centered grid; the Nyquist node maps to itself.
    out = np.empty_like(values)
    out[0] = values[0]
    out[1:] = values[1:][::-1]
    return out


def wave_to_pl(spectrum: WaveSpectrum):
    """Split a wave amplitude into momentum and stretch-current spectra.

    p_hat(k) = (psi(k) - psi(-k)*) / (2i) and
    l_hat(k) = (i sgn(k) / 2)(psi(k) + psi(-k)*).  The Nyquist amplitude of
    l_hat is zeroed along with the sign action, so both outputs invert to
    real site fields whenever the input came from one.
    """
    psi = spectrum.values
    mirror = np.conj(_reverse_centered(psi))
    p_vals = (psi - mirror) / 2j
    k = spectrum.grid.frequencies
    l_vals = 0.5j * _sgn(k) * (psi + mirror)
    l_vals[spectrum.grid.nyquist_index] = 0.0
    return (
        WaveSpectrum(spectrum.grid, p_vals),
        WaveSpectrum(spectrum.grid, l_vals),
    )


def pl_to_wave(
    p_spectrum: WaveSpectrum,
    l_spectrum: WaveSpectrum,
    l0_tolerance: float = 1e-10,
) -> WaveSpectrum:
    """Assemble the wave amplitude i p_hat(k) - i sgn(k) l_hat(k).

    The k = 0 entry of the stretch-current spectrum has no wave encoding
    (sgn(0) = 0) and must vanish within ``l0_tolerance`` relative to the
    spectrum's scale.
    """
    if p_spectrum.grid.n_sites != l_spectrum.grid.n_sites:
        raise ValueError("spectra live on different grids")
    grid = p_spectrum.grid
    scale = max(1.0, float(np.max(np.abs(l_spectrum.values))))
    if abs(l_spectrum.values[grid.zero_index]) > l0_tolerance * scale:
        raise ValueError("the k=0 stretch-current amplitude must vanish")
    k = grid.frequencies
    psi = 1j * p_spectrum.values - 1j * _sgn(k) * l_spectrum.values
    return WaveSpectrum(grid, psi)
