"""Closed-form solutions of the limiting equations and their weak pairings.

The wave pair rotates mode by mode at speed sqrt(C1)|2 pi xi|^e, the
fluctuation pair evolves under the limiting recentered generator, and the
energy functional pairs the evolved fields against a test function: for
steep decay it is the plain quadratic density, and in the long-range window
1 < theta < 3 the stretch contribution is reweighted by a bounded
double-frequency kernel.  Everything here is spectral; real-space profiles
come out through a trapezoid inverse transform.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from lrchain.meanflow import evolve_modes, m_limit
from lrchain.potential import const_c1
from lrchain.spectral import MacroField, limit_exponent

__all__ = [
    "WaveSolution",
    "FlucSolution",
    "solve_wave",
    "solve_fluc",
    "energy_kernel",
    "energy_functional",
    "field_on_grid",
    "write_profile_csv",
    "write_pairing_json",
]

# Inputs must transform real fields; this bounds the allowed asymmetry.
_HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class WaveSolution:
    """Wave pair at one macroscopic time."""

    p_tilde: MacroField
    l_tilde: MacroField
    theta: float
    time: float


@dataclass(frozen=True)
class FlucSolution:
    """Recentered fluctuation pair at one macroscopic time."""

    f_plus: MacroField
    f_minus: MacroField
    theta: float
    gamma: float
    time: float


def _check_pair(first: MacroField, second: MacroField) -> None:
    if not np.array_equal(first.xi_grid, second.xi_grid):
        raise ValueError("fields must share one frequency grid")
    for field in (first, second):
        scale = max(1.0, float(np.max(np.abs(field.values))))
        if field.hermitian_defect() > _HERMITIAN_TOL * scale:
            raise ValueError("input transform is not Hermitian symmetric")


def solve_wave(p0: MacroField, l0: MacroField, t: float,
               theta: float) -> WaveSolution:
    """Rotate each mode of the wave pair through its transport phase.

    The generator is anti-diagonal with entries i sgn(xi) sqrt(C1)
    |2 pi xi|^e, so its exponential is the rotation [[cos phi,
    i sgn sin phi], [i sgn sin phi, cos phi]] with phi the phase
    sqrt(C1) |2 pi xi|^e t.
    """
    _check_pair(p0, l0)
    xi = p0.xi_grid
    phase = math.sqrt(const_c1(theta)) * np.abs(
        2.0 * np.pi * xi) ** limit_exponent(theta) * t
    cos = np.cos(phase)
    isin = 1j * np.sign(xi) * np.sin(phase)
    p_t = cos * p0.values + isin * l0.values
    l_t = isin * p0.values + cos * l0.values
    return WaveSolution(MacroField(xi, p_t), MacroField(xi, l_t),
                        float(theta), float(t))


def solve_fluc(f0_plus: MacroField, f0_minus: MacroField, t: float,
               theta: float, gamma: float) -> FlucSolution:
    """Evolve the recentered fluctuation pair under the limiting generator.

    The initial pair is built from the wave data as p0 +- l0; below
    theta = 4 the generator is diagonal and purely imaginary, so each mode
    keeps its modulus, while from theta = 4 on the noise couples the pair
    and damps the combined mode.
    """
    if not theta > 2.0:
        raise ValueError("fluctuation solutions need theta > 2")
    _check_pair(f0_plus, f0_minus)
    plus, minus = evolve_modes((f0_plus, f0_minus),
                               lambda xi: m_limit(xi, theta, gamma), t)
    return FlucSolution(plus, minus, float(theta), float(gamma), float(t))


def energy_kernel(k, xi, theta: float):
    """Bounded weight of the long-range stretch energy in the weak form.

    Equals sgn(k) sgn(-k-xi) (|xi|^(theta-1) - |k|^(theta-1)
    - |k+xi|^(theta-1)) / (4 |k|^((theta-1)/2) |k+xi|^((theta-1)/2)); the
    rays k = 0 and k + xi = 0 carry its (zero) limiting values, and on
    xi = 0 it equals 1/2 identically.
    """
    k = np.asarray(k, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    a = np.abs(k)
    b = np.abs(k + xi)
    power = theta - 1.0
    half = 0.5 * power
    num = np.abs(xi) ** power - a ** power - b ** power
    mask = (a > 0.0) & (b > 0.0)
    den = 4.0 * np.where(mask, a, 1.0) ** half * np.where(mask, b, 1.0) ** half
    out = np.where(mask, np.sign(k) * np.sign(-k - xi) * num / den, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _uniform_spacing(grid: np.ndarray) -> float:
    steps = np.diff(grid)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValueError("frequency grid must be uniform")
    return float(steps[0])


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def energy_functional(wave: WaveSolution, j_hat: Callable, theta: float) -> float:
    """Weak pairing of the limit energy density with a test function.

    ``j_hat`` maps frequency arrays to the transform of the test function.
    For theta >= 3 the value is the double-frequency quadrature of
    (p p + l l)/2 against the transform; for 1 < theta < 3 the stretch
    part is weighted by the bounded kernel above instead of 1/2.
    """
    xi = wave.p_tilde.xi_grid
    h = _uniform_spacing(xi)
    weights = _trapezoid_weights(xi.size, h)
    p = wave.p_tilde.values * weights
    l = wave.l_tilde.values * weights
    freq_sum = -(xi[:, None] + xi[None, :])
    j_mat = np.asarray(j_hat(freq_sum), dtype=np.complex128)
    total = 0.5 * np.sum(p[:, None] * p[None, :] * j_mat)
    if theta >= 3.0:
        total += 0.5 * np.sum(l[:, None] * l[None, :] * j_mat)
    else:
        # The printed kernel takes (k, xi); with both quadrature variables
        # on the grid the second frequency is xi = -k - k'.
        kernel = energy_kernel(xi[:, None], freq_sum, theta)
        total += np.sum(kernel * l[:, None] * l[None, :] * j_mat)
    return float(total.real)


def field_on_grid(field: MacroField, y_grid,
                  residue_tolerance: float = 1e-8) -> np.ndarray:
    """Real-space samples of a Hermitian transform by trapezoid quadrature.

    Raises when the imaginary residue of the quadrature exceeds
    ``residue_tolerance`` relative to the field scale, which flags inputs
    that do not transform a real field.
    """
    y_grid = np.asarray(y_grid, dtype=np.float64)
    xi = field.xi_grid
    weights = _trapezoid_weights(xi.size, _uniform_spacing(xi))
    phases = np.exp(2j * np.pi * np.outer(y_grid, xi))
    samples = phases @ (weights * field.values)
    scale = max(1.0, float(np.max(np.abs(samples))))
    residue = float(np.max(np.abs(samples.imag)))
    if residue > residue_tolerance * scale:
        raise ValueError(
            f"imaginary residue {residue:.3e} exceeds tolerance; "
            "input is not Hermitian symmetric")
    return samples.real


def write_profile_csv(path, wave: WaveSolution, y_grid) -> None:
    """Write (y, p_bar, l_bar, e_bar) profiles; the energy column is the
    quadratic density, which is the limit density for theta >= 3."""
    y_grid = np.asarray(y_grid, dtype=np.float64)
    p_bar = field_on_grid(wave.p_tilde, y_grid)
    l_bar = field_on_grid(wave.l_tilde, y_grid)
    e_bar = 0.5 * (p_bar ** 2 + l_bar ** 2)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["y", "p_bar", "l_bar", "e_bar"])
        for row in zip(y_grid, p_bar, l_bar, e_bar):
            writer.writerow([repr(float(v)) for v in row])


def write_pairing_json(path, payload) -> None:
    """Serialize pairing values (per test function) as sorted JSON."""
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
