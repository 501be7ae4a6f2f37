"""Per-mode 2x2 generators, their exponentials, and the time scalings.

Both the slow wave pair and the recentered fluctuation pair evolve mode by
mode under small complex matrices: a finite-scale generator built from the
lattice dispersion and the momentum-exchange rate, and a scale-free limit
generator.  This module constructs the four matrix families, the remainder
matrices separating them, closed-form 2x2 exponentials and spectral norms,
and the scaling schedules (macroscopic clock, recentering clocks, and the
decay envelopes the remainders are measured against).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from lrchain.potential import (
    PotentialSpec,
    _omega_closed,
    _reduce_frequency,
    const_c1,
    const_c2,
    noise_rate_R,
    omega,
)
from lrchain.spectral import MacroField, limit_exponent

__all__ = [
    "ScalingSchedule",
    "ModeMatrix",
    "schedule",
    "a_eps",
    "a_limit",
    "b_rem",
    "m_eps",
    "m_limit",
    "rem",
    "expm2",
    "opnorm2",
    "evolve_modes",
    "sup_norm_b",
    "sup_norm_rem",
    "rate_rows",
    "write_rate_csv",
]

# Switch to the even series of sinh(q t)/q once the eigenvalue gap is this
# small; the dropped term is O(|q t|^6 / 5040), far below double rounding.
_DEGENERATE_QT = 1e-4


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return eps


def _raising(name: str, theta: float) -> Callable[[float], float]:
    def _raise(eps: float) -> float:
        raise ValueError(f"{name}(eps) needs theta > 2, got theta={theta}")

    return _raise


@dataclass(frozen=True)
class ScalingSchedule:
    """Clock and envelope functions of the lattice scale for one theta.

    ``j`` is the macroscopic time scaling of the wave pair, ``m`` and ``n``
    the two recentering clocks of the fluctuation pair (they satisfy
    n/m = j identically), ``b`` the decay envelope of the wave generator
    remainder and ``r`` that of the fluctuation generator remainder.
    """

    theta: float
    j: Callable[[float], float]
    m: Callable[[float], float]
    n: Callable[[float], float]
    b: Callable[[float], float]
    r: Callable[[float], float]


def schedule(theta: float) -> ScalingSchedule:
    """Build the scaling schedule for one decay exponent.

    ``j`` and ``b`` are defined for theta > 1; the fluctuation entries
    ``m``, ``n`` and ``r`` additionally need theta > 2 and raise
    ``ValueError`` when called outside that range.
    """
    theta = float(theta)
    if not theta > 1.0:
        raise ValueError("theta must exceed 1")

    def _log(eps: float) -> float:
        return math.log(1.0 / eps)

    if theta < 3.0:
        def j(eps: float) -> float:
            return _check_eps(eps) ** (0.5 * (theta - 1.0))
    elif theta == 3.0:
        def j(eps: float) -> float:
            return _check_eps(eps) * math.sqrt(_log(eps))
    else:
        def j(eps: float) -> float:
            return _check_eps(eps)

    if theta <= 2.0:
        m = _raising("m", theta)
        n = _raising("n", theta)
        r = _raising("r", theta)
    else:
        if theta < 3.0:
            def m(eps: float) -> float:
                return _check_eps(eps) ** (3.0 - theta)

            def n(eps: float) -> float:
                return _check_eps(eps) ** (0.5 * (5.0 - theta))
        elif theta == 3.0:
            def m(eps: float) -> float:
                return 1.0 / _log(_check_eps(eps))

            def n(eps: float) -> float:
                return _check_eps(eps) / math.sqrt(_log(eps))
        elif theta <= 4.0:
            def m(eps: float) -> float:
                return _check_eps(eps) ** (theta - 3.0)

            def n(eps: float) -> float:
                return _check_eps(eps) ** (theta - 2.0)
        else:
            def m(eps: float) -> float:
                return _check_eps(eps)

            def n(eps: float) -> float:
                return _check_eps(eps) ** 2

        if theta <= 2.5:
            def r(eps: float) -> float:
                return _check_eps(eps) ** (theta - 2.0)
        elif theta < 3.0:
            def r(eps: float) -> float:
                return _check_eps(eps) ** (3.0 - theta)
        elif theta == 3.0:
            def r(eps: float) -> float:
                return 1.0 / _log(_check_eps(eps))
        elif theta <= 3.5:
            def r(eps: float) -> float:
                return _check_eps(eps) ** (theta - 3.0)
        elif theta < 4.0:
            def r(eps: float) -> float:
                return _check_eps(eps) ** (4.0 - theta)
        elif theta == 4.0:
            def r(eps: float) -> float:
                return _check_eps(eps) * _log(eps)
        elif theta < 5.0:
            def r(eps: float) -> float:
                return _check_eps(eps) ** (theta - 4.0)
        elif theta == 5.0:
            def r(eps: float) -> float:
                return _check_eps(eps) * _log(eps)
        else:
            def r(eps: float) -> float:
                return _check_eps(eps)

    if theta < 2.0:
        def b(eps: float) -> float:
            return _check_eps(eps)
    elif theta == 2.0:
        def b(eps: float) -> float:
            return _check_eps(eps) * _log(eps)
    elif theta < 3.0:
        def b(eps: float) -> float:
            return _check_eps(eps) ** (3.0 - theta)
    elif theta == 3.0:
        def b(eps: float) -> float:
            return 1.0 / _log(_check_eps(eps))
    elif theta < 4.0:
        def b(eps: float) -> float:
            return _check_eps(eps) ** (theta - 3.0)
    elif theta == 4.0:
        def b(eps: float) -> float:
            return _check_eps(eps)
    elif theta < 5.0:
        def b(eps: float) -> float:
            return _check_eps(eps) ** (theta - 3.0)
    elif theta == 5.0:
        def b(eps: float) -> float:
            return _check_eps(eps) ** 2 * _log(eps)
    else:
        def b(eps: float) -> float:
            return _check_eps(eps) ** 2

    return ScalingSchedule(theta=theta, j=j, m=m, n=n, b=b, r=r)


@dataclass(frozen=True)
class ModeMatrix:
    """A 2x2 complex matrix acting on one frequency mode of a field pair."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.shape != (2, 2):
            raise ValueError("entries must form a 2x2 matrix")
        object.__setattr__(self, "entries", entries)

    def __sub__(self, other: "ModeMatrix") -> "ModeMatrix":
        return ModeMatrix(self.entries - other.entries)

    def __matmul__(self, other: "ModeMatrix") -> "ModeMatrix":
        return ModeMatrix(self.entries @ other.entries)


def _omega_at(k_reduced: float, theta: float, spec: PotentialSpec | None) -> float:
    if spec is None:
        return float(_omega_closed(k_reduced, theta))
    return omega(k_reduced, spec)


def a_eps(k: float, eps: float, theta: float, gamma: float,
          spec: PotentialSpec | None = None) -> ModeMatrix:
    """Finite-scale wave-pair generator at macroscopic frequency ``k``.

    Entries are (1/j) [[-2 gamma R(eps k), i sgn(k) omega(eps k)],
    [i sgn(k) omega(eps k), 0]] with eps*k reduced to the unit torus.
    ``spec`` routes the dispersion through the tolerance-certified series;
    by default the exact small-frequency expansion is used.
    """
    eps = _check_eps(eps)
    j = schedule(theta).j(eps)
    k_red = _reduce_frequency(eps * k)
    w = _omega_at(k_red, theta, spec)
    off = 1j * float(np.sign(k)) * w / j
    damp = -2.0 * gamma * float(noise_rate_R(k_red)) / j
    return ModeMatrix(np.array([[damp, off], [off, 0.0]], dtype=np.complex128))


def a_limit(k: float, theta: float) -> ModeMatrix:
    """Scale-free wave-pair generator: anti-diagonal fractional transport."""
    c = const_c1(theta)
    off = 1j * float(np.sign(k)) * math.sqrt(c) * abs(
        2.0 * math.pi * k) ** limit_exponent(theta)
    return ModeMatrix(np.array([[0.0, off], [off, 0.0]], dtype=np.complex128))


def b_rem(k: float, eps: float, theta: float, gamma: float,
          spec: PotentialSpec | None = None) -> ModeMatrix:
    """Entrywise gap between the finite-scale and limiting wave generators."""
    return a_eps(k, eps, theta, gamma, spec) - a_limit(k, theta)


def m_eps(k: float, eps: float, theta: float, gamma: float,
          spec: PotentialSpec | None = None) -> ModeMatrix:
    """Finite-scale fluctuation generator after recentering.

    The diagonal carries the mismatch between the microscopic phase
    rotation (clock ``n``) and the limiting transport (clock ``m``)
    together with the damping -gamma R(eps k)/n; the damping also couples
    the two components through the off-diagonal entries.
    """
    if not theta > 2.0:
        raise ValueError("fluctuation generators need theta > 2")
    eps = _check_eps(eps)
    sched = schedule(theta)
    m_clock = sched.m(eps)
    n_clock = sched.n(eps)
    k_red = _reduce_frequency(eps * k)
    w = _omega_at(k_red, theta, spec)
    sig = float(np.sign(k))
    damp = gamma * float(noise_rate_R(k_red)) / n_clock
    m11 = (1j * sig * w / n_clock
           - 1j * sig * math.sqrt(const_c1(theta))
           * abs(2.0 * math.pi * k) ** limit_exponent(theta) / m_clock
           - damp)
    return ModeMatrix(np.array([[m11, -damp], [-damp, np.conj(m11)]],
                               dtype=np.complex128))


def m_limit(xi: float, theta: float, gamma: float) -> ModeMatrix:
    """Limiting fluctuation generator on the macroscopic line.

    For 2 < theta < 4 the limit is a pure phase correction i sgn(xi)
    (C2/(2 sqrt(C1))) |2 pi xi|^p (with the log-corrected variant at
    theta = 3); at theta = 4 that correction coexists with the diffusive
    coupling -(3 gamma/2)(2 pi xi)^2, which is all that survives for
    theta > 4.  The C2 corrections carry the factor 1/2 produced by
    expanding the square root of the dispersion; at theta = 3 the same
    expansion halves the log term as well.
    """
    if not theta > 2.0:
        raise ValueError("fluctuation generators need theta > 2")
    w = abs(2.0 * math.pi * xi)
    sig = float(np.sign(xi))
    if w == 0.0:
        return ModeMatrix(np.zeros((2, 2), dtype=np.complex128))
    root_c1 = math.sqrt(const_c1(theta))
    if theta < 3.0:
        m11 = 1j * sig * (const_c2(theta) / (2.0 * root_c1)) * w ** (
            0.5 * (5.0 - theta))
        off = 0.0
    elif theta == 3.0:
        m11 = 1j * sig * (0.5 * root_c1 * w * math.log(1.0 / w)
                          + (const_c2(3.0) / root_c1) * (0.5 * w))
        off = 0.0
    elif theta < 4.0:
        m11 = 1j * sig * (const_c2(theta) / (2.0 * root_c1)) * w ** (theta - 2.0)
        off = 0.0
    elif theta == 4.0:
        diffuse = 1.5 * gamma * w * w
        m11 = 1j * sig * (const_c2(4.0) / (2.0 * root_c1)) * w * w - diffuse
        off = -diffuse
    else:
        diffuse = 1.5 * gamma * w * w
        m11 = complex(-diffuse)
        off = -diffuse
    return ModeMatrix(np.array([[m11, off], [off, np.conj(m11)]],
                               dtype=np.complex128))


def rem(k: float, eps: float, theta: float, gamma: float,
        spec: PotentialSpec | None = None) -> ModeMatrix:
    """Entrywise gap between the finite-scale and limiting fluctuation generators."""
    return m_eps(k, eps, theta, gamma, spec) - m_limit(k, theta, gamma)


def _entries(matrix) -> np.ndarray:
    if isinstance(matrix, ModeMatrix):
        return matrix.entries
    entries = np.asarray(matrix, dtype=np.complex128)
    if entries.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    return entries


def expm2(matrix, t: float) -> ModeMatrix:
    """Matrix exponential exp(X t) of a 2x2 complex matrix, in closed form.

    Writing X = s I + Y with s half the trace, Y squares to q^2 I with
    q^2 = s^2 - det X, so exp(X t) = e^(s t) (cosh(q t) I + sinh(q t)/q Y).
    This is the eigen-decomposition in closed form; when the eigenvalue
    gap 2q nearly vanishes the sinh ratio switches to its even Taylor
    series, which covers coincident eigenvalues exactly.
    """
    x = _entries(matrix)
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix entries must be finite")
    s = 0.5 * (x[0, 0] + x[1, 1])
    det = x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]
    q = np.sqrt(s * s - det + 0j)
    qt = q * t
    if abs(qt) < _DEGENERATE_QT:
        qt2 = qt * qt
        scale = np.exp(s * t)
        ch = scale * (1.0 + qt2 * (0.5 + qt2 / 24.0))
        sh_ratio = scale * t * (1.0 + qt2 * (1.0 / 6.0 + qt2 / 120.0))
    else:
        # Exponentials of the eigenvalues s +- q themselves; for a stable
        # matrix both stay bounded where exp(s t) cosh(q t) would hit 0*inf.
        plus = np.exp((s + q) * t)
        minus = np.exp((s - q) * t)
        ch = 0.5 * (plus + minus)
        sh_ratio = 0.5 * (plus - minus) / q
    y = x - s * np.eye(2)
    return ModeMatrix(ch * np.eye(2) + sh_ratio * y)


def opnorm2(matrix) -> float:
    """Spectral norm (largest singular value) of a 2x2 complex matrix."""
    x = _entries(matrix)
    frob2 = float(np.sum(np.abs(x) ** 2))
    det2 = float(np.abs(x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]) ** 2)
    gap = math.sqrt(max(frob2 * frob2 - 4.0 * det2, 0.0))
    return math.sqrt(0.5 * (frob2 + gap))


def evolve_modes(fields: tuple[MacroField, MacroField],
                 generator: Callable[[float], ModeMatrix],
                 t: float) -> tuple[MacroField, MacroField]:
    """Advance a pair of macroscopic fields mode by mode.

    ``generator`` maps each grid frequency to the 2x2 generator of that
    mode; the pair is pushed through its matrix exponential at time ``t``.
    """
    first, second = fields
    if not np.array_equal(first.xi_grid, second.xi_grid):
        raise ValueError("fields must share one frequency grid")
    u = np.empty_like(first.values)
    v = np.empty_like(second.values)
    for i, xi in enumerate(first.xi_grid):
        e = expm2(generator(float(xi)), t).entries
        u[i] = e[0, 0] * first.values[i] + e[0, 1] * second.values[i]
        v[i] = e[1, 0] * first.values[i] + e[1, 1] * second.values[i]
    return MacroField(first.xi_grid, u), MacroField(second.xi_grid, v)


def _k_grid(k_cutoff: float, num_k: int) -> np.ndarray:
    # Norms are symmetric under k -> -k, so sampling k >= 0 suffices.
    return np.linspace(0.0, k_cutoff, num_k)


def sup_norm_b(theta: float, eps: float, gamma: float = 0.0,
               k_cutoff: float = 20.0, num_k: int = 41,
               spec: PotentialSpec | None = None) -> float:
    """Largest wave-generator gap norm over the frequency window."""
    return max(opnorm2(b_rem(k, eps, theta, gamma, spec))
               for k in _k_grid(k_cutoff, num_k))


def sup_norm_rem(theta: float, eps: float, gamma: float = 0.0,
                 k_cutoff: float = 20.0, num_k: int = 41,
                 spec: PotentialSpec | None = None) -> float:
    """Largest fluctuation-generator gap norm over the frequency window."""
    return max(opnorm2(rem(k, eps, theta, gamma, spec))
               for k in _k_grid(k_cutoff, num_k))


def rate_rows(theta: float, eps_values: Sequence[float], which: str = "b",
              gamma: float = 0.0, k_cutoff: float = 20.0, num_k: int = 41,
              spec: PotentialSpec | None = None) -> list[tuple]:
    """Tabulate (theta, eps, sup norm, envelope, ratio) for one generator gap."""
    if which not in ("b", "r"):
        raise ValueError("which must be 'b' or 'r'")
    sched = schedule(theta)
    rows = []
    for eps in eps_values:
        if which == "b":
            sup = sup_norm_b(theta, eps, gamma, k_cutoff, num_k, spec)
            env = sched.b(eps)
        else:
            sup = sup_norm_rem(theta, eps, gamma, k_cutoff, num_k, spec)
            env = sched.r(eps)
        rows.append((theta, eps, sup, env, sup / env))
    return rows


def write_rate_csv(path: str, rows: Sequence[tuple], which: str = "b") -> None:
    """Write gap-norm rows as CSV with the envelope named for its family."""
    if which not in ("b", "r"):
        raise ValueError("which must be 'b' or 'r'")
    sup_name, env_name = (("sup_norm_B", "b_env") if which == "b"
                          else ("sup_norm_Rem", "r_env"))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["theta", "eps", sup_name, env_name, "ratio"])
        writer.writerows(rows)
