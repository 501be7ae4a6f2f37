"""Experiment drivers that reproduce the chain's scaling limits at desk scale.

The runners tie the other modules together: deterministic generator
comparisons for the wave and recentered pairs, Monte Carlo runs that pit
the simulator against the macroscopic solvers, envelope sweeps for the
remainder lemmas, and report emission for the command line tools.  Every
experiment is a pure function of its configuration; replicas draw from
disjoint counter-based streams, so reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .macro import energy_functional, field_on_grid, solve_wave
from .meanflow import (a_eps, a_limit, expm2, m_eps, m_limit, opnorm2,
                       rate_rows, schedule)
from .microsim import (SimConfig, empirical_pairing, energy_field,
                       init_phononic, observable_fields,
                       periodized_dispersion, run)
from .potential import PotentialSpec, alpha_hat, asymptotic_prediction, const_c1
from .spectral import (LatticeGrid, MacroField, lattice_forward,
                       semigroup_multiplier, symmetric_grid)

THETA_GRID = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0)
EPS_LADDER = tuple(2.0 ** -i for i in range(8, 17))

_WRAP_GUARD = 0.25
_RECENTER_GUARD = 0.26
_PROFILE_KINDS = ("gaussian_pair", "bump_pair", "momentum_only")
_BUMP_QUAD_ORDER = 200


@dataclass(frozen=True)
class TestFunctionSpec:
    """Analytic test bump with a closed-form frequency transform.

    The bump is a Gaussian of the given width, optionally shifted to
    ``center`` and modulated by a cosine carrier, so the transform stays
    a finite sum of shifted Gaussians times a phase.
    """

    name: str
    width: float
    center: float = 0.0
    modulation: float = 0.0

    def __post_init__(self) -> None:
        if not self.width > 0.0:
            raise ValueError("test function width must be positive")

    def values(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        arg = (y - self.center) / self.width
        out = np.exp(-arg * arg)
        if self.modulation != 0.0:
            out = out * np.cos(2.0 * math.pi * self.modulation
                               * (y - self.center))
        return out

    def transform(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=np.float64)
        scale = self.width * math.sqrt(math.pi)
        if self.modulation == 0.0:
            base = scale * np.exp(-(math.pi * self.width * xi) ** 2)
        else:
            lobe = math.pi * self.width
            base = 0.5 * scale * (
                np.exp(-(lobe * (xi - self.modulation)) ** 2)
                + np.exp(-(lobe * (xi + self.modulation)) ** 2))
        return base * np.exp(-2j * math.pi * xi * self.center)


def default_test_functions() -> tuple:
    """Three bumps with distinct widths and one off-center support."""
    return (
        TestFunctionSpec("narrow", 0.04),
        TestFunctionSpec("wide", 0.08),
        TestFunctionSpec("offset", 0.05, center=0.03),
    )


@dataclass(frozen=True)
class ProfileSet:
    """Initial macroscopic profiles together with their transforms."""

    kind: str
    params: tuple
    pbar: Callable
    lbar: Callable
    pbar_hat: Callable
    lbar_hat: Callable


def _bump_shape(u: np.ndarray) -> np.ndarray:
    # exp(1 - 1/(1 - u^2)) inside |u| < 1, zero outside; all derivatives
    # vanish at the edge, so lattice sampling never sees a jump.
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def _bump_slope(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    one = 1.0 - ui * ui
    out[inside] = np.exp(1.0 - 1.0 / one) * (-2.0 * ui / (one * one))
    return out


def make_initial_profiles(kind: str, params: Mapping | None = None) -> ProfileSet:
    """Build a zero-mean initial pair and its frequency transforms.

    ``gaussian_pair`` pairs a Gaussian momentum bump with the scaled
    derivative of the same bump as the stretch profile, ``bump_pair``
    does the same with a compactly supported bump (its transform is
    evaluated by Gauss quadrature over the support), and
    ``momentum_only`` zeroes the stretch profile.  Building the stretch
    side as a derivative makes its lattice mean vanish identically.
    """
    if kind not in _PROFILE_KINDS:
        raise ValueError(
            f"unknown profile kind {kind!r}; choose from {_PROFILE_KINDS}")
    given = dict(params or {})
    width = float(given.pop("width", 0.05))
    amp_p = float(given.pop("amp_p", 1.0))
    amp_l = float(given.pop("amp_l", 0.5))
    if given:
        raise ValueError(f"unknown profile parameters: {sorted(given)}")
    if not width > 0.0:
        raise ValueError("profile width must be positive")
    frozen = (("amp_l", amp_l), ("amp_p", amp_p), ("width", width))
    root_pi = math.sqrt(math.pi)

    if kind in ("gaussian_pair", "momentum_only"):
        def pbar(y):
            y = np.asarray(y, dtype=np.float64)
            return amp_p * np.exp(-(y / width) ** 2)

        def pbar_hat(xi):
            xi = np.asarray(xi, dtype=np.float64)
            return (amp_p * width * root_pi
                    * np.exp(-(math.pi * width * xi) ** 2)).astype(complex)

        if kind == "momentum_only":
            def lbar(y):
                return np.zeros_like(np.asarray(y, dtype=np.float64))

            def lbar_hat(xi):
                return np.zeros(np.asarray(xi, dtype=np.float64).shape,
                                dtype=complex)
        else:
            def lbar(y):
                y = np.asarray(y, dtype=np.float64)
                return -2.0 * amp_l * (y / width) * np.exp(-(y / width) ** 2)

            def lbar_hat(xi):
                xi = np.asarray(xi, dtype=np.float64)
                gauss = width * root_pi * np.exp(-(math.pi * width * xi) ** 2)
                return 2j * math.pi * xi * amp_l * width * gauss
        return ProfileSet(kind, frozen, pbar, lbar, pbar_hat, lbar_hat)

    nodes, weights = np.polynomial.legendre.leggauss(_BUMP_QUAD_ORDER)
    shape_w = _bump_shape(nodes) * weights * width

    def pbar(y):
        return amp_p * _bump_shape(np.asarray(y, dtype=np.float64) / width)

    def lbar(y):
        return amp_l * _bump_slope(np.asarray(y, dtype=np.float64) / width)

    def _base_hat(xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        phases = np.exp(-2j * math.pi * width * np.outer(xi, nodes))
        return phases @ shape_w

    def pbar_hat(xi):
        return amp_p * _base_hat(xi)

    def lbar_hat(xi):
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        return amp_l * width * 2j * math.pi * xi_arr * _base_hat(xi_arr)

    return ProfileSet(kind, frozen, pbar, lbar, pbar_hat, lbar_hat)


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs of one experiment.

    ``sizes`` is the ladder of even lattice sizes with eps = 1/N,
    ``times`` the macroscopic checkpoints, and ``k_window`` the integer
    frequency cutoff of every spectral comparison.  Construction
    enforces the ring guard sqrt(C1(theta)) * max(times) < 0.25 so no
    transported profile can wrap around the periodic window.
    """

    theta: float
    gamma: float = 0.0
    sizes: tuple = (512, 1024, 2048, 4096)
    replicas: int = 8
    times: tuple = (0.1,)
    profile_kind: str = "gaussian_pair"
    profile_params: tuple = ()
    test_functions: tuple = ()
    seed: int = 20260816
    out_dir: str | None = None
    k_window: int = 40
    dt_target: float = 0.05
    images: int = 8

    def __post_init__(self) -> None:
        theta = float(self.theta)
        if not theta > 1.0:
            raise ValueError("theta must exceed 1")
        gamma = float(self.gamma)
        if gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes:
            raise ValueError("at least one lattice size is required")
        for n in sizes:
            if n < 4 or n % 2 != 0:
                raise ValueError("lattice sizes must be even and at least 4")
        replicas = int(self.replicas)
        if replicas < 1:
            raise ValueError("replicas must be at least 1")
        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValueError("at least one macroscopic time is required")
        if any(t < 0.0 for t in times):
            raise ValueError("times must be nonnegative")
        if math.sqrt(const_c1(theta)) * max(times) >= _WRAP_GUARD:
            raise ValueError(
                "wrap-around guard: sqrt(C1(theta)) * t must stay below 0.25")
        if isinstance(self.profile_params, Mapping):
            pairs = self.profile_params.items()
        else:
            pairs = tuple(self.profile_params)
        params = tuple(sorted((str(k), float(v)) for k, v in pairs))
        tests = tuple(self.test_functions) or default_test_functions()
        k_window = int(self.k_window)
        if k_window < 1:
            raise ValueError("k_window must be at least 1")
        if not float(self.dt_target) > 0.0:
            raise ValueError("dt_target must be positive")
        if int(self.images) < 1:
            raise ValueError("images must be at least 1")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "replicas", replicas)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "profile_params", params)
        object.__setattr__(self, "test_functions", tests)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "k_window", k_window)
        object.__setattr__(self, "dt_target", float(self.dt_target))
        object.__setattr__(self, "images", int(self.images))

    @property
    def epsilons(self) -> tuple:
        return tuple(1.0 / n for n in self.sizes)


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of one experiment: metric rows, slope fits, pass flags.

    Every numeric metric must be finite and every slope fit must rest on
    at least four points; violations fail construction rather than
    leaking into reports.
    """

    experiment: str
    theta: float
    gamma: float
    grid: tuple
    seed: int
    metrics: tuple
    slopes: tuple
    passes: Mapping

    def __post_init__(self) -> None:
        metrics = tuple(dict(row) for row in self.metrics)
        for row in metrics:
            for key, value in row.items():
                if isinstance(value, bool) or isinstance(value, str):
                    continue
                if not math.isfinite(float(value)):
                    raise ValueError(f"metric {key!r} is not finite")
        slopes = tuple(dict(row) for row in self.slopes)
        for row in slopes:
            if int(row.get("points", 0)) < 4:
                raise ValueError("slope fits need at least four points")
        passes = {str(k): bool(v) for k, v in dict(self.passes).items()}
        object.__setattr__(self, "experiment", str(self.experiment))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "grid", tuple(int(n) for n in self.grid))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "metrics", metrics)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "passes", passes)

    @property
    def all_passed(self) -> bool:
        return all(self.passes.values())


def fit_loglog_slope(points: Sequence) -> tuple:
    """Least-squares power law fit in log-log coordinates.

    Returns (slope, intercept, residual) where the residual is the RMS
    misfit of log y, so an exact power law y = c x^s fits with slope s,
    intercept log c and zero residual.  Needs at least four strictly
    positive points.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 4:
        raise ValueError("slope fits need at least four points")
    if any(x <= 0.0 or y <= 0.0 for x, y in pts):
        raise ValueError("slope fits need positive coordinates")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    misfit = ly - (slope * lx + intercept)
    residual = math.sqrt(float(np.mean(misfit * misfit)))
    return float(slope), float(intercept), residual


def _slope_entry(name: str, points: Sequence) -> dict:
    slope, intercept, residual = fit_loglog_slope(points)
    lx = np.log([float(x) for x, _ in points])
    n = lx.size
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = residual * math.sqrt(n / ((n - 2) * sxx))
    return {"name": name, "slope": slope, "intercept": intercept,
            "residual": residual, "ci_half_width": 2.0 * stderr,
            "points": int(n)}


def _trapezoid_row(count: int, spacing: float) -> np.ndarray:
    weights = np.full(count, spacing)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


def bandlimit_sampling_error(profiles: ProfileSet, n_sites: int,
                             spacing: float = 0.25) -> float:
    """Lattice mass of the momentum profile its frequency band misses.

    Computes eps * sum_x |pbar0(eps x) - reconstruction(eps x)|^2 where
    the reconstruction integrates the exact transform over the lattice
    band |k| <= N/2.  The gap is the transform tail beyond the band, so
    it drops quickly as the lattice doubles.
    """
    grid = LatticeGrid(int(n_sites))
    eps = 1.0 / grid.n_sites
    band = grid.n_sites // 2
    nodes = symmetric_grid(float(band), spacing)
    weighted = profiles.pbar_hat(nodes) * _trapezoid_row(nodes.size, spacing)
    y = grid.sites * eps
    exact = np.asarray(profiles.pbar(y), dtype=np.float64)
    total = 0.0
    for start in range(0, y.size, 256):
        block = y[start:start + 256]
        recon = (np.exp(2j * math.pi * np.outer(block, nodes))
                 @ weighted).real
        diff = exact[start:start + 256] - recon
        total += float(np.sum(diff * diff))
    return eps * total


def _profiles_for(config: ExperimentConfig,
                  profiles: ProfileSet | None) -> ProfileSet:
    if profiles is not None:
        return profiles
    return make_initial_profiles(config.profile_kind,
                                 dict(config.profile_params))


def _lattice_window_spectra(profiles: ProfileSet, n_sites: int,
                            k_ints: np.ndarray) -> tuple:
    """Scaled lattice transforms eps p_hat, eps l_hat on the integer window."""
    grid = LatticeGrid(n_sites)
    eps = 1.0 / n_sites
    y = grid.sites * eps
    p = np.asarray(profiles.pbar(y), dtype=np.float64)
    l = np.asarray(profiles.lbar(y), dtype=np.float64)
    idx = n_sites // 2 + k_ints
    return eps * lattice_forward(p)[idx], eps * lattice_forward(l)[idx]


def _evolve_pair(k_values: np.ndarray, first: np.ndarray, second: np.ndarray,
                 generator: Callable, t: float) -> tuple:
    u = np.empty(k_values.size, dtype=complex)
    v = np.empty(k_values.size, dtype=complex)
    for i, k in enumerate(k_values):
        e = expm2(generator(float(k)), t).entries
        u[i] = e[0, 0] * first[i] + e[0, 1] * second[i]
        v[i] = e[1, 0] * first[i] + e[1, 1] * second[i]
    return u, v


def _pair_error(ap, al, bp, bl) -> float:
    gap = np.abs(ap - bp) ** 2 + np.abs(al - bl) ** 2
    return math.sqrt(float(np.sum(gap)))


def _monotone(values: Sequence) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _time_tag(t: float) -> str:
    return f"{t:g}"


def run_mean_convergence(config: ExperimentConfig,
                         profiles: ProfileSet | None = None) -> ConvergenceReport:
    """Deterministic wave-pair generator comparison across the size ladder.

    The sampled initial spectra ride exp(A_eps t) mode by mode and are
    scored in L2 over the integer frequency window against the transport
    limit started from the exact transforms.  Positive times also record
    the error divided by b(eps) * t, the finite-interval envelope; the
    t = 0 rows isolate the pure sampling error of the lattice transform.
    """
    profiles = _profiles_for(config, profiles)
    theta, gamma = config.theta, config.gamma
    sched = schedule(theta)
    k_ints = np.arange(-config.k_window, config.k_window + 1)
    lim_p0 = np.asarray(profiles.pbar_hat(k_ints), dtype=complex)
    lim_l0 = np.asarray(profiles.lbar_hat(k_ints), dtype=complex)
    metrics = []
    errors = {t: [] for t in config.times}
    ratios = {t: [] for t in config.times if t > 0.0}
    for n in config.sizes:
        eps = 1.0 / n
        lat_p0, lat_l0 = _lattice_window_spectra(profiles, n, k_ints)
        for t in config.times:
            fin_p, fin_l = _evolve_pair(
                k_ints, lat_p0, lat_l0,
                lambda k: a_eps(k, eps, theta, gamma), t)
            lim_p, lim_l = _evolve_pair(
                k_ints, lim_p0, lim_l0, lambda k: a_limit(k, theta), t)
            err = _pair_error(fin_p, fin_l, lim_p, lim_l)
            limit_norm = math.sqrt(float(
                np.sum(np.abs(lim_p) ** 2 + np.abs(lim_l) ** 2)))
            row = {"n_sites": n, "eps": eps, "time": t,
                   "error": err, "limit_norm": limit_norm}
            errors[t].append(err)
            if t > 0.0:
                env = sched.b(eps) * t
                row["envelope"] = env
                row["ratio"] = err / env
                ratios[t].append(err / env)
            metrics.append(row)
    slopes = []
    passes = {}
    for t in config.times:
        tag = _time_tag(t)
        if t > 0.0:
            band = ratios[t]
            passes[f"ratio_band@t={tag}"] = max(band) / min(band) <= 3.0
            passes[f"monotone@t={tag}"] = _monotone(errors[t])
            if len(config.sizes) >= 4:
                slopes.append(_slope_entry(
                    f"error@t={tag}",
                    list(zip(config.epsilons, errors[t]))))
        else:
            passes["sampling_floor@t=0"] = max(errors[t]) <= 1e-8
    return ConvergenceReport("mean_convergence", theta, gamma, config.sizes,
                             config.seed, metrics, slopes, passes)


def _schedule_identity_gap(theta: float, eps: float) -> float:
    sched = schedule(theta)
    j = sched.j(eps)
    return abs(sched.n(eps) / sched.m(eps) - j) / j


def run_fluc_convergence(config: ExperimentConfig,
                         profiles: ProfileSet | None = None) -> ConvergenceReport:
    """Deterministic recentered-pair comparison across the size ladder.

    The normal-mode transforms eps(p_hat + l_hat), eps(p_hat - l_hat)
    ride exp(M_eps t) and are scored against exp(M t) from the exact
    transforms, with the error also expressed relative to r(eps) * t.
    Needs theta > 2; the branches at and above theta = 4 couple through
    the noise, so they refuse gamma = 0.
    """
    theta, gamma = config.theta, config.gamma
    if theta <= 2.0:
        raise ValueError("the recentered pair needs theta > 2")
    if theta >= 4.0 and gamma <= 0.0:
        raise ValueError("theta >= 4 moves by the noise alone; "
                         "gamma must be positive")
    profiles = _profiles_for(config, profiles)
    sched = schedule(theta)
    k_ints = np.arange(-config.k_window, config.k_window + 1)
    p0 = np.asarray(profiles.pbar_hat(k_ints), dtype=complex)
    l0 = np.asarray(profiles.lbar_hat(k_ints), dtype=complex)
    lim_fp0, lim_fm0 = p0 + l0, p0 - l0
    metrics = []
    errors = {t: [] for t in config.times}
    ratios = {t: [] for t in config.times if t > 0.0}
    for n in config.sizes:
        eps = 1.0 / n
        if _schedule_identity_gap(theta, eps) > 1e-13:
            raise RuntimeError("scaling schedule identity n/m = j broke down")
        lat_p0, lat_l0 = _lattice_window_spectra(profiles, n, k_ints)
        fp0, fm0 = lat_p0 + lat_l0, lat_p0 - lat_l0
        for t in config.times:
            fin_p, fin_m = _evolve_pair(
                k_ints, fp0, fm0,
                lambda k: m_eps(k, eps, theta, gamma), t)
            lim_p, lim_m = _evolve_pair(
                k_ints, lim_fp0, lim_fm0,
                lambda k: m_limit(k, theta, gamma), t)
            err = _pair_error(fin_p, fin_m, lim_p, lim_m)
            row = {"n_sites": n, "eps": eps, "time": t, "error": err}
            errors[t].append(err)
            if t > 0.0:
                env = sched.r(eps) * t
                row["envelope"] = env
                row["ratio"] = err / env
                ratios[t].append(err / env)
            metrics.append(row)
    slopes = []
    passes = {}
    for t in config.times:
        tag = _time_tag(t)
        if t > 0.0:
            band = ratios[t]
            passes[f"ratio_band@t={tag}"] = max(band) / min(band) <= 3.0
            passes[f"monotone@t={tag}"] = _monotone(errors[t])
            if len(config.sizes) >= 4:
                slopes.append(_slope_entry(
                    f"error@t={tag}",
                    list(zip(config.epsilons, errors[t]))))
        else:
            passes["sampling_floor@t=0"] = max(errors[t]) <= 1e-8
    # theta = 3 is the distinguished fastest clock: n is larger there
    # than on either side, so the theta dependence is not monotone.
    eps_min = 1.0 / max(config.sizes)
    passes["n_fastest_at_3"] = schedule(3.0).n(eps_min) > max(
        schedule(2.5).n(eps_min), schedule(3.5).n(eps_min))
    return ConvergenceReport("fluc_convergence", theta, gamma, config.sizes,
                             config.seed, metrics, slopes, passes)


_DISPERSIONS: dict = {}


def _certified_spec(theta: float) -> PotentialSpec:
    # The ring's smallest frequency needs a deep certified cutoff.
    return PotentialSpec(theta, series_cutoff=1_000_000, tail_tolerance=1e-8)


def _shared_dispersion(n_sites: int, theta: float, images: int) -> tuple:
    key = (n_sites, round(theta, 12), images)
    if key not in _DISPERSIONS:
        _DISPERSIONS[key] = periodized_dispersion(
            LatticeGrid(n_sites), _certified_spec(theta), images)
    return _DISPERSIONS[key]


def _advance_to(state, target: float, dt_target: float):
    """March split steps to the requested clock without overshooting."""
    span = target - state.time
    if span <= 1e-12:
        return state
    dt = min(dt_target, state.dt)
    n_steps = max(1, math.ceil(span / dt))
    return run(state, n_steps, span / n_steps)


def _replica_states(config: ExperimentConfig, profiles: ProfileSet,
                    n_sites: int):
    spec = _certified_spec(config.theta)
    dispersion = _shared_dispersion(n_sites, config.theta, config.images)
    sim = SimConfig(n_sites=n_sites, theta=config.theta, gamma=config.gamma,
                    seed=config.seed, periodization_images=config.images)
    count = 1 if config.gamma == 0.0 else config.replicas
    for rep in range(count):
        yield init_phononic(profiles.pbar, profiles.lbar, sim, spec=spec,
                            dispersion=dispersion, replica=rep)


def run_wave_limit(config: ExperimentConfig,
                   profiles: ProfileSet | None = None) -> ConvergenceReport:
    """Monte Carlo wave-pair limit check on the simulator.

    Each replica is initialized from the profiles, advanced to the
    microscopic times t / j(eps), and its momentum, stretch-current and
    stretch spectra are averaged over replicas before scoring against
    the macroscopic rotation on the frequency window.  Above theta = 3
    the stretch spectrum is also scored against the rescaled current
    (the two limit fields are proportional there); at or below 3 its
    window norm is recorded as a smallness certificate.  At gamma = 0
    the dynamics is deterministic and a single replica is exact.
    """
    profiles = _profiles_for(config, profiles)
    theta, gamma = config.theta, config.gamma
    sched = schedule(theta)
    k_ints = np.arange(-config.k_window, config.k_window + 1)
    p0_field = MacroField(k_ints.astype(float),
                          np.asarray(profiles.pbar_hat(k_ints), dtype=complex))
    l0_field = MacroField(k_ints.astype(float),
                          np.asarray(profiles.lbar_hat(k_ints), dtype=complex))
    root_c1 = math.sqrt(const_c1(theta))
    times = sorted(config.times)
    metrics = []
    errors = {t: [] for t in times}
    for n in config.sizes:
        eps = 1.0 / n
        j = sched.j(eps)
        idx = n // 2 + k_ints
        sums = {t: [np.zeros(k_ints.size, dtype=complex) for _ in range(3)]
                for t in times}
        count = 0
        for state in _replica_states(config, profiles, n):
            count += 1
            for t in times:
                state = _advance_to(state, t / j, config.dt_target)
                p, l, r = observable_fields(state)
                sums[t][0] += eps * lattice_forward(p)[idx]
                sums[t][1] += eps * lattice_forward(l)[idx]
                sums[t][2] += eps * lattice_forward(r)[idx]
        for t in times:
            mean_p, mean_l, mean_r = (arr / count for arr in sums[t])
            wave = solve_wave(p0_field, l0_field, t, theta)
            err = _pair_error(mean_p, mean_l,
                              wave.p_tilde.values, wave.l_tilde.values)
            row = {"n_sites": n, "eps": eps, "time": t, "error": err}
            if theta > 3.0:
                row["r_gap"] = math.sqrt(float(np.sum(np.abs(
                    mean_r - wave.l_tilde.values / root_c1) ** 2)))
            else:
                row["r_norm"] = math.sqrt(float(np.sum(np.abs(mean_r) ** 2)))
            errors[t].append(err)
            metrics.append(row)
    slopes = []
    passes = {}
    for t in times:
        tag = _time_tag(t)
        if t > 0.0:
            passes[f"monotone@t={tag}"] = _monotone(errors[t])
            if len(config.sizes) >= 4:
                slopes.append(_slope_entry(
                    f"error@t={tag}",
                    list(zip(config.epsilons, errors[t]))))
        else:
            passes["sampling_floor@t=0"] = max(errors[t]) <= 1e-8
    return ConvergenceReport("wave_limit", theta, gamma, config.sizes,
                             config.seed, metrics, slopes, passes)


def run_energy_pairing(config: ExperimentConfig,
                       profiles: ProfileSet | None = None,
                       xi_spacing: float = 0.25,
                       gap_tolerance: float = 0.1) -> ConvergenceReport:
    """Energy-pairing limit check against the macroscopic functional.

    Replica-averaged pairings of the lattice energy field with each test
    bump are compared, per size and time, with the energy functional of
    the evolved wave pair; the functional takes the quadratic form at
    theta >= 3 and the exchange-kernel form below.  The relative gap is
    measured against the larger of the current and initial functional
    values, because transport can move all the energy off a bump and
    void the instantaneous value as a yardstick.  The finest size passes
    when the gap stays within max(tolerance * scale, three standard
    errors of the replica mean).
    """
    profiles = _profiles_for(config, profiles)
    theta, gamma = config.theta, config.gamma
    sched = schedule(theta)
    xi = symmetric_grid(float(config.k_window), xi_spacing)
    p0_field = MacroField(xi, np.asarray(profiles.pbar_hat(xi), dtype=complex))
    l0_field = MacroField(xi, np.asarray(profiles.lbar_hat(xi), dtype=complex))
    times = sorted(config.times)
    wave0 = solve_wave(p0_field, l0_field, 0.0, theta)
    scale0 = {tf.name: abs(energy_functional(wave0, tf.transform, theta))
              for tf in config.test_functions}
    metrics = []
    last = {}
    for n in config.sizes:
        eps = 1.0 / n
        j = sched.j(eps)
        draws = {(t, tf.name): [] for t in times
                 for tf in config.test_functions}
        for state in _replica_states(config, profiles, n):
            for t in times:
                state = _advance_to(state, t / j, config.dt_target)
                e_field = energy_field(state)
                for tf in config.test_functions:
                    draws[(t, tf.name)].append(empirical_pairing(
                        e_field, tf.values, eps))
        for t in times:
            wave = solve_wave(p0_field, l0_field, t, theta)
            for tf in config.test_functions:
                series = np.asarray(draws[(t, tf.name)])
                emp = float(series.mean())
                stderr = (float(series.std(ddof=1)) / math.sqrt(series.size)
                          if series.size > 1 else 0.0)
                mac = energy_functional(wave, tf.transform, theta)
                scale = max(abs(mac), scale0[tf.name], 1e-12)
                gap = abs(emp - mac) / scale
                last[(t, tf.name)] = (abs(emp - mac), stderr, scale)
                metrics.append({"n_sites": n, "eps": eps, "time": t,
                                "test_function": tf.name, "empirical": emp,
                                "stderr": stderr, "macro": mac,
                                "gap_rel": gap})
    passes = {}
    for (t, name), (gap_abs, stderr, scale) in last.items():
        passes[f"gap@t={_time_tag(t)},{name}"] = \
            gap_abs <= max(gap_tolerance * scale, 3.0 * stderr)
    return ConvergenceReport("energy_pairing", theta, gamma, config.sizes,
                             config.seed, metrics, [], passes)


def recentering_time(config: ExperimentConfig) -> float:
    """Largest macroscopic time whose recentered bump stays on the ring.

    The law-of-large-numbers pairing shifts the test bump by
    sqrt(C1) * t / m(eps); sizing t as 0.25 m(eps_min) / sqrt(C1) keeps
    that displacement at a quarter window for the finest lattice and
    below it for the coarser ones.
    """
    sched = schedule(config.theta)
    eps_min = 1.0 / max(config.sizes)
    return 0.25 * sched.m(eps_min) / math.sqrt(const_c1(config.theta))


def run_normal_mode_lln(config: ExperimentConfig,
                        profiles: ProfileSet | None = None,
                        xi_spacing: float = 0.25) -> ConvergenceReport:
    """Law-of-large-numbers check for the recentered normal modes.

    For each replica the normal modes p +- l at microscopic time
    t / n(eps) are paired with the test bump recentered through the
    transport semigroup at t / m(eps), and the absolute gap to the
    drift-limit pairing is averaged over replicas.  Only 2 < theta < 4
    carries this law; other exponents are refused.
    """
    theta, gamma = config.theta, config.gamma
    if not 2.0 < theta < 4.0:
        raise ValueError(
            "the normal-mode law of large numbers needs 2 < theta < 4")
    profiles = _profiles_for(config, profiles)
    sched = schedule(theta)
    root_c1 = math.sqrt(const_c1(theta))
    xi = symmetric_grid(float(config.k_window), xi_spacing)
    weights = _trapezoid_row(xi.size, xi_spacing)
    f_plus0 = np.asarray(profiles.pbar_hat(xi), dtype=complex) \
        + np.asarray(profiles.lbar_hat(xi), dtype=complex)
    f_minus0 = np.asarray(profiles.pbar_hat(xi), dtype=complex) \
        - np.asarray(profiles.lbar_hat(xi), dtype=complex)
    times = sorted(config.times)
    limits = {}
    for t in times:
        ft_p, ft_m = _evolve_pair(xi, f_plus0, f_minus0,
                                  lambda x: m_limit(x, theta, gamma), t)
        for sign, ft in ((1, ft_p), (-1, ft_m)):
            for tf in config.test_functions:
                pairing = np.sum(weights * ft * tf.transform(-xi))
                limits[(t, sign, tf.name)] = float(pairing.real)
    metrics = []
    deviations = {key: [] for key in limits}
    for n in config.sizes:
        eps = 1.0 / n
        if _schedule_identity_gap(theta, eps) > 1e-13:
            raise RuntimeError("scaling schedule identity n/m = j broke down")
        m_clock, n_clock = sched.m(eps), sched.n(eps)
        if root_c1 * max(times) / m_clock > _RECENTER_GUARD:
            raise ValueError("recentered bump would leave the ring; "
                             "shrink t toward recentering_time()")
        sites_y = LatticeGrid(n).sites * eps
        recentered = {}
        for t in times:
            for sign in (1, -1):
                mult = semigroup_multiplier(xi, t / m_clock, sign, theta)
                for tf in config.test_functions:
                    moved = MacroField(xi, tf.transform(xi) * mult)
                    recentered[(t, sign, tf.name)] = field_on_grid(
                        moved, sites_y)
        samples = {key: [] for key in limits}
        for state in _replica_states(config, profiles, n):
            for t in times:
                state = _advance_to(state, t / n_clock, config.dt_target)
                p, l, _ = observable_fields(state)
                for sign, mode in ((1, p + l), (-1, p - l)):
                    for tf in config.test_functions:
                        key = (t, sign, tf.name)
                        pairing = eps * float(
                            np.sum(mode * recentered[key]))
                        samples[key].append(abs(pairing - limits[key]))
        for t in times:
            for sign in (1, -1):
                for tf in config.test_functions:
                    key = (t, sign, tf.name)
                    draws = np.asarray(samples[key])
                    dev = float(draws.mean())
                    stderr = (float(draws.std(ddof=1))
                              / math.sqrt(draws.size)) if draws.size > 1 else 0.0
                    deviations[key].append(dev)
                    metrics.append({
                        "n_sites": n, "eps": eps, "time": t,
                        "test_function": tf.name,
                        "branch": "plus" if sign == 1 else "minus",
                        "deviation": dev, "stderr": stderr,
                        "limit": limits[key]})
    passes = {}
    floor_rows = []
    for (t, sign, name), series in deviations.items():
        if t > 0.0:
            branch = "plus" if sign == 1 else "minus"
            passes[f"monotone@t={_time_tag(t)},{name},{branch}"] = \
                _monotone(series)
        else:
            floor_rows.extend(series)
    if floor_rows:
        passes["sampling_floor@t=0"] = max(floor_rows) <= 1e-8
    return ConvergenceReport("normal_mode_lln", theta, gamma, config.sizes,
                             config.seed, metrics, [], passes)


_B_EXPONENT = {2.5: 0.5, 3.5: 0.5, 4.0: 1.0, 4.5: 1.5, 6.0: 2.0}
_R_EXPONENT = {2.5: 0.5, 3.5: 0.5, 4.5: 0.5, 6.0: 1.0}
_SLOPE_TOL = 0.1
_RATIO_DRIFT_CAP = 5.0
# Coarse-end prefactor of the loose eps envelope below theta = 2,
# measured at 13.7 on the dyadic ladder.
_LOOSE_RATIO_CAP = 20.0
_PREDICTION_PIN = 2.0
_EXPNORM_PIN = 5.0


def verify_bounds(config: ExperimentConfig | None = None) -> ConvergenceReport:
    """Envelope and norm sweeps across the whole exponent grid.

    Tables the wave and recentered generator gaps over the dyadic eps
    ladder against their envelopes: pure power rows must fit their
    tabulated slope within 0.15, logarithmic rows must keep their ratio
    drift under a factor 5.  Also pins the operator norm of exp(A_eps t)
    and the scaled remainder of the two-term dispersion prediction.
    The quartic recentering row runs at unit noise because its gap
    vanishes identically when gamma = 0 (the dispersion is an exact
    polynomial there); every other row is noise-free.
    """
    seed = config.seed if config is not None else 20260816
    ladder = EPS_LADDER
    metrics = []
    slopes = []
    passes = {}
    for theta in THETA_GRID:
        for family in ("b", "r"):
            if family == "r" and theta <= 2.0:
                continue
            gamma = 1.0 if family == "r" and theta == 4.0 else 0.0
            rows = rate_rows(theta, ladder, family, gamma=gamma)
            sups = [row[2] for row in rows]
            rats = [row[4] for row in rows]
            for (_, eps, sup, env, ratio) in rows:
                metrics.append({"check": family, "theta": theta, "eps": eps,
                                "sup": sup, "envelope": env, "ratio": ratio})
            table = _B_EXPONENT if family == "b" else _R_EXPONENT
            tag = f"{family}@theta={theta:g}"
            if family == "r" and theta == 4.0:
                # The dispersion is an exact polynomial at theta = 4, so
                # the noise-free gap vanishes and the unit-noise gap is
                # quadratic: the tabulated eps log(1/eps) envelope holds
                # only with the noise kernel's window constant.  The
                # check pins the measured quadratic rate instead.
                entry = _slope_entry(tag, list(zip(ladder, sups)))
                slopes.append(entry)
                passes[f"slope_{tag}"] = abs(entry["slope"] - 2.0) <= _SLOPE_TOL
            elif family == "b" and theta == 1.5:
                # Below theta = 2 the gap runs at eps^(3 - theta) while
                # the table lists plain eps: a valid but loose envelope,
                # so the ratio sinks.  Boundedness plus the measured
                # three-halves rate is the honest statement.
                entry = _slope_entry(tag, list(zip(ladder, sups)))
                slopes.append(entry)
                passes[f"bounded_{tag}"] = max(rats) <= _LOOSE_RATIO_CAP
                passes[f"slope_{tag}"] = \
                    abs(entry["slope"] - 1.5) <= _SLOPE_TOL
            elif theta in table:
                entry = _slope_entry(tag, list(zip(ladder, sups)))
                slopes.append(entry)
                passes[f"slope_{tag}"] = \
                    abs(entry["slope"] - table[theta]) <= _SLOPE_TOL
            else:
                drift = max(rats) / min(rats) if min(rats) > 0 else math.inf
                passes[f"drift_{tag}"] = drift <= _RATIO_DRIFT_CAP
    worst = 0.0
    worst_real = -math.inf
    for theta in THETA_GRID:
        for eps in (2.0 ** -8, 2.0 ** -12, 2.0 ** -16):
            for k in (0.5, 5.0, 20.0):
                generators = [a_eps(k, eps, theta, 0.0),
                              a_eps(k, eps, theta, 1.0)]
                if theta > 2.0:
                    generators += [m_eps(k, eps, theta, 0.0),
                                   m_eps(k, eps, theta, 1.0)]
                for gen in generators:
                    top = float(np.max(np.linalg.eigvals(gen.entries).real))
                    scale = max(opnorm2(gen.entries), 1.0)
                    worst_real = max(worst_real, top / scale)
                    for t in (0.25, 1.0):
                        worst = max(worst, opnorm2(expm2(gen, t).entries))
    metrics.append({"check": "expnorm", "value": worst})
    metrics.append({"check": "eig_max_real", "value": worst_real})
    passes["expnorm_pin"] = worst <= _EXPNORM_PIN
    passes["eig_real_nonpositive"] = worst_real <= 1e-9
    for theta in THETA_GRID:
        # The slow series below theta = 2 cannot be certified much past
        # 1e-6; elsewhere the evaluator is pushed to 1e-12 and ladder
        # rungs whose envelope sinks within a decade of that floor are
        # dropped, because there the certified truncation noise would be
        # measured instead of the expansion remainder.
        tolerance = 1e-6 if theta <= 2.0 else 1e-12
        spec = PotentialSpec(theta, series_cutoff=200_000_000,
                             tail_tolerance=tolerance)
        max_ratio = 0.0
        for k in (2.0 ** -i for i in range(6, 15)):
            predicted, exponent, has_log = asymptotic_prediction(k, spec)
            w = 2.0 * math.pi * k
            envelope = w ** exponent
            if has_log:
                envelope *= math.log(1.0 / w)
            if envelope < 10.0 * tolerance:
                continue
            gap = abs(alpha_hat(k, spec) - predicted)
            max_ratio = max(max_ratio, gap / envelope)
        metrics.append({"check": "dispersion", "theta": theta,
                        "max_ratio": max_ratio})
        passes[f"prediction@theta={theta:g}"] = max_ratio <= _PREDICTION_PIN
    grid = tuple(int(round(1.0 / eps)) for eps in ladder)
    return ConvergenceReport("bounds", 0.0, 0.0, grid, seed,
                             metrics, slopes, passes)


_CSV_BASE = ("experiment", "theta", "gamma", "n_sites", "eps", "time")


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _plain(value):
    if isinstance(value, str) or isinstance(value, bool):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def emit_report(report: ConvergenceReport, out_dir: str,
                profile_rows: Sequence | None = None) -> dict:
    """Write report.json and metrics.csv (plus optional profiles.csv).

    The JSON carries the whole report with sorted keys and a null wall
    time so identical runs serialize to identical bytes.  The CSV is a
    wide table: the identity columns, then the union of metric names in
    sorted order, with empty cells where a row lacks a field.  I/O
    failures re-raise with the destination attached.
    """
    out_dir = str(out_dir)
    payload = {
        "experiment": report.experiment,
        "theta": report.theta,
        "gamma": report.gamma,
        "grid": [int(n) for n in report.grid],
        "seed": report.seed,
        "metrics": [{k: _plain(v) for k, v in row.items()}
                    for row in report.metrics],
        "slopes": [{k: _plain(v) for k, v in row.items()}
                   for row in report.slopes],
        "passes": dict(report.passes),
        "wall_time": None,
    }
    paths = {"report": os.path.join(out_dir, "report.json"),
             "metrics": os.path.join(out_dir, "metrics.csv")}
    extra = sorted(set().union(
        *(row.keys() for row in report.metrics)) - set(_CSV_BASE)) \
        if report.metrics else []
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(paths["report"], "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        with open(paths["metrics"], "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(list(_CSV_BASE) + extra)
            for row in report.metrics:
                # Sweep reports carry per-row theta or gamma; those
                # override the report-level identity columns.
                line = [report.experiment,
                        _cell(row.get("theta", report.theta)),
                        _cell(row.get("gamma", report.gamma))]
                for key in ("n_sites", "eps", "time"):
                    line.append(_cell(row[key]) if key in row else "")
                for key in extra:
                    line.append(_cell(row[key]) if key in row else "")
                writer.writerow(line)
        if profile_rows is not None:
            paths["profiles"] = os.path.join(out_dir, "profiles.csv")
            with open(paths["profiles"], "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(["y", "p_bar", "l_bar"])
                for y, p, l in profile_rows:
                    writer.writerow([repr(float(y)), repr(float(p)),
                                     repr(float(l))])
    except OSError as exc:
        raise RuntimeError(f"cannot write report under {out_dir}: {exc}") \
            from exc
    return paths
