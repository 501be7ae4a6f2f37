"""Command-line front end: resolve configuration, dispatch runs, emit files.

Configuration is one flat JSON object whose keys may be dotted for
grouping.  Resolution order is fixed: built-in defaults, then the
--config file, then each --set override in command-line order, then the
dedicated shorthand flags.  Every run writes the fully resolved
configuration next to its artifacts, and feeding that file back through
--config reproduces the run byte for byte.

Exit statuses: 0 success, 1 a declared check failed, 2 usage error,
3 numeric failure inside a library call (recorded in run.json).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import (
    ExperimentConfig,
    emit_report,
    make_initial_profiles,
    run_energy_pairing,
    run_fluc_convergence,
    run_mean_convergence,
    run_normal_mode_lln,
    run_wave_limit,
    verify_bounds,
)
from .microsim import (
    SimConfig,
    init_phononic,
    observable_fields,
    run,
    total_energy,
    write_snapshot,
)
from .potential import (
    PotentialSpec,
    alpha_hat,
    asymptotic_prediction,
    const_c1,
    const_c2,
)

__all__ = [
    "Invocation",
    "UsageError",
    "parse_invocation",
    "resolve_config",
    "dispatch",
    "main",
]

_PROFILE_CHOICES = ("gaussian_pair", "bump_pair", "momentum_only")

# Library failures that signal a numeric problem rather than bad usage.
# ArithmeticError covers overflow and invalid floating operations.
_MODULE_ERRORS = (ValueError, RuntimeError, ArithmeticError)


class UsageError(Exception):
    """Bad invocation content discovered after argument parsing."""


@dataclass(frozen=True)
class Invocation:
    """One parsed command line, before configuration resolution.

    ``overrides`` keeps the raw KEY=VALUE tokens in command-line order;
    ``shorthands`` keeps the dedicated flags that outrank them, as
    (config key, raw string) pairs.
    """

    command: str
    config_path: str | None
    overrides: tuple
    out_dir: str | None
    shorthands: tuple


def _as_float(value):
    if isinstance(value, bool):
        raise ValueError("expected a number")
    return float(value)


def _as_int(value):
    if isinstance(value, bool):
        raise ValueError("expected an integer")
    as_float = float(value)
    if as_float != int(as_float):
        raise ValueError("expected an integer")
    return int(as_float)


def _as_seed(value):
    seed = _as_int(value)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return seed


def _split_items(value):
    if isinstance(value, str):
        value = [item for item in value.split(",") if item]
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError("expected a nonempty comma list or JSON array")
    return value


def _as_int_list(value):
    return [_as_int(item) for item in _split_items(value)]


def _as_float_list(value):
    return [_as_float(item) for item in _split_items(value)]


def _as_power_list(value):
    powers = _as_int_list(value)
    if any(not 1 <= p <= 60 for p in powers):
        raise ValueError("dyadic powers must lie in 1..60")
    return powers


def _as_float_or_null(value):
    if value is None:
        return None
    return _as_float(value)


def _as_experiment(value):
    name = str(value)
    if name not in _RUNNERS:
        raise ValueError(f"expected one of {sorted(_RUNNERS)}")
    return name


def _as_profile_kind(value):
    name = str(value)
    if name not in _PROFILE_CHOICES:
        raise ValueError(f"expected one of {list(_PROFILE_CHOICES)}")
    return name


_SCHEMA = {
    "dispersion.cutoff": _as_int,
    "dispersion.k_powers": _as_power_list,
    "dispersion.tolerance": _as_float_or_null,
    "experiment": _as_experiment,
    "gamma": _as_float,
    "k_window": _as_int,
    "profile.amp_l": _as_float,
    "profile.amp_p": _as_float,
    "profile.kind": _as_profile_kind,
    "profile.width": _as_float,
    "replicas": _as_int,
    "seed": _as_seed,
    "sim.dt": _as_float_or_null,
    "sim.steps": _as_int,
    "sites": _as_int_list,
    "theta": _as_float,
    "times": _as_float_list,
}

# Default dyadic rungs stop where the certified series tolerance would
# swamp the remainder envelope; tighten dispersion.tolerance to go lower.
_DEFAULTS = {
    "dispersion.cutoff": 200_000_000,
    "dispersion.k_powers": [6, 8, 10, 12, 14],
    "dispersion.tolerance": None,
    "experiment": "wave",
    "gamma": 0.0,
    "k_window": 40,
    "profile.amp_l": 0.5,
    "profile.amp_p": 1.0,
    "profile.kind": "gaussian_pair",
    "profile.width": 0.05,
    "replicas": 8,
    "seed": 20260816,
    "sim.dt": None,
    "sim.steps": 2000,
    "sites": [512, 1024, 2048, 4096],
    "theta": 2.5,
    "times": [0.1],
}


def parse_invocation(argv) -> Invocation:
    """Split argv into command, flags, and raw override tokens.

    argparse handles token-level errors itself (unknown flags, missing
    command) and exits with status 2; value checking happens later in
    resolve_config so every path reports through one code.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="flat JSON configuration file")
    common.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--out", metavar="DIR",
                        help="artifact directory (else $OUTPUT_DIR, else "
                             "./out)")
    common.add_argument("--seed", metavar="U64",
                        help="base seed for every random stream")
    common.add_argument("--theta", metavar="X",
                        help="interaction decay exponent")
    common.add_argument("--gamma", metavar="X", help="noise strength")
    common.add_argument("--sites", metavar="N[,N...]",
                        help="lattice size ladder")
    common.add_argument("--replicas", metavar="N",
                        help="Monte Carlo replica count")

    parser = argparse.ArgumentParser(
        prog="lrchain",
        description="Long-range chain laboratory: exact constants, "
                    "dispersion asymptotics, chain simulation, and "
                    "convergence experiments.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
            ("constants", "print the expansion constants C1, C2 as CSV"),
            ("dispersion", "print dispersion values against their "
                           "two-term prediction as CSV"),
            ("simulate", "run the chain and write field snapshots"),
            ("converge", "run one convergence experiment and grade it"),
            ("verify-bounds", "sweep every tabulated envelope and pin"),
            ("report", "summarize report.json artifacts under --out")):
        commands.add_parser(name, parents=[common], help=blurb)

    space = parser.parse_args(list(argv))
    shorthands = tuple(
        (key, getattr(space, attr))
        for key, attr in (("seed", "seed"), ("theta", "theta"),
                          ("gamma", "gamma"), ("sites", "sites"),
                          ("replicas", "replicas"))
        if getattr(space, attr) is not None)
    return Invocation(command=space.command, config_path=space.config,
                      overrides=tuple(space.overrides), out_dir=space.out,
                      shorthands=shorthands)


def _coerce(key, value):
    try:
        return _SCHEMA[key](value)
    except (TypeError, ValueError) as err:
        raise UsageError(f"invalid value for {key!r}: {err}") from None


def _parse_raw(raw: str):
    # --set values read as JSON when possible so arrays and null work;
    # anything unparseable stays a bare string (unquoted names).
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def resolve_config(invocation: Invocation):
    """Merge defaults, config file, --set tokens, and shorthand flags.

    Returns the resolved mapping plus the recorded warnings.  Unknown
    keys raise UsageError from whichever layer supplied them.  The one
    value resolved late is the dispersion tolerance, whose default
    depends on theta; it is made concrete here so the emitted file is
    complete.
    """
    resolved = dict(_DEFAULTS)
    if invocation.config_path is not None:
        try:
            with open(invocation.config_path) as handle:
                loaded = json.load(handle)
        except OSError as err:
            raise UsageError(f"cannot read config file: {err}") from None
        except json.JSONDecodeError as err:
            raise UsageError(
                f"config file {invocation.config_path!r} is not valid "
                f"JSON: {err}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold one JSON object")
        for key in sorted(loaded):
            if key not in _SCHEMA:
                raise UsageError(f"unknown configuration key {key!r}")
            resolved[key] = _coerce(key, loaded[key])

    warnings = []
    seen = set()
    for token in invocation.overrides:
        key, eq, raw = token.partition("=")
        if not eq or not key:
            raise UsageError(f"malformed --set {token!r}; expected "
                             f"KEY=VALUE")
        if key not in _SCHEMA:
            raise UsageError(f"unknown configuration key {key!r}")
        if key in seen:
            warnings.append(f"--set {key} repeated; the last value wins")
        seen.add(key)
        resolved[key] = _coerce(key, _parse_raw(raw))

    for key, raw in invocation.shorthands:
        resolved[key] = _coerce(key, raw)

    if resolved["dispersion.tolerance"] is None:
        resolved["dispersion.tolerance"] = (
            1e-6 if resolved["theta"] <= 2.0 else 1e-12)
    return resolved, warnings


def _write_json(path, payload) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _number(value) -> str:
    # CSV cell: integral values print bare, everything else as repr.
    value = float(value)
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _cmd_constants(resolved, out_dir) -> int:
    theta = resolved["theta"]
    second = _number(const_c2(theta)) if theta > 2.0 else ""
    print("theta,c1,c2")
    print(f"{_number(theta)},{_number(const_c1(theta))},{second}")
    return 0


def _cmd_dispersion(resolved, out_dir) -> int:
    theta = resolved["theta"]
    spec = PotentialSpec(theta, resolved["dispersion.cutoff"],
                         resolved["dispersion.tolerance"])
    print("theta,k,alpha_hat,prediction,remainder_ratio")
    for power in resolved["dispersion.k_powers"]:
        k = 2.0 ** -power
        value = float(alpha_hat(k, spec))
        predicted, exponent, has_log = asymptotic_prediction(k, spec)
        predicted = float(predicted)
        w = 2.0 * math.pi * k
        envelope = w ** exponent * (math.log(1.0 / w) if has_log else 1.0)
        ratio = float(value - predicted) / envelope
        print(f"{_number(theta)},{k!r},{value!r},{predicted!r},{ratio!r}")
    return 0


def _profile_params(resolved):
    return {"width": resolved["profile.width"],
            "amp_p": resolved["profile.amp_p"],
            "amp_l": resolved["profile.amp_l"]}


def _cmd_simulate(resolved, out_dir) -> int:
    profiles = make_initial_profiles(resolved["profile.kind"],
                                     _profile_params(resolved))
    steps = resolved["sim.steps"]
    conservation = []
    for n_sites in resolved["sites"]:
        config = SimConfig(n_sites=n_sites, theta=resolved["theta"],
                           gamma=resolved["gamma"], dt=resolved["sim.dt"],
                           seed=resolved["seed"])
        state = init_phononic(profiles.pbar, profiles.lbar, config)
        energy_start = total_energy(state)
        momentum_start = float(np.sum(observable_fields(state)[0]))
        state = run(state, steps)
        energy_end = total_energy(state)
        momentum_end = float(np.sum(observable_fields(state)[0]))
        write_snapshot(out_dir / f"snapshot_N{n_sites}.csv", state)
        conservation.append({
            "n_sites": n_sites,
            "steps": steps,
            "time": state.time,
            "energy_drift": abs(energy_end - energy_start)
            / max(energy_start, 1e-300),
            "momentum_drift": abs(momentum_end - momentum_start)
            / max(abs(momentum_start), 1.0),
        })
        print(f"simulate: N={n_sites} advanced {steps} steps to "
              f"t={state.time:.6g}", file=sys.stderr)
    _write_json(out_dir / "conservation.json", conservation)
    return 0


def _experiment_config(resolved) -> ExperimentConfig:
    return ExperimentConfig(
        theta=resolved["theta"], gamma=resolved["gamma"],
        sizes=tuple(resolved["sites"]), replicas=resolved["replicas"],
        times=tuple(resolved["times"]),
        profile_kind=resolved["profile.kind"],
        profile_params=_profile_params(resolved),
        seed=resolved["seed"], k_window=resolved["k_window"])


def _cmd_converge(resolved, out_dir) -> int:
    runner = _RUNNERS[resolved["experiment"]]
    print(f"converge: experiment={resolved['experiment']} "
          f"theta={resolved['theta']} sites={resolved['sites']}",
          file=sys.stderr)
    report = runner(_experiment_config(resolved))
    emit_report(report, out_dir)
    failed = sorted(name for name, ok in report.passes.items() if not ok)
    if failed:
        print(f"converge: failed checks {failed}", file=sys.stderr)
    return 0 if report.all_passed else 1


def _cmd_verify_bounds(resolved, out_dir) -> int:
    print("verify-bounds: sweeping envelopes, norms, and dispersion pins",
          file=sys.stderr)
    report = verify_bounds()
    emit_report(report, out_dir)
    failed = sorted(name for name, ok in report.passes.items() if not ok)
    if failed:
        print(f"verify-bounds: failed checks {failed}", file=sys.stderr)
    return 0 if report.all_passed else 1


def _cmd_report(resolved, out_dir) -> int:
    found = sorted(out_dir.rglob("report.json"))
    rows = []
    all_ok = True
    for path in found:
        try:
            with open(path) as handle:
                payload = json.load(handle)
            passed = all(payload["passes"].values())
            row = (str(path.relative_to(out_dir)), payload["experiment"],
                   payload["theta"], payload["gamma"], passed)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as err:
            raise RuntimeError(f"unreadable report {path}: {err}") from None
        rows.append(row)
        all_ok = all_ok and passed
    with open(out_dir / "summary.csv", "w") as handle:
        handle.write("path,experiment,theta,gamma,all_passed\n")
        for path, experiment, theta, gamma, passed in rows:
            handle.write(f"{path},{experiment},{_number(theta)},"
                         f"{_number(gamma)},{str(passed).lower()}\n")
    if not rows:
        print(f"report: no report.json artifacts under {out_dir}",
              file=sys.stderr)
    else:
        print(f"report: {len(rows)} artifact(s), "
              f"{'all passed' if all_ok else 'FAILURES present'}",
              file=sys.stderr)
    return 0 if all_ok else 1


_RUNNERS = {
    "mean": run_mean_convergence,
    "fluc": run_fluc_convergence,
    "wave": run_wave_limit,
    "energy": run_energy_pairing,
    "lln": run_normal_mode_lln,
}

_COMMANDS = {
    "constants": _cmd_constants,
    "dispersion": _cmd_dispersion,
    "simulate": _cmd_simulate,
    "converge": _cmd_converge,
    "verify-bounds": _cmd_verify_bounds,
    "report": _cmd_report,
}


def dispatch(invocation: Invocation) -> int:
    """Resolve the configuration, run the command, record the outcome.

    The resolved configuration is written before the command starts so
    a crashed run still leaves its exact inputs behind; run.json closes
    the record with the status and any captured numeric error.
    """
    resolved, warnings = resolve_config(invocation)
    out_dir = Path(invocation.out_dir or os.environ.get("OUTPUT_DIR")
                   or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "resolved_config.json", resolved)
    for line in warnings:
        print(f"warning: {line}", file=sys.stderr)
    record = {"command": invocation.command, "warnings": warnings,
              "status": 0, "error": None}
    try:
        status = _COMMANDS[invocation.command](resolved, out_dir)
    except _MODULE_ERRORS as err:
        record["status"] = 3
        record["error"] = {"type": type(err).__name__, "message": str(err)}
        _write_json(out_dir / "run.json", record)
        print(f"error: {err}", file=sys.stderr)
        return 3
    record["status"] = status
    _write_json(out_dir / "run.json", record)
    return status


def main(argv=None) -> int:
    try:
        invocation = parse_invocation(
            sys.argv[1:] if argv is None else argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else 2
    try:
        return dispatch(invocation)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
