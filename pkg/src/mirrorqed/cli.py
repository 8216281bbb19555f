"""Command-line scenario runner emitting machine-readable CSV tables.

Every subcommand writes one table per file: a JSON metadata block in `#`
comment lines (the full resolved configuration, so any table is reproducible
from its own header) followed by a CSV header and rows formatted with 17
significant digits.  Exit codes: 0 success, 1 configuration error, 2
validation FAIL in `compare`.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .analytic import (
    NoLongtimeSolution,
    Xi0Diverges,
    dressed_params,
    excitation_curve,
    excitation_probability_exact,
    excitation_probability_longtime,
    excitation_probability_markovian,
    solve_longtime,
)
from .core import Direction, SystemParams
from .trajectory import TrajectoryConfig, ensemble_average
from .wavepacket import spatial_profile, spectrum


class ConfigError(ValueError):
    """Invalid command-line configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise ConfigError(message)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _json_safe(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_table(out, metadata: dict, header: list[str], columns: list[np.ndarray]) -> None:
    lines = ["# " + json.dumps(_json_safe(metadata), sort_keys=True)]
    lines.append(",".join(header))
    rows = np.broadcast_arrays(*columns)
    for i in range(len(rows[0])):
        lines.append(",".join(_fmt(col[i]) for col in rows))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, required=True, help="round-trip time (1/Gamma)")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--omega-e", type=float, help="transition frequency (Gamma)")
    group.add_argument("--phase", type=float, help="round-trip phase omega_e * tau")
    parser.add_argument("--rm", type=float, required=True, help="mirror reflection coefficient")
    parser.add_argument(
        "--rm-phase", type=float, default=0.0, help="extra phase turning rm complex"
    )
    parser.add_argument("--out", type=str, default=None, help="output CSV path (default stdout)")


def _params_from_args(args) -> SystemParams:
    r_m = args.rm * np.exp(1j * args.rm_phase)
    try:
        if args.phase is not None:
            return SystemParams.from_round_trip_phase(tau=args.tau, phase=args.phase, r_m=r_m)
        return SystemParams(omega_e=args.omega_e, tau=args.tau, r_m=r_m)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _params_meta(params: SystemParams) -> dict:
    return {
        "omega_e": params.omega_e,
        "tau": params.tau,
        "r_m": params.r_m,
        "t_m": params.t_m,
        "gamma": params.gamma,
        "round_trip_phase": params.round_trip_phase,
    }


def _time_grid(args) -> np.ndarray:
    if args.tmax <= 0:
        raise ConfigError(f"--tmax must be positive, got {args.tmax}")
    if args.grid < 2:
        raise ConfigError(f"--grid must be at least 2 points, got {args.grid}")
    return np.linspace(0.0, args.tmax, args.grid)


def run_excitation(args) -> int:
    """Exact, long-time (when it exists), and Markovian excitation curves."""
    params = _params_from_args(args)
    times = _time_grid(args)
    curve = excitation_curve(params, times)
    meta = {
        "scenario": "excitation",
        "version": __version__,
        "params": _params_meta(params),
        "grid": {"tmax": args.tmax, "points": args.grid},
    }
    header = ["t", "P_exact"]
    columns = [times, curve.probabilities]
    try:
        constants = solve_longtime(params)
        header.append("P_longtime")
        columns.append(excitation_probability_longtime(params, times, constants))
        meta["longtime"] = {
            "xi": constants.xi,
            "xi0": constants.xi0,
            "gamma_eff": params.gamma - 2.0 * constants.xi.real,
        }
    except (NoLongtimeSolution, Xi0Diverges) as err:
        meta["longtime"] = {"unavailable": f"{type(err).__name__}: {err}"}
    header.append("P_markovian")
    columns.append(excitation_probability_markovian(params, times))
    _write_table(args.out, meta, header, columns)
    return 0


def run_markovian(args) -> int:
    """Markovian excitation curve with the dressed parameters in the metadata."""
    params = _params_from_args(args)
    times = _time_grid(args)
    dressed = dressed_params(params)
    meta = {
        "scenario": "markovian",
        "version": __version__,
        "params": _params_meta(params),
        "grid": {"tmax": args.tmax, "points": args.grid},
        "dressed": asdict(dressed),
    }
    _write_table(
        args.out,
        meta,
        ["t", "P_markovian"],
        [times, excitation_probability_markovian(params, times)],
    )
    return 0


def run_dressed(args) -> int:
    """Dressed frequency shift and decay rate swept over the round-trip phase."""
    if args.phase_points < 2:
        raise ConfigError(f"--phase-points must be at least 2, got {args.phase_points}")
    if args.phase_min < 0:
        raise ConfigError(f"--phase-min must be non-negative, got {args.phase_min}")
    phases = np.linspace(args.phase_min, args.phase_max, args.phase_points)
    if not np.all(np.diff(phases) > 0):
        raise ConfigError("phase grid must be strictly increasing")
    r_m = args.rm * np.exp(1j * args.rm_phase)
    deltas, gammas = [], []
    for phase in phases:
        try:
            params = SystemParams(omega_e=float(phase), tau=1.0, r_m=r_m)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        dressed = dressed_params(params)
        deltas.append(dressed.delta_eff)
        gammas.append(dressed.gamma_eff)
    meta = {
        "scenario": "dressed",
        "version": __version__,
        "r_m": r_m,
        "grid": {
            "phase_min": args.phase_min,
            "phase_max": args.phase_max,
            "points": args.phase_points,
        },
    }
    _write_table(
        args.out,
        meta,
        ["phase", "delta_eff", "gamma_eff"],
        [phases, np.array(deltas), np.array(gammas)],
    )
    return 0


def run_wavepacket(args) -> int:
    """Spatial photon density snapshots at the requested times."""
    params = _params_from_args(args)
    try:
        snapshot_times = sorted(float(v) for v in args.times.split(","))
    except ValueError:
        raise ConfigError(f"--times must be a comma list of floats, got {args.times!r}") from None
    if not snapshot_times or snapshot_times[0] <= 0:
        raise ConfigError("snapshot times must be positive")
    if args.xpoints < 2:
        raise ConfigError(f"--xpoints must be at least 2, got {args.xpoints}")
    xmin = args.xmin if args.xmin is not None else -(snapshot_times[-1] + 1.0)
    if xmin >= args.xmax:
        raise ConfigError(f"--xmin must be below --xmax, got [{xmin}, {args.xmax}]")
    positions = np.linspace(xmin, args.xmax, args.xpoints)
    header = ["x"]
    columns = [positions]
    for t_snap in snapshot_times:
        profile = spatial_profile(params, t_snap, positions, Direction.LEFT)
        density = profile.density
        if args.peak_normalize and density.max() > 0:
            density = density / density.max()
        header.append(f"density_t{t_snap:g}")
        columns.append(density)
    meta = {
        "scenario": "wavepacket",
        "version": __version__,
        "params": _params_meta(params),
        "grid": {"xmin": xmin, "xmax": args.xmax, "points": args.xpoints},
        "times": snapshot_times,
        "direction": "left",
        "peak_normalize": bool(args.peak_normalize),
    }
    _write_table(args.out, meta, header, columns)
    return 0


def run_spectrum(args) -> int:
    """Spectral probability density of the photon emitted to the left."""
    params = _params_from_args(args)
    try:
        result = spectrum(
            params,
            t_final=args.t_final,
            sample_count=args.samples,
            allow_undecayed=args.allow_undecayed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    meta = {
        "scenario": "spectrum",
        "version": __version__,
        "params": _params_meta(params),
        "grid": {
            "t_final": result.t_final,
            "sample_count": result.sample_count,
            "spacing": result.spacing,
        },
        "omega_e": result.omega_e,
    }
    _write_table(
        args.out, meta, ["omega", "spectral_density"], [result.frequencies, result.spectral_density]
    )
    return 0


def _trajectory_config(args, params: SystemParams) -> TrajectoryConfig:
    try:
        return TrajectoryConfig.from_params(
            params,
            boxes=args.boxes,
            n_trajectories=args.trajectories,
            t_max=args.tmax,
            master_seed=args.seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _trajectory_meta(config: TrajectoryConfig) -> dict:
    return {
        "boxes": config.boxes,
        "dt": config.dt,
        "v_right": config.v_right,
        "v_left": config.v_left,
        "r_m": config.r_m,
        "t_m": config.t_m,
        "omega_e": config.omega_e,
        "n_trajectories": config.n_trajectories,
        "t_max": config.t_max,
        "master_seed": config.master_seed,
    }


def run_trajectory_scenario(args) -> int:
    """Ensemble-averaged quantum-trajectory excitation probability."""
    params = _params_from_args(args)
    config = _trajectory_config(args, params)
    result = ensemble_average(config)
    meta = {
        "scenario": "trajectory",
        "version": __version__,
        "params": _params_meta(params),
        "trajectory": _trajectory_meta(config),
    }
    _write_table(
        args.out,
        meta,
        ["t", "P_trajectory_mean", "stderr"],
        [result.times, result.mean, result.stderr],
    )
    return 0


def run_compare(args) -> int:
    """Exact solution vs trajectory ensemble on the same grid; PASS/FAIL summary."""
    params = _params_from_args(args)
    config = _trajectory_config(args, params)
    result = ensemble_average(config)
    exact = excitation_probability_exact(params, result.times)
    deviation = float(np.max(np.abs(result.mean - exact)))
    passed = deviation <= args.tolerance
    meta = {
        "scenario": "compare",
        "version": __version__,
        "params": _params_meta(params),
        "trajectory": _trajectory_meta(config),
        "summary": {
            "max_abs_deviation": deviation,
            "tolerance": args.tolerance,
            "result": "PASS" if passed else "FAIL",
        },
    }
    _write_table(
        args.out,
        meta,
        ["t", "P_exact", "P_trajectory_mean", "stderr"],
        [result.times, exact, result.mean, result.stderr],
    )
    print(f"{'PASS' if passed else 'FAIL'}: max |P_trajectory - P_exact| = "
          f"{deviation:.6f} (tolerance {args.tolerance})")
    return 0 if passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mirrorqed",
        description="Emitter-in-front-of-a-mirror dynamics, wave packets, and validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exc = sub.add_parser("excitation", help="exact / long-time / Markovian P_e(t)")
    _add_param_flags(p_exc)
    p_exc.add_argument("--tmax", type=float, default=10.0)
    p_exc.add_argument("--grid", type=int, default=2001)
    p_exc.set_defaults(func=run_excitation)

    p_mar = sub.add_parser("markovian", help="Markovian P_e(t) and dressed parameters")
    _add_param_flags(p_mar)
    p_mar.add_argument("--tmax", type=float, default=10.0)
    p_mar.add_argument("--grid", type=int, default=2001)
    p_mar.set_defaults(func=run_markovian)

    p_dre = sub.add_parser("dressed", help="dressed shift/rate vs round-trip phase")
    p_dre.add_argument("--rm", type=float, required=True)
    p_dre.add_argument("--rm-phase", type=float, default=0.0)
    p_dre.add_argument("--phase-min", type=float, default=0.0)
    p_dre.add_argument("--phase-max", type=float, default=4.0 * np.pi)
    p_dre.add_argument("--phase-points", type=int, default=401)
    p_dre.add_argument("--out", type=str, default=None)
    p_dre.set_defaults(func=run_dressed)

    p_wav = sub.add_parser("wavepacket", help="spatial photon density snapshots")
    _add_param_flags(p_wav)
    p_wav.add_argument("--times", type=str, default="2,5,10", help="comma list of snapshot times")
    p_wav.add_argument("--xmin", type=float, default=None)
    p_wav.add_argument("--xmax", type=float, default=0.0)
    p_wav.add_argument("--xpoints", type=int, default=4001)
    p_wav.add_argument("--peak-normalize", action="store_true")
    p_wav.set_defaults(func=run_wavepacket)

    p_spe = sub.add_parser("spectrum", help="spectral density of the emitted photon")
    _add_param_flags(p_spe)
    p_spe.add_argument("--t-final", type=float, default=40.0)
    p_spe.add_argument("--samples", type=int, default=2**14)
    p_spe.add_argument("--allow-undecayed", action="store_true")
    p_spe.set_defaults(func=run_spectrum)

    p_tra = sub.add_parser("trajectory", help="quantum-trajectory ensemble average")
    _add_param_flags(p_tra)
    p_tra.add_argument("--tmax", type=float, default=10.0)
    p_tra.add_argument("--boxes", type=int, default=25)
    p_tra.add_argument("--trajectories", type=int, default=5000)
    p_tra.add_argument("--seed", type=int, default=0)
    p_tra.set_defaults(func=run_trajectory_scenario)

    p_cmp = sub.add_parser("compare", help="trajectory ensemble vs exact solution")
    _add_param_flags(p_cmp)
    p_cmp.add_argument("--tmax", type=float, default=10.0)
    p_cmp.add_argument("--boxes", type=int, default=25)
    p_cmp.add_argument("--trajectories", type=int, default=5000)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--tolerance", type=float, default=0.03)
    p_cmp.set_defaults(func=run_compare)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
