"""Command-line entry point.

Subcommands ``transfer``, ``sweep``, ``calibrate`` and ``circuit`` each read a
JSON config (``--config``) and write one data file (``--out``). Exit codes:
0 success, 1 runtime or integrator error, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (RECIPES, CalibrationTarget, synthesize_schedule)
from .circuit import run_circuit
from .dynamics import evolve_lindblad, static_trajectory
from .errors import ConfigError, DomainError, IntegratorError, UnsatisfiableCalibration
from .hamiltonians import DriveSchedule, build_chain_hamiltonian, effective_couplings
from .model import ChainSpec, NoiseSpec, initial_state
from .sweep import (DEFAULT_COARSE_DT, DEFAULT_GRID_POINTS, DEFAULT_T_MAX, best_point,
                    find_peak_fidelity, sweep_plane)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
TWO_PI = 2 * math.pi
CIRCUIT_UNITS = (
    "frequencies in config files are in MHz (angular value 2*pi*f rad/us); "
    "decoherence in kHz; schedule files store angular frequencies in rad/us; times in us"
)
CHAIN_UNITS = "energies in units of the inner coupling J; times in 1/J"


def fmt(x: float) -> str:
    return format(float(x), ".12g")


# -- config helpers ---------------------------------------------------------

def _get(cfg: dict, key: str, kind=float, path: str = "", default=...):
    name = f"{path}{key}"
    if not isinstance(cfg, dict):
        raise ConfigError(f"'{path.rstrip('.')}' must be an object", field=path.rstrip("."))
    if key not in cfg or cfg[key] is None:
        if default is ...:
            raise ConfigError(f"missing required field '{name}'", field=name)
        return default
    value = cfg[key]
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}' has invalid value {value!r}", field=name) from None


def _build(factory, field: str, **kwargs):
    try:
        return factory(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"invalid '{field}': {exc}", field=field) from None


def parse_chain(cfg: dict, path: str = "chain.", need_end_coupling: bool = True) -> ChainSpec:
    end = _get(cfg, "end_coupling", path=path, default=... if need_end_coupling else 1.0)
    return _build(
        ChainSpec, path.rstrip("."),
        n_sites=_get(cfg, "n_sites", int, path),
        end_coupling=end,
        potential=_get(cfg, "potential", path=path, default=0.0),
        inner_coupling=_get(cfg, "inner_coupling", path=path, default=1.0),
    )


def parse_noise(cfg, path: str = "noise.", rate_key: str = "rate", rate_factor: float = 1.0):
    cfg = cfg or {}
    return _build(
        NoiseSpec, path.rstrip("."),
        rate=_get(cfg, rate_key, path=path, default=0.0) * rate_factor,
        mode=_get(cfg, "mode", str, path, default="collective"),
        dephasing=_get(cfg, "dephasing", bool, path, default=True),
    )


def parse_range(cfg: dict, key: str):
    value = cfg.get(key)
    if (not isinstance(value, list) or len(value) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"field '{key}' must be [lo, hi, count]", field=key)
    lo, hi, count = value
    if int(count) != count or count < 1:
        raise ConfigError(f"field '{key}' count must be a positive integer", field=key)
    if count > 1 and not hi > lo:
        raise ConfigError(f"field '{key}' needs hi > lo", field=key)
    return float(lo), float(hi), int(count)


def parse_target(cfg: dict, path: str = "target.") -> CalibrationTarget:
    """Calibration target; frequencies in MHz, converted to rad/us."""
    recipe = _get(cfg, "recipe", str, path, default=None)
    scale = _get(cfg, "scale_mhz", path=path, default=None)
    scale = None if scale is None else TWO_PI * scale
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(
                f"field '{path}recipe' must be one of {sorted(RECIPES)}", field=f"{path}recipe"
            )
        ref = TWO_PI * _get(cfg, "reference_coupling_mhz", path=path)
        return _build(RECIPES[recipe], path.rstrip("."), scale=scale, **{
            "omega_mid" if recipe == "n9" else "omega": ref})
    couplings = cfg.get("bare_couplings_mhz")
    if not isinstance(couplings, list):
        raise ConfigError(f"field '{path}bare_couplings_mhz' must be a list",
                          field=f"{path}bare_couplings_mhz")
    return _build(
        CalibrationTarget, path.rstrip("."),
        n_sites=_get(cfg, "n_sites", int, path),
        edge_ratio=_get(cfg, "edge_ratio", path=path),
        potential_magnitude=TWO_PI * _get(cfg, "potential_magnitude_mhz", path=path),
        drive_base_frequency=TWO_PI * _get(cfg, "drive_base_frequency_mhz", path=path),
        drive_frequency_step=TWO_PI * _get(cfg, "drive_frequency_step_mhz", path=path),
        bare_couplings=[TWO_PI * float(c) for c in couplings],
        scale=scale,
    )


# -- output helpers ---------------------------------------------------------

def header_lines(command: str, config: dict, units: str):
    return [
        f"# qstchain {__version__} {command}",
        "# config: " + json.dumps(config, sort_keys=True),
        f"# units: {units}",
    ]


def write_trajectory_csv(path, result, header, fidelity_column=None):
    n = result.n_sites
    cols = ["t", "p_vac"] + [f"p_{j}" for j in range(1, n + 1)] + ["fidelity"]
    fid = result.fidelity_trace if fidelity_column is None else fidelity_column
    lines = list(header) + [",".join(cols)]
    for k, t in enumerate(result.times):
        vals = [t, *result.populations[k], fid[k]]
        lines.append(",".join(fmt(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def write_map_csv(path, fmap, header):
    lines = list(header) + ["g,lambda,fidelity,tau"]
    for row in fmap.rows():
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- commands ---------------------------------------------------------------

def cmd_transfer(config: dict, out, fmt_="csv", jobs=1) -> int:
    spec = parse_chain(config.get("chain"))
    noise = parse_noise(config.get("noise"))
    t_max = _get(config, "t_max", default=DEFAULT_T_MAX)
    coarse_dt = _get(config, "coarse_dt", default=DEFAULT_COARSE_DT)
    n_output = _get(config, "n_output", int, default=401)
    if n_output < 2:
        raise ConfigError("field 'n_output' must be >= 2", field="n_output")
    peak = find_peak_fidelity(spec, noise, t_max, coarse_dt)
    t_final = _get(config, "t_final", default=peak.tau)
    if t_final < 0:
        raise ConfigError("field 't_final' must be >= 0", field="t_final")

    h = build_chain_hamiltonian(spec)
    psi0 = initial_state(spec)
    if noise.is_closed:
        result = static_trajectory(h, psi0, np.linspace(0.0, t_final, n_output))
    else:
        dt = _get(config, "dt", default=0.005 / spec.inner_coupling)
        result = evolve_lindblad(h, psi0, noise, t_final, dt=dt, n_output=n_output)

    header = header_lines("transfer", config, CHAIN_UNITS)
    if fmt_ == "json":
        write_json(out, {
            "config": config, "tau": peak.tau, "fidelity": peak.fidelity,
            "window_limited": peak.window_limited,
            "times": result.times.tolist(), "populations": result.populations.tolist(),
            "fidelity_trace": result.fidelity_trace.tolist(),
        })
    else:
        write_trajectory_csv(out, result, header)
    note = " window_limited" if peak.window_limited else ""
    print(f"tau={fmt(peak.tau)} fidelity={fmt(peak.fidelity)}{note}")
    return EXIT_OK


def cmd_sweep(config: dict, out, fmt_="csv", jobs=1) -> int:
    chain = config.get("chain")
    template = parse_chain(chain, need_end_coupling=False)
    noise = parse_noise(config.get("noise"))
    g_range = parse_range(config, "g_range") if "g_range" in config else (
        0.15, 0.35, DEFAULT_GRID_POINTS)
    lam_range = parse_range(config, "lambda_range") if "lambda_range" in config else (
        0.0, 1.5, DEFAULT_GRID_POINTS)
    if g_range[0] <= 0:
        raise ConfigError("field 'g_range' must have lo > 0", field="g_range")
    if lam_range[0] < 0:
        raise ConfigError("field 'lambda_range' must have lo >= 0", field="lambda_range")
    t_max = _get(config, "t_max", default=DEFAULT_T_MAX)
    coarse_dt = _get(config, "coarse_dt", default=DEFAULT_COARSE_DT)
    fmap = sweep_plane(template, noise, g_range, lam_range, t_max, coarse_dt, jobs=jobs)
    if fmt_ == "json":
        payload = fmap.to_dict()
        payload["config"] = config
        write_json(out, payload)
    else:
        write_map_csv(out, fmap, header_lines("sweep", config, CHAIN_UNITS))
    best = best_point(fmap)
    print(f"best g={fmt(best.g)} lambda={fmt(best.potential)} "
          f"tau={fmt(best.tau)} fidelity={fmt(best.fidelity)}")
    return EXIT_OK


def schedule_payload(schedule: DriveSchedule, config: dict) -> dict:
    coup = effective_couplings(schedule)
    return {
        "config": config,
        "units": CIRCUIT_UNITS,
        "frequency_unit": "rad/us",
        "schedule": schedule.to_dict(),
        "effective_couplings": {"real": coup.real.tolist(), "imag": coup.imag.tolist(),
                                "abs": np.abs(coup).tolist()},
    }


def cmd_calibrate(config: dict, out, fmt_="json", jobs=1) -> int:
    target = parse_target(config.get("target", {}))
    schedule = synthesize_schedule(target)
    write_json(out, schedule_payload(schedule, config))
    coup = np.abs(effective_couplings(schedule))
    ratio = coup[0] / coup[1] if coup.size > 2 and coup[1] > 0 else float("nan")
    print(f"scale={fmt(schedule.metadata['scale'])} edge_ratio={fmt(ratio)} "
          f"amplitudes={','.join(fmt(f) for f in schedule.amplitudes)}")
    return EXIT_OK


def load_schedule(path: str) -> DriveSchedule:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schedule file {path}: {exc}", field="schedule") from None
    data = data.get("schedule", data)
    try:
        return DriveSchedule.from_dict(data)
    except KeyError as exc:
        raise ConfigError(f"schedule file {path} lacks field {exc}", field="schedule") from None
    except DomainError as exc:
        raise ConfigError(f"schedule file {path}: {exc}", field="schedule") from None


def cmd_circuit(config: dict, out, fmt_="csv", jobs=1) -> int:
    if "schedule" in config:
        schedule = load_schedule(_get(config, "schedule", str))
    elif "target" in config:
        schedule = synthesize_schedule(parse_target(config["target"]))
    else:
        raise ConfigError("config needs 'schedule' (path) or 'target'", field="schedule")
    noise = parse_noise(config.get("noise"), rate_key="rate_khz", rate_factor=TWO_PI * 1e-3)
    tau = _get(config, "tau_us", default=None)
    dt = _get(config, "dt_us", default=None)
    n_output = _get(config, "n_output", int, default=401)
    if tau is not None and tau < 0:
        raise ConfigError("field 'tau_us' must be >= 0", field="tau_us")
    result = run_circuit(schedule, noise, tau=tau, dt=dt, n_output=n_output)
    if fmt_ == "json":
        payload = schedule_payload(schedule, config)
        payload.update({
            "tau": result.tau, "fidelity": result.fidelity,
            "effective_fidelity": result.effective_fidelity, "rwa_gap": result.rwa_gap,
            "times": result.trajectory.times.tolist(),
            "populations": result.trajectory.populations.tolist(),
        })
        write_json(out, payload)
    else:
        write_trajectory_csv(out, result.trajectory,
                             header_lines("circuit", config, CIRCUIT_UNITS))
    print(f"tau={fmt(result.tau)} fidelity={fmt(result.fidelity)} "
          f"effective_fidelity={fmt(result.effective_fidelity)} rwa_gap={fmt(result.rwa_gap)}")
    return EXIT_OK


COMMANDS = {
    "transfer": cmd_transfer,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "circuit": cmd_circuit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qstchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output data file")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (sweep only)")
        p.add_argument("--format", choices=("csv", "json"),
                       default="json" if name == "calibrate" else "csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            config = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: malformed JSON ({exc})", field="<file>") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", field="--config") from None
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object", field="<root>")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1", field="--jobs")
        return COMMANDS[args.command](config, args.out, args.format, args.jobs)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsatisfiableCalibration as exc:
        print(f"calibration error [bond {exc.bond}]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (IntegratorError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
