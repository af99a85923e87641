"""Batch entry point: config ingestion, subcommand dispatch, deterministic
machine-readable reports.

Subcommands cover the library surface end to end: closed-form equilibria
(``pair``, ``polygon``), trajectory simulation (``simulate``), the
six-vortex array solve (``array``), the plasma ground state and its mode
spectra (``plasma``, ``nondegeneracy``), the ansatz error field / scaling
law (``ansatz-error``), the reduced pair balance (``reduced-root``) and a
parameter ``sweep`` fanned out over a worker pool.  Exit codes: 0 success,
2 validation error, 3 solver non-convergence.

Reports are JSON with a fixed field order and 9-significant-digit number
formatting, so identical inputs produce byte-identical output.  A config
file is a line-oriented ``key = value`` TOML subset (numbers, quoted
strings, flat arrays of numbers); command-line flags override file values.
"""

import argparse
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import ansatz, equilibria, linop, plasma, pointvortex
from .constants import FracParams, interaction_constant

__all__ = ["main", "run", "load_config", "dumps_canonical", "ConfigError"]


class ConfigError(ValueError):
    """Malformed config file or parameter set."""


# ---------------------------------------------------------------------------
# canonical JSON


def _fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if np.isnan(v) or np.isinf(v):
        return "null"
    return f"{v:.9g}"


def dumps_canonical(obj, indent=0) -> str:
    """Serialize to JSON with fixed field order and %.9g float formatting."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, (bool, int, float, np.integer, np.floating)):
        return _fmt_number(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{pad}  "{k}": {dumps_canonical(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (bool, int, float, np.integer, np.floating)) for v in seq):
            return "[" + ", ".join(_fmt_number(v) for v in seq) + "]"
        inner = ",\n".join(f"{pad}  {dumps_canonical(v, indent + 1)}" for v in seq)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


# ---------------------------------------------------------------------------
# config files


def _parse_value(text, lineno):
    text = text.strip()
    if not text:
        raise ConfigError(f"line {lineno}: empty value")
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated array")
        body = text[1:-1].strip()
        if not body:
            return []
        out = []
        for piece in body.split(","):
            try:
                out.append(float(piece))
            except ValueError:
                raise ConfigError(f"line {lineno}: non-numeric array element {piece.strip()!r}")
        return out
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r}")


def load_config(path) -> dict:
    """Parse a flat ``key = value`` config file.

    Supports numbers, quoted strings and one-level arrays of numbers; blank
    lines and ``#`` comments are ignored.  Duplicate keys and malformed
    lines raise ``ConfigError`` with the line number.
    """
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, rhs = line.partition("=")
            key = key.strip()
            if not key.replace("_", "").replace("-", "").isalnum():
                raise ConfigError(f"line {lineno}: malformed key {key!r}")
            key = key.replace("-", "_")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _parse_value(rhs, lineno)
    return values


# ---------------------------------------------------------------------------
# parameter schemas: (name, kind, default); default REQUIRED means mandatory

REQUIRED = object()

_SCHEMAS = {
    "simulate": [
        ("preset", str, "pair"),
        ("s", float, 0.5),
        ("d", float, 1.0),
        ("m", float, 1.0),
        ("k", int, 3),
        ("rho", float, 1.0),
        ("T", float, 10.0),
        ("tol", float, 1e-10),
        ("snapshots", int, 201),
    ],
    "pair": [("s", float, REQUIRED), ("d", float, REQUIRED), ("m", float, REQUIRED)],
    "polygon": [
        ("s", float, REQUIRED),
        ("k", int, REQUIRED),
        ("rho", float, REQUIRED),
        ("m", float, REQUIRED),
    ],
    "array": [
        ("s", float, 0.5),
        ("noise", float, 0.05),
        ("seed", int, 0),
        ("gauge_x", float, 0.368),
        ("tol", float, 1e-9),
        ("max_iter", int, 100),
    ],
    "plasma": [
        ("s", float, REQUIRED),
        ("gamma", float, REQUIRED),
        ("n_cells", int, 400),
        ("rmax", float, 0.0),  # 0 = automatic
    ],
    "nondegeneracy": [
        ("s", float, REQUIRED),
        ("gamma", float, REQUIRED),
        ("n_cells", int, 400),
        ("max_mode", int, 6),
    ],
    "ansatz-error": [
        ("s", float, REQUIRED),
        ("gamma", float, REQUIRED),
        ("d", float, 1.0),
        ("c", float, None),
        ("m", float, None),
        ("eps", "floats", REQUIRED),
        ("n_cells", int, 400),
        ("ngrid", int, 201),
    ],
    "reduced-root": [
        ("s", float, REQUIRED),
        ("c", float, REQUIRED),
        ("m", float, REQUIRED),
        ("d", float, None),
    ],
    "sweep": [
        ("task", str, REQUIRED),
        ("sweep_param", str, REQUIRED),
        ("sweep_values", "floats", REQUIRED),
    ],
}

_SOLVER_FAILURES = (equilibria.NewtonFailure, plasma.PlasmaSolveError)


def _coerce(name, kind, value):
    try:
        if kind is float:
            return float(value)
        if kind is int:
            iv = int(float(value))
            if float(iv) != float(value):
                raise ValueError
            return iv
        if kind is str:
            return str(value)
        if kind == "floats":
            if isinstance(value, str):
                value = [p for p in value.split(",") if p.strip()]
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r}: cannot interpret {value!r}")
    raise ConfigError(f"unknown parameter kind for {name!r}")


def _resolve_params(command, cli_values, config_values, allow_extra=False):
    schema = _SCHEMAS[command]
    known = {name for name, _, _ in schema}
    base_keys = {"config", "out", "csv", "jobs"}
    if not allow_extra:
        for key in config_values:
            if key not in known and key not in base_keys:
                raise ConfigError(f"unknown config key {key!r} for command {command!r}")
    resolved = {}
    for name, kind, default in schema:
        value = cli_values.get(name)
        if value is None:
            value = config_values.get(name)
        if value is None:
            if default is REQUIRED:
                raise ConfigError(f"missing required parameter {name!r}")
            value = default
        resolved[name] = None if value is None else _coerce(name, kind, value)
    return resolved


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (report_dict, csv_text_or_None)


def _handle_simulate(p):
    if p["preset"] == "pair":
        sol = equilibria.vortex_pair(p["d"], p["m"], p["s"])
    elif p["preset"] == "polygon":
        sol = equilibria.rotating_polygon(p["k"], p["rho"], p["m"], p["s"])
    else:
        raise ConfigError(f"unknown preset {p['preset']!r}")
    traj = pointvortex.integrate(sol.config, p["T"], p["tol"], n_snapshots=p["snapshots"])
    drift, rate = pointvortex.measure_motion(traj)
    report = {
        "command": "simulate",
        "params": p,
        "drift_velocity": [float(drift[0]), float(drift[1])],
        "rotation_rate": rate,
        "invariant_drift": traj.invariant_drift,
        "collided": traj.collided,
    }
    buf = io.StringIO()
    pointvortex.trajectory_to_csv(traj, buf)
    return report, buf.getvalue()


def _handle_pair(p):
    sol = equilibria.vortex_pair(p["d"], p["m"], p["s"])
    report = {"command": "pair", "params": p}
    report.update(equilibria.solution_to_dict(sol))
    report["c"] = float(sol.motion_value)
    return report, None


def _handle_polygon(p):
    sol = equilibria.rotating_polygon(p["k"], p["rho"], p["m"], p["s"])
    report = {"command": "polygon", "params": p}
    report.update(equilibria.solution_to_dict(sol))
    report["alpha"] = float(sol.motion_value)
    return report, None


def _handle_array(p):
    seed = equilibria.six_vortex_seed(p["s"])
    rng = np.random.default_rng(p["seed"])
    perturbed = replace(
        seed,
        pair_points=seed.pair_points + rng.uniform(-p["noise"], p["noise"], seed.pair_points.shape),
        axis_points=seed.axis_points + rng.uniform(-p["noise"], p["noise"], seed.axis_points.shape),
    )
    sol = equilibria.solve_symmetric_array(
        perturbed, gauge_value=p["gauge_x"], tol=p["tol"], max_iter=p["max_iter"]
    )
    equilibria.nondegeneracy_spectrum(sol)
    report = {"command": "array", "params": p}
    report.update(equilibria.solution_to_dict(sol))
    return report, None


def _profile_for(p):
    params = FracParams(s=p["s"], gamma=p["gamma"])
    rmax = p.get("rmax") or None
    spec = plasma.GridSpec(n_cells=p["n_cells"], r_max=rmax if rmax else None)
    return plasma.solve_ground_state(params, spec)


def _handle_plasma(p):
    profile = _profile_for(p)
    diag = plasma.diagnostics(profile)
    report = {"command": "plasma", "params": p}
    report.update(diag.to_dict())
    report["W0"] = float(profile.values[0])
    report["residual_norm"] = profile.residual_norm
    report["r_max"] = profile.r_max
    buf = io.StringIO()
    plasma.profile_to_csv(profile, buf)
    return report, buf.getvalue()


def _handle_nondegeneracy(p):
    profile = _profile_for(p)
    reports = linop.nondegeneracy_report(profile, p["max_mode"])
    modes = []
    csv_lines = ["mode,eigenvalue"]
    for rep in reports:
        entry = {
            "mode": rep.mode,
            "distance_to_one": rep.distance_to_one,
            "unexpected_kernel": rep.unexpected_kernel,
        }
        if rep.eigvec_correlation is not None:
            entry["eigvec_correlation"] = rep.eigvec_correlation
        modes.append(entry)
        for ev in rep.eigenvalues:
            csv_lines.append(f"{rep.mode},{ev:.12g}")
    report = {"command": "nondegeneracy", "params": p, "modes": modes}
    return report, "\n".join(csv_lines) + "\n"


def _handle_ansatz_error(p):
    eps = p["eps"]
    profile = _profile_for(p)
    m_eff = profile.Mgamma if p["m"] is None else p["m"]
    if len(eps) == 1:
        c = p["c"]
        if c is None:
            c = -equilibria.pair_speed(p["d"], m_eff, p["s"])
        params = ansatz.pair_ansatz(profile, p["d"], m_eff, c, eps[0])
        field = ansatz.error_field(params, ngrid=p["ngrid"])
        report = {
            "command": "ansatz-error",
            "params": p,
            "c": c,
            "mu": float(params.mu[0]),
            "sup_error": field.sup,
        }
        buf = io.StringIO()
        ansatz.error_field_to_csv(field, buf)
        return report, buf.getvalue()
    study = ansatz.scaling_study(profile, eps, d=p["d"], c=p["c"], m=p["m"], ngrid=p["ngrid"])
    report = {"command": "ansatz-error", "params": p}
    report.update(study.to_dict())
    return report, None


def _handle_reduced_root(p):
    c1 = ansatz.reduced_speed_coefficient(p["c"], p["m"], p["s"])
    root = ansatz.reduced_root(p["c"], p["m"], p["s"])
    report = {
        "command": "reduced-root",
        "params": p,
        "c1": c1,
        "root": root,
        "has_root": root is not None,
    }
    if p["d"] is not None:
        report["value_at_d"] = ansatz.reduced_function(p["d"], p["c"], p["m"], p["s"])
    return report, None


_HANDLERS = {
    "simulate": _handle_simulate,
    "pair": _handle_pair,
    "polygon": _handle_polygon,
    "array": _handle_array,
    "plasma": _handle_plasma,
    "nondegeneracy": _handle_nondegeneracy,
    "ansatz-error": _handle_ansatz_error,
    "reduced-root": _handle_reduced_root,
}


def _sweep_worker(args):
    task, params = args
    try:
        report, _ = _HANDLERS[task](params)
        return 0, report
    except (ConfigError, ValueError) as exc:
        return 2, {"error": str(exc), "params": params}
    except _SOLVER_FAILURES as exc:
        return 3, {"error": str(exc), "params": params}


def _handle_sweep(p, config_values, jobs):
    task = p["task"]
    if task not in _HANDLERS:
        raise ConfigError(f"sweep task {task!r} is not a runnable subcommand")
    param = p["sweep_param"].replace("-", "_")
    base = {
        k: v
        for k, v in config_values.items()
        if k not in {"task", "sweep_param", "sweep_values", "jobs"}
    }
    runs = []
    for v in p["sweep_values"]:
        merged = dict(base)
        merged[param] = v
        runs.append((task, _resolve_params(task, {}, merged)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, runs))
    else:
        results = [_sweep_worker(r) for r in runs]
    worst = max((code for code, _ in results), default=0)
    report = {
        "command": "sweep",
        "params": p,
        "jobs": jobs,
        "runs": [rep for _, rep in results],
        "exit_codes": [code for code, _ in results],
    }
    return report, worst


# ---------------------------------------------------------------------------
# driver


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sqglab", description="fractional point-vortex laboratory"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _SCHEMAS.items():
        sp = sub.add_parser(command)
        sp.add_argument("--config", default=None)
        sp.add_argument("--out", default=None)
        if command in {"simulate", "plasma", "nondegeneracy", "ansatz-error"}:
            sp.add_argument("--csv", default=None)
        if command == "sweep":
            sp.add_argument("--jobs", type=int, default=None)
        for name, kind, _ in schema:
            flag = "--" + name.replace("_", "-")
            if kind in (float, int):
                sp.add_argument(flag, type=str, default=None, dest=name)
            else:
                sp.add_argument(flag, type=str, default=None, dest=name)
    return parser


def run(argv) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    command = ns.command
    try:
        config_values = load_config(ns.config) if ns.config else {}
        cli_values = {
            name: getattr(ns, name)
            for name, _, _ in _SCHEMAS[command]
            if getattr(ns, name, None) is not None
        }
        params = _resolve_params(
            command, cli_values, config_values, allow_extra=(command == "sweep")
        )
        if command == "sweep":
            jobs = ns.jobs
            if jobs is None:
                jobs = int(config_values.get("jobs", 0)) or int(
                    os.environ.get("SQGLAB_JOBS", "1")
                )
            report, code = _handle_sweep(params, config_values, max(1, jobs))
            csv_text = None
        else:
            report, csv_text = _HANDLERS[command](params)
            code = 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _SOLVER_FAILURES as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3

    text = dumps_canonical(report) + "\n"
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    csv_path = getattr(ns, "csv", None)
    if csv_path and csv_text is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))
