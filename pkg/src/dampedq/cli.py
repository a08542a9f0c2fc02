"""Command-line front end.

Every command builds a list of flat records plus a list of CheckReports and
hands both to a single writer. Output is CSV (records only, 17 significant
digits, LF endings) or JSON (records, checks and parameters). The exit code
is 0 when every check passes, 1 otherwise; 2, 3 and 4 flag usage, domain and
I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from dampedq.core import (
    CheckReport,
    DomainError,
    GridError,
    OscillatorParams,
    TruncationError,
    auto_grid,
    make_params,
    norm2,
)
from dampedq.dynamics import (
    PhasePoint,
    classical_closed_form,
    classical_rk4,
    coherent_means,
    critical_time,
    evolve_bck,
    evolve_first_order,
    fock_sample,
    mechanical_energy,
    radius_check,
    squeezed_means,
    squeezed_variance_x,
    uncertainty_product,
)
from dampedq.equivalence import (
    asymptotic_checks,
    asymptotic_convergence,
    default_suite,
    run_checks,
    run_suite,
    windowed_residual,
)
from dampedq.operators import apply_hamiltonian_bck_grid, expectation
from dampedq.states import CoherentSpec, coherent_state, pseudostationary_state, squeezed_state

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3, 4
OUTPUT_DIR_ENV = "DAMPEDQ_OUTPUT_DIR"

COMMANDS = ("states", "evolve", "coherent", "squeezed", "uncertainty", "classical", "equivalence", "asymptotics")
DEFAULTS: dict[str, Any] = {
    "omega": 1.0,
    "alpha": 0.6,
    "trunc": 128,
    "format": "csv",
    "z": "1",
    "xi": 0.5,
    "x0": 1.0,
    "y0": 0.0,
    "dt": 1e-3,
    "jobs": 1,
}
DEFAULT_TIMES = {
    "states": "0",
    "evolve": "0:1:5",
    "coherent": "0:5:51",
    "squeezed": "0:2:21",
    "uncertainty": "0:2:101",
    "classical": "0:5:51",
}
DEFAULT_N = {"states": 0, "evolve": 3, "equivalence": 10, "asymptotics": 64}
CONFIG_KEYS = ("omega", "alpha", "n", "t", "z", "xi", "x0", "y0", "dt", "trunc", "format", "output", "jobs")


class ConfigError(Exception):
    """Malformed or unreadable configuration file."""


@dataclass
class RunConfig:
    command: str
    params: OscillatorParams
    n: int
    times: tuple[float, ...]
    z: complex
    xi: float
    x0: float
    y0: float
    dt: float
    trunc: int
    format: str
    output: Path | None
    jobs: int


@dataclass
class Result:
    records: list[dict[str, Any]] = field(default_factory=list)
    checks: list[CheckReport] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------- parsing


def parse_times(text: str) -> tuple[float, ...]:
    """``a:b:count`` for an inclusive linspace or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"time range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("time range needs at least one point")
        return tuple(float(v) for v in np.linspace(start, stop, count))
    return tuple(float(v) for v in text.split(",") if v.strip())


def read_config_file(path: str) -> dict[str, str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: expected key=value with key in {CONFIG_KEYS}, got {raw!r}")
        values[key] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dampedq",
        description="Damped quantum oscillator: first-order and BCK theories, tables and equivalence checks.",
    )
    parser.add_argument("command", nargs="?", default="equivalence", choices=COMMANDS)
    parser.add_argument("--omega", type=float, help="natural frequency (default 1)")
    parser.add_argument("--alpha", type=float, help="damping rate, 0 <= alpha < omega (default 0.6)")
    parser.add_argument("--n", type=int, help="quantum number, or largest level for equivalence")
    parser.add_argument("--t", help="times as start:stop:count or a comma list")
    parser.add_argument("--z", help="coherent label, Python complex syntax such as 1+0.5j")
    parser.add_argument("--xi", type=float, help="squeeze parameter (default 0.5)")
    parser.add_argument("--x0", type=float, help="classical initial position (default 1)")
    parser.add_argument("--y0", type=float, help="classical initial velocity (default 0)")
    parser.add_argument("--dt", type=float, help="RK4 step (default 1e-3)")
    parser.add_argument("--trunc", type=int, help="Fock truncation M (default 128)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    parser.add_argument("--output", help=f"output file; relative paths resolve against ${OUTPUT_DIR_ENV}")
    parser.add_argument("--config", help="key=value file; flags override its values")
    parser.add_argument("--jobs", type=int, help="worker threads for the equivalence suite")
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Merge flags over the config file over defaults. Raises ConfigError, DomainError, ValueError."""
    args = build_parser().parse_args(argv)
    merged: dict[str, Any] = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    merged.update({k: v for k, v in vars(args).items() if v is not None and k in CONFIG_KEYS})
    command = args.command

    try:
        omega, alpha = float(merged["omega"]), float(merged["alpha"])
        n = int(merged.get("n", DEFAULT_N.get(command, 0)))
        times_text = merged.get("t", DEFAULT_TIMES.get(command))
        times = parse_times(str(times_text)) if times_text is not None else ()
        z = complex(str(merged["z"]).replace(" ", ""))
        xi, x0, y0, dt = (float(merged[k]) for k in ("xi", "x0", "y0", "dt"))
        trunc, jobs = int(merged["trunc"]), int(merged["jobs"])
    except (TypeError, ValueError) as exc:
        if args.config:
            raise ConfigError(f"bad value in configuration: {exc}") from exc
        raise
    fmt = str(merged["format"])
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    if n < 0 or trunc < 8 or jobs < 1 or dt <= 0:
        raise ValueError("need n >= 0, trunc >= 8, jobs >= 1 and dt > 0")

    params = make_params(omega, alpha)
    output = _resolve_output(merged.get("output"))
    return RunConfig(command, params, n, times, z, xi, x0, y0, dt, trunc, fmt, output, jobs)


def _resolve_output(value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


# ---------------------------------------------------------------- commands


def run_states(cfg: RunConfig) -> Result:
    p = cfg.params
    grid = auto_grid(p, cfg.n, max(cfg.times + (0.0,)))
    out = Result()
    for t in cfg.times:
        psi = pseudostationary_state(cfg.n, t, p, grid)
        for q, v in zip(grid.points, psi.samples):
            out.records.append({"t": t, "q": float(q), "re": v.real, "im": v.imag, "modulus": abs(v)})
        out.checks.append(CheckReport.evaluate(f"norm[n={cfg.n},t={t!r}]", norm2(psi), 1.0, 1e-9))
    return out


def run_evolve(cfg: RunConfig) -> Result:
    """Propagate psi_n^BCK(0) numerically and compare with the closed form."""
    p = cfg.params
    grid = auto_grid(p, max(cfg.n, 10), max(cfg.times + (0.0,)))
    start = pseudostationary_state(cfg.n, 0.0, p, grid)
    target_energy = p.omega**2 / p.omega_tilde * (cfg.n + 0.5)
    out = Result()
    for t in cfg.times:
        psi = evolve_bck(start, t, p, trunc=cfg.trunc)
        defect = psi.max_abs_diff(pseudostationary_state(cfg.n, t, p, grid))
        energy = expectation(psi, apply_hamiltonian_bck_grid(psi, t, p)).real
        out.records.append({"t": t, "n": cfg.n, "norm2": norm2(psi), "mean_energy_bck": energy, "state_defect": defect})
        out.checks.append(CheckReport.evaluate(f"evolve_state[t={t!r}]", defect, 0.0, 1e-7))
        out.checks.append(CheckReport.evaluate(f"evolve_energy[t={t!r}]", energy, target_energy, 1e-6))
    return out


def run_coherent(cfg: RunConfig) -> Result:
    p = cfg.params
    vec = coherent_state(CoherentSpec(cfg.z), p, cfg.trunc)
    out = Result()
    for t in cfg.times:
        s = fock_sample(evolve_first_order(vec, t, p), t)
        c = coherent_means(cfg.z, t, p)
        row = s.as_dict()
        row["closed_form_product"] = uncertainty_product(t, p)
        out.records.append(row)
        dev = max(abs(s.mean_x - c.mean_x), abs(s.mean_y - c.mean_y), abs(s.var_x - c.var_x), abs(s.var_y - c.var_y))
        out.checks.append(CheckReport.evaluate(f"coherent_moments[t={t!r}]", dev, 0.0, 1e-8))
        out.checks.append(radius_check(cfg.z, t, p))
    return out


def run_squeezed(cfg: RunConfig) -> Result:
    p = cfg.params
    out = Result()
    for t in cfg.times:
        s = fock_sample(squeezed_state(CoherentSpec(cfg.z, cfg.xi), t, p), t)
        var_closed = squeezed_variance_x(cfg.xi, t, p)
        mx, my = squeezed_means(cfg.z, cfg.xi, t, p)
        out.records.append(
            {"t": t, "mean_x": s.mean_x, "mean_y": s.mean_y, "var_x": s.var_x, "var_x_closed_form": var_closed, "var_y": s.var_y}
        )
        dev = max(abs(s.var_x - var_closed), abs(s.mean_x - mx), abs(s.mean_y - my))
        out.checks.append(CheckReport.evaluate(f"squeezed_moments[t={t!r}]", dev, 0.0, 1e-8))
    return out


def run_uncertainty(cfg: RunConfig) -> Result:
    p = cfg.params
    out = Result()
    out.records = [{"t": t, "uncertainty_product": uncertainty_product(t, p)} for t in cfg.times]
    t_star = critical_time(p)
    if t_star is not None:
        out.checks.append(CheckReport.evaluate("product_at_critical_time", uncertainty_product(t_star, p), 0.5, 1e-12, t_star=t_star))
    return out


def run_classical(cfg: RunConfig) -> Result:
    p = cfg.params
    out = Result()
    point = PhasePoint(cfg.x0, cfg.y0, 0.0)
    start = point
    for t in sorted(cfg.times):
        if t != point.t:
            point = classical_rk4(point, t, cfg.dt, p)
        exact = classical_closed_form(start, t, p)
        energy = float(mechanical_energy(np.array([point.x]), np.array([point.y]), p)[0])
        out.records.append({"t": t, "x": point.x, "y": point.y, "x_exact": exact.x, "y_exact": exact.y, "mechanical_energy": energy})
        dev = max(abs(point.x - exact.x), abs(point.y - exact.y))
        out.checks.append(CheckReport.evaluate(f"rk4_vs_closed_form[t={t!r}]", dev, 0.0, 1e-8))
    return out


def _report_record(r: CheckReport) -> dict[str, Any]:
    return {"check_name": r.check_name, "measured": r.measured, "target": r.target, "tolerance": r.tolerance, "passed": r.passed}


def run_equivalence(cfg: RunConfig) -> Result:
    times = cfg.times if cfg.times else default_suite().times
    suite = default_suite(cfg.params, range(cfg.n + 1), times, cfg.trunc)
    done = run_suite(suite, jobs=cfg.jobs)
    return Result([_report_record(r) for r in done.reports], list(done.reports))


def run_asymptotics(cfg: RunConfig) -> Result:
    p = cfg.params
    suite = default_suite(p, (cfg.n,), (0.0,), cfg.trunc)
    out = Result()
    for n in (cfg.n, 4 * cfg.n):
        out.records.append(
            {
                "n": n,
                "residual_shifted": windowed_residual(n, p, shift=True),
                "residual_unshifted": windowed_residual(n, p, shift=False),
                "max_deviation_from_exact": asymptotic_convergence(n, p),
            }
        )
    out.checks.extend(run_checks(asymptotic_checks(suite, cfg.n)))
    return out


RUNNERS: dict[str, Callable[[RunConfig], Result]] = {
    "states": run_states,
    "evolve": run_evolve,
    "coherent": run_coherent,
    "squeezed": run_squeezed,
    "uncertainty": run_uncertainty,
    "classical": run_classical,
    "equivalence": run_equivalence,
    "asymptotics": run_asymptotics,
}


# ---------------------------------------------------------------- emission


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(records: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    if records:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(records[0])
        writer.writerow(header)
        for row in records:
            writer.writerow([_cell(row[k]) for k in header])
    return buf.getvalue()


def _json_safe(value: Any) -> Any:
    if isinstance(value, (bool, str, int)) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return str(value)


def render_json(cfg: RunConfig, result: Result) -> str:
    doc = {
        "command": cfg.command,
        "params": {**cfg.params.as_dict(), "n": cfg.n, "trunc": cfg.trunc, "z": cfg.z, "xi": cfg.xi},
        "records": result.records,
        "checks": [c.as_dict() for c in result.checks],
        "all_passed": result.all_passed,
    }
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def emit(cfg: RunConfig, result: Result, stdout=None) -> None:
    text = render_csv(result.records) if cfg.format == "csv" else render_json(cfg, result)
    if cfg.output is None:
        (stdout or sys.stdout).write(text)
        return
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"dampedq: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConfigError as exc:
        print(f"dampedq: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"dampedq: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        result = RUNNERS[cfg.command](cfg)
    except (GridError, TruncationError) as exc:
        print(f"dampedq: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"dampedq: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        emit(cfg, result)
    except OSError as exc:
        print(f"dampedq: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO

    failed = [c.check_name for c in result.checks if not c.passed]
    print(f"dampedq {cfg.command}: {len(result.checks) - len(failed)}/{len(result.checks)} checks passed", file=sys.stderr)
    for name in failed:
        print(f"  FAILED {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
