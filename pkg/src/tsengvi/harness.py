"""Experiment runner: presets, shared seeding, trace and summary CSVs, CLI.

Config files are plain ``key=value`` lines (``#`` starts a comment)::

    preset=example2
    m=10
    seed=3
    algos=tseng_inertial,visegm,mategm
    phi=0.8

Command-line flags override config-file values, which override the
preset defaults.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import control
from .problems import EXAMPLE3_STARTS, Problem, example1_problem, example3_problem, generate_example2
from .rng import make_rng
from .solvers import (AlgorithmKind, DivergenceError, IterationTrace, LineSearchError,
                      PowerSchedule, Scaling, SolverConfig, StopReason, TRACE_COLUMNS,
                      TraceRow, control_config, default_config, solve)

PRESETS = {
    "example1": "nonmonotone argmin operator on [-5,5]^m, 50 iterations",
    "example2": "random affine G=BB^T+M+E on [-2,5]^m, 1000 iterations",
    "example3": "(B-||x||)x on the unit ball of L2[0,1], 50 iterations",
    "control41": "harmonic oscillator bang-bang control, N=100",
    "control42": "double integrator with quadratic terminal cost, N=100",
}

_PRESET_DEFAULTS = {
    "example1": dict(m=5, max_iters=50),
    "example2": dict(m=5, max_iters=1000),
    "example3": dict(max_iters=50, N=200),
    "control41": dict(max_iters=1000, stop_tol=1e-4, N=100),
    "control42": dict(max_iters=1000, stop_tol=1e-4, N=100),
}

# config key -> SolverConfig field, for plain numeric overrides
_SOLVER_KEYS = {"delta": "delta", "gamma1": "gamma1", "phi": "phi",
                "fixed_step": "fixed_step", "alpha": "alpha", "ell": "ell",
                "armijo_phi": "armijo_phi"}

KEYS = ("preset", "m", "seed", "algos", "max_iters", "stop_tol", "out_dir", "N",
        "start", "deterministic", "f_coeff", "eps_scale", "visc_scale", *_SOLVER_KEYS)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    preset: str
    algorithms: tuple[AlgorithmKind, ...]
    config: SolverConfig
    m: int = 5
    seed: int = 1
    N: int = 200
    start: str = "t2"
    out_dir: Path = Path("results")
    deterministic: bool = False

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")


# ---------------------------------------------------------------- config parsing

def _parse_pairs(text: str) -> dict[str, tuple[str, str]]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        pairs[key] = (value, f"line {lineno}")
    return pairs


def _number(pairs, key, kind=float, check=None, what=""):
    value, where = pairs[key]
    try:
        x = kind(value)
    except ValueError:
        raise ConfigError(f"{where}: {key}={value!r} is not a valid {kind.__name__}") from None
    if check is not None and not check(x):
        raise ConfigError(f"{where}: {key}={value} out of range ({what})")
    return x


def _build_spec(pairs) -> ExperimentSpec:
    preset = pairs.get("preset", ("example2", "default"))[0]
    if preset not in PRESETS:
        raise ConfigError(f"{pairs['preset'][1]}: unknown preset {preset!r}")
    values = dict(m=5, seed=1, N=200, start="t2", out_dir=Path("results"),
                  deterministic=False)
    values.update(_PRESET_DEFAULTS[preset])
    is_control = preset.startswith("control")
    solver = {}
    if "max_iters" in values:
        solver["max_iters"] = values.pop("max_iters")
    if "stop_tol" in values:
        solver["stop_tol"] = values.pop("stop_tol")

    def num(key, kind=float, check=None, what=""):
        return _number(pairs, key, kind, check, what)

    if "m" in pairs:
        values["m"] = num("m", int, lambda v: v >= 1, "m >= 1")
    if "seed" in pairs:
        values["seed"] = num("seed", int, lambda v: v >= 0, "seed >= 0")
    if "N" in pairs:
        values["N"] = num("N", int, lambda v: v >= 1, "N >= 1")
    if "max_iters" in pairs:
        solver["max_iters"] = num("max_iters", int, lambda v: v >= 0, "max_iters >= 0")
    if "stop_tol" in pairs:
        solver["stop_tol"] = num("stop_tol", float, lambda v: v >= 0, "stop_tol >= 0")
    if "out_dir" in pairs:
        values["out_dir"] = Path(pairs["out_dir"][0])
    if "start" in pairs:
        start, where = pairs["start"]
        if start not in EXAMPLE3_STARTS:
            raise ConfigError(f"{where}: start must be one of {sorted(EXAMPLE3_STARTS)}")
        values["start"] = start
    if "deterministic" in pairs:
        flag, where = pairs["deterministic"]
        if flag.lower() not in ("0", "1", "true", "false", "yes", "no"):
            raise ConfigError(f"{where}: deterministic must be a boolean")
        values["deterministic"] = flag.lower() in ("1", "true", "yes")

    checks = {"phi": (lambda v: 0 < v < 1, "phi must be in (0, 1)"),
              "gamma1": (lambda v: v > 0, "gamma1 must be positive"),
              "delta": (lambda v: v >= 0, "delta must be nonnegative"),
              "fixed_step": (lambda v: v > 0, "fixed_step must be positive"),
              "alpha": (lambda v: v > 0, "alpha must be positive"),
              "ell": (lambda v: 0 < v < 1, "ell must be in (0, 1)"),
              "armijo_phi": (lambda v: 0 < v < 1, "armijo_phi must be in (0, 1)")}
    for key, fname in _SOLVER_KEYS.items():
        if key in pairs:
            solver[fname] = num(key, float, *checks[key])
    if "f_coeff" in pairs:
        solver["contraction"] = Scaling(num("f_coeff", float, lambda v: abs(v) < 1, "|f_coeff| < 1"))
    if "eps_scale" in pairs:
        solver["eps_schedule"] = PowerSchedule(num("eps_scale", float, lambda v: v > 0, "eps_scale > 0"), 2.0)
    if "visc_scale" in pairs:
        solver["phi_schedule"] = PowerSchedule(num("visc_scale", float, lambda v: 0 < v <= 1,
                                                   "visc_scale in (0, 1]"), 1.0)

    algos = ("tseng_inertial",)
    if "algos" in pairs:
        value, where = pairs["algos"]
        algos = [a for a in value.split(",") if a.strip()]
        try:
            kinds = tuple(AlgorithmKind.parse(a) for a in algos)
        except ValueError:
            raise ConfigError(f"{where}: unknown algorithm in {value!r}; "
                              f"choose from {[k.value for k in AlgorithmKind]}") from None
    else:
        kinds = tuple(AlgorithmKind.parse(a) for a in algos)

    try:
        cfg = control_config(**solver) if is_control else default_config(**solver)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentSpec(preset, kinds, cfg, **values)


def parse_config(text: str = "", **flags) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from ``key=value`` text.

    Keyword arguments (``preset=...``, ``m=...``, ...) act as command-line
    flags and take precedence over the text. Raises :class:`ConfigError`
    naming the offending line.
    """
    pairs = _parse_pairs(text)
    for key, value in flags.items():
        if value is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown option {key!r}")
        pairs[key] = (str(value), f"option --{key.replace('_', '-')}")
    return _build_spec(pairs)


# ---------------------------------------------------------------- problems

def build_problem(spec: ExperimentSpec):
    """Return ``(problem, x1, control_problem_or_None)``."""
    rng = make_rng(spec.seed, stream=1)
    if spec.preset == "example1":
        return example1_problem(spec.m), rng.uniform(size=spec.m), None
    if spec.preset == "example2":
        return generate_example2(spec.m, spec.seed), rng.uniform(size=spec.m), None
    if spec.preset == "example3":
        p = example3_problem(N=spec.N)
        return p, EXAMPLE3_STARTS[spec.start](p.space.nodes), None
    cp = (control.example41_problem if spec.preset == "control41"
          else control.example42_problem)(N=spec.N)
    return control.build_vi_problem(cp), rng.uniform(-1.0, 1.0, cp.N), cp


# ---------------------------------------------------------------- CSV

def _fmt(v):
    return str(v) if isinstance(v, (int, np.integer)) else f"{float(v):.17g}"


def write_trace_csv(trace: IterationTrace, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in trace:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace_csv(path) -> IterationTrace:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [TraceRow(int(r[0]), *map(float, r[1:6]), int(r[6]), int(r[7])) for r in reader]
    return IterationTrace(rows)


# ---------------------------------------------------------------- running

SUMMARY_COLUMNS = ("algorithm", "stop_reason", "iterations", "final_error", "final_E",
                   "op_evals", "projections", "elapsed_s", "message")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    x1: np.ndarray
    rows: list[dict] = field(default_factory=list)
    traces: dict[str, IterationTrace] = field(default_factory=dict)
    finals: dict[str, np.ndarray] = field(default_factory=dict)


def _run_one(kind, problem: Problem, spec, x1):
    cfg = spec.config
    if spec.deterministic:
        cfg = cfg.replace(time_iterations=False)
    message = ""
    try:
        x, trace, reason = solve(problem, cfg, kind, x0=x1, x1=x1)
    except DivergenceError as exc:
        x, trace, reason, message = None, exc.trace or IterationTrace(), StopReason.DIVERGENCE, str(exc)
    except (LineSearchError, ValueError) as exc:
        x, trace, reason, message = None, IterationTrace(), "error", str(exc)
    last = trace.rows[-1] if trace.rows else None
    row = dict(algorithm=kind.value, stop_reason=getattr(reason, "value", reason),
               iterations=len(trace), final_error=last.error if last else float("nan"),
               final_E=last.E_n if last else float("nan"), op_evals=problem.eval_count,
               projections=problem.projection_count,
               elapsed_s=(last.elapsed_ns * 1e-9) if last else 0.0, message=message)
    return x, trace, row


def run_experiment(spec: ExperimentSpec, stream=None) -> ExperimentResult:
    """Run every algorithm of ``spec`` from the same initial point.

    Each algorithm gets its own clone of the problem, so evaluation counts
    come from a fresh shared counter. Writes ``trace_<algo>.csv``,
    ``summary.csv`` and ``initial_point.csv`` (plus ``trajectory_<algo>.csv``
    for control presets) into ``spec.out_dir``.
    """
    base, x1, cp = build_problem(spec)
    x1 = base.feasible_set.project(x1)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(spec, x1)
    np.savetxt(out / "initial_point.csv", x1, fmt="%.17g")
    for kind in spec.algorithms:
        problem = base.clone()
        x, trace, row = _run_one(kind, problem, spec, x1)
        write_trace_csv(trace, out / f"trace_{kind.value}.csv")
        if cp is not None and x is not None:
            control.write_trajectory_csv(cp, x, out / f"trajectory_{kind.value}.csv")
        result.rows.append(row)
        result.traces[kind.value] = trace
        if x is not None:
            result.finals[kind.value] = x
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})
    print_summary(result, stream or sys.stdout)
    return result


def print_summary(result: ExperimentResult, stream) -> None:
    spec = result.spec
    print(f"preset={spec.preset} seed={spec.seed} out_dir={spec.out_dir}", file=stream)
    head = f"{'algorithm':<16}{'stop':<12}{'iters':>6}{'error':>12}{'E_n':>12}{'evals':>8}{'time[s]':>10}"
    print(head, file=stream)
    for r in result.rows:
        print(f"{r['algorithm']:<16}{r['stop_reason']:<12}{r['iterations']:>6}"
              f"{r['final_error']:>12.3e}{r['final_E']:>12.3e}{r['op_evals']:>8}"
              f"{r['elapsed_s']:>10.4f}", file=stream)
        if r["message"]:
            print(f"    {r['message']}", file=stream)


# ---------------------------------------------------------------- CLI

def _arg_parser():
    ap = argparse.ArgumentParser(prog="tsengvi", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", type=Path, help="key=value config file")
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--m", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--algos", help="comma-separated algorithm names")
    run.add_argument("--max-iters", type=int)
    run.add_argument("--stop-tol", type=float)
    run.add_argument("--out-dir")
    run.add_argument("--deterministic", action="store_const", const="true",
                     help="record zero elapsed time so trace files are reproducible")
    sub.add_parser("presets", help="list problem presets and algorithms")
    return ap


def main(argv=None) -> int:
    ap = _arg_parser()
    args = ap.parse_args(argv)
    if args.command == "presets":
        for name, desc in PRESETS.items():
            print(f"{name:<10} {desc}")
        print("algorithms: " + ", ".join(k.value for k in AlgorithmKind))
        return 0
    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    flags = dict(preset=args.preset, m=args.m, seed=args.seed, algos=args.algos,
                 max_iters=args.max_iters, stop_tol=args.stop_tol, out_dir=args.out_dir,
                 deterministic=args.deterministic)
    try:
        spec = parse_config(text, **flags)
    except ConfigError as exc:
        ap.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        run_experiment(spec)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
