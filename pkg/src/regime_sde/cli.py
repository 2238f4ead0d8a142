"""Command-line front end: ``regime-sde {check,solve,simulate,classify,demo}``.

Exit codes:
    0  success
    1  an assumption check failed (check; solve/simulate without --force)
    2  problem file cannot be read, parsed or validated
    3  solver error
    4  simulation error
    5  unknown demo name
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .checks import run_checks
from .errors import DomainExit, ProblemFileError, RegimeSDEError
from .problem import load_problem

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_SIMULATION = 4
EXIT_UNKNOWN_DEMO = 5


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _err(*parts):
    print(*parts, file=sys.stderr)


def _load(path):
    try:
        return load_problem(path)
    except ProblemFileError as exc:
        raise _Fail(EXIT_PARSE, f"error: {exc}") from exc
    except RegimeSDEError as exc:
        raise _Fail(EXIT_PARSE, f"error: {path}: {exc}") from exc


def _gate(problem, force):
    """Run the checklist; refuse to continue on failures unless forced."""
    report = run_checks(problem)
    if report.ok:
        return report
    for item in report.failed():
        _err(item.line())
    if not force:
        raise _Fail(EXIT_CHECK, "error: assumption checks failed (use --force to run anyway)")
    _err("warning: assumption checks failed; continuing because of --force")
    return report


def _prefix(args):
    return Path(args.out) if args.out else Path(Path(args.problem).stem)


# ---------------------------------------------------------------------------
# commands

def cmd_check(args):
    problem = _load(args.problem)
    report = run_checks(problem)
    for line in report.lines():
        print(line)
    print("all assumptions hold" if report.ok else f"{len(report.failed())} assumption(s) fail")
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_solve(args):
    from .regime_solver import build_schedule, verify_schedule

    problem = _load(args.problem)
    _gate(problem, args.force)
    try:
        schedule = build_schedule(problem, horizon=args.horizon)
    except RegimeSDEError as exc:
        raise _Fail(EXIT_SOLVER, f"error: build_schedule failed: {exc}") from exc
    try:
        rows = schedule.curve_rows(args.points)
    except RegimeSDEError as exc:
        raise _Fail(EXIT_SOLVER, f"error: curve sampling failed: {exc}") from exc
    issues = verify_schedule(schedule)
    prefix = _prefix(args)
    doc = {"problem": problem.name, **schedule.to_json(), "verification_issues": issues}
    io.write_json(f"{prefix}.schedule.json", doc)
    io.write_csv(f"{prefix}.curve.csv", io.CURVE_HEADER, rows)
    hits = len(schedule.breakpoints) - 1
    print(f"status {schedule.status.value} ({schedule.stop_reason}); {hits} switch time(s)")
    for t, n in zip(schedule.breakpoints[1:11], schedule.levels_hit):
        print(f"  T_{n} = {t:.15g}")
    if hits > 10:
        print(f"  ... T_{schedule.levels_hit[-1]} = {schedule.breakpoints[-1]:.15g}")
    if schedule.tmax_estimate is not None:
        print(f"T_max estimate {schedule.tmax_estimate:.12g}")
    for note in schedule.notes:
        print(f"note: {note}")
    for issue in issues:
        _err(f"warning: {issue}")
    print(f"wrote {prefix}.schedule.json and {prefix}.curve.csv")
    return EXIT_OK


def _simulation_params(args, problem):
    cfg = problem.simulation
    return (args.particles or cfg.particles, args.dt or cfg.dt,
            args.horizon or cfg.horizon, cfg.seed if args.seed is None else args.seed)


def cmd_simulate(args):
    from .monte_carlo import simulate_exact, simulate_particles, transform_batch
    from .regime_solver import build_schedule

    problem = _load(args.problem)
    checks = _gate(problem, args.force)
    n, dt, horizon, seed = _simulation_params(args, problem)
    schedule = None
    if args.mode == "exact" or checks.ok:
        try:
            schedule = build_schedule(problem)
        except RegimeSDEError as exc:
            if args.mode == "exact":
                raise _Fail(EXIT_SOLVER, f"error: exact mode needs a schedule: {exc}") from exc
    try:
        if args.mode == "exact":
            if horizon > schedule.end:
                _err(f"note: T clipped to the schedule end {schedule.end:.12g}")
                horizon = schedule.end
            times = np.linspace(0.0, horizon, args.points + 1)
            result = simulate_exact(schedule, n, times, seed)
            if args.coords == "original":
                result = type(result)(result.curve, transform_batch(problem.coeffs, result.batch, "original"),
                                      result.exits, result.notes)
        else:
            result = simulate_particles(problem, n, dt, horizon, seed, coords=args.coords,
                                        scheme=args.scheme, implicit=args.implicit)
    except DomainExit as exc:
        if exc.result is not None and args.out:
            io.write_csv(args.out, io.EMPIRICAL_HEADER, exc.result.curve.rows())
        raise _Fail(EXIT_SIMULATION, f"error: simulation stopped: {exc}") from exc
    except RegimeSDEError as exc:
        raise _Fail(EXIT_SIMULATION, f"error: simulation failed: {exc}") from exc

    text = io.csv_text(io.EMPIRICAL_HEADER, result.curve.rows())
    if args.out:
        Path(args.out).write_text(text)
        _err(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    if args.paths:
        io.write_csv(args.paths, io.PATHS_HEADER, result.batch.dump_rows())
        _err(f"wrote {args.paths}")
    if schedule is not None:
        t = result.curve.t
        inside = t <= schedule.end
        if inside.any():
            err = np.abs(result.curve.phi_hat[inside] - np.asarray(schedule.phi(t[inside])))
            _err(f"max |phi_hat - phi| = {float(err.max()):.6e} over {int(inside.sum())} time(s)")
    return EXIT_OK


def cmd_classify(args):
    from .pathology_lab import classify_level, level_problem_from_file, oscillation_probe, VerdictKind

    problem = _load(args.problem)
    try:
        lp = level_problem_from_file(problem)
        verdict = classify_level(lp)
    except RegimeSDEError as exc:
        raise _Fail(EXIT_SOLVER, f"error: classification failed: {exc}") from exc
    doc = {"problem": problem.name, "level_problem": lp.to_json(), "verdict": verdict.to_json()}
    if args.probe and verdict.kind is VerdictKind.NO_LOCAL_SOLUTION:
        n, dt, _, seed = _simulation_params(args, problem)
        rep = oscillation_probe(lp, dt, args.steps, n, seed)
        doc["probe"] = rep.to_json()
    text = io.json_text(doc)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_demo(args):
    from .demos import DEMOS, run_demo

    if args.list or not args.name:
        for name in DEMOS:
            print(name)
        return EXIT_OK
    if args.name not in DEMOS:
        raise _Fail(EXIT_UNKNOWN_DEMO, f"error: unknown demo {args.name!r}; known: {', '.join(DEMOS)}")
    try:
        result = run_demo(args.name)
    except RegimeSDEError as exc:
        raise _Fail(EXIT_SOLVER, f"error: demo {args.name} failed: {exc}") from exc
    sys.stdout.write(result.text())
    if args.out:
        io.write_json(args.out, result.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser():
    ap = argparse.ArgumentParser(prog="regime-sde", description="Mean-field SDEs with law-dependent regime switching.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate the standing assumptions of a problem file")
    p.add_argument("problem")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="build the switching schedule and write schedule JSON + curve CSV")
    p.add_argument("problem")
    p.add_argument("--out", help="output prefix (default: problem file stem)")
    p.add_argument("--points", type=int, default=256, help="curve samples per regime interval")
    p.add_argument("--horizon", type=float, help="search horizon for switch times")
    p.add_argument("--force", action="store_true", help="run even if assumption checks fail")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo: exact sampling along the schedule or the particle system")
    p.add_argument("problem")
    p.add_argument("--mode", choices=("exact", "particles"), default="exact")
    p.add_argument("--coords", choices=("transformed", "original"), default="transformed")
    p.add_argument("--scheme", choices=("exact", "euler"), help="particle step (default exact)")
    p.add_argument("--implicit", action="store_true", help="self-consistent regime choice per step")
    p.add_argument("--particles", type=int, help="number of paths N")
    p.add_argument("--dt", type=float, help="particle time step")
    p.add_argument("--horizon", type=float, help="simulation end time T")
    p.add_argument("--seed", type=int)
    p.add_argument("--points", type=int, default=256, help="output intervals in exact mode")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--paths", help="also dump up to 100 paths to this CSV")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="classify the single-level problem of a problem file")
    p.add_argument("problem")
    p.add_argument("--out")
    p.add_argument("--probe", action="store_true", help="run the oscillation probe on NoLocalSolution")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--particles", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_classify, horizon=None)

    p = sub.add_parser("demo", help="run a named built-in demo")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out", help="also write the demo result as JSON")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        _err(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
