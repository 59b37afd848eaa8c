"""Command-line entry point: ``qipsim solve|verify|analyze``.

Exit codes: 0 success, 1 verification mismatch, 2 parse or range error,
3 undecidable instance, 4 degenerate objective.
"""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .oracles import brute_force_solve
from .optimizer import DEFAULT_L, solve
from .problem import (
    CostBoundError,
    IpProblem,
    Monomial,
    NormalizationError,
    Polynomial,
    ProblemError,
    RawConstraint,
    evaluate_poly,
    normalize_problem,
    parse_problem,
)
from .state import DimensionError

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_PARSE = 2
EXIT_UNDECIDABLE = 3
EXIT_DEGENERATE = 4

STATUS_EXIT = {"ok": EXIT_OK, "undecidable": EXIT_UNDECIDABLE, "degenerate": EXIT_DEGENERATE}


def _width(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--l takes an integer or 'auto'") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qipsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solver_flags(p, default_l):
        p.add_argument("--l", type=_width, default=default_l, help="phase-register qubits or 'auto'")
        p.add_argument("--cub", default="guaranteed", help="C_ub: a number, 'guaranteed' or 'paper'")
        p.add_argument("--phase", choices=("qpe", "ideal"), default="qpe")
        p.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="run the two-stage simulation on a problem file")
    s.add_argument("--problem", required=True)
    add_solver_flags(s, DEFAULT_L)
    s.add_argument("--shots", type=int, default=4096)
    s.add_argument("--exact", action="store_true", help="decode from the exact distribution")
    s.add_argument("--resample", action="store_true", help="run the literal repeat-until-|0> loop")
    s.add_argument("--out", default=".")

    v = sub.add_parser("verify", help="compare the simulator against brute force")
    v.add_argument("--problem")
    v.add_argument("--fuzz", type=int, default=0, help="number of random instances")
    add_solver_flags(v, "auto")

    a = sub.add_parser("analyze", help="emit cost-model and repetition tables as CSV")
    a.add_argument("--grid", nargs="+", metavar="KEY=RANGE", help="e.g. n=2..8 m=2..8 d=3 eps=0.1")
    a.add_argument("--r-curves", action="store_true")
    a.add_argument("--r-max", type=int, default=100)
    a.add_argument("--out", default=None, help="directory for CSV files (stdout if omitted)")
    return parser


def load_problem(path: str) -> IpProblem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from exc
    return parse_problem(text)


def write_outputs(report, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    with open(out / "distributions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "basis_index", "probability"])
        for series, idx, prob in report.distributions():
            w.writerow([series, idx, repr(prob)])


def cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem)
        report = solve(
            problem,
            l=args.l,
            cub=args.cub,
            shots=None if args.exact else args.shots,
            seed=args.seed,
            phase_mode=args.phase,
            resample=args.resample,
        )
    except (ProblemError, DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    write_outputs(report, Path(args.out))
    if report.status == "undecidable":
        d = report.diagnosis
        print(f"undecidable: gamma_max={d.gamma_max}, relax {d.relaxations} constraint(s)")
    elif report.status == "degenerate":
        print("degenerate objective: every feasible cost is zero")
    else:
        print(f"optimum y={report.optimum_y} x={report.optimum_assignment} cost={report.optimum_cost:g}")
        print(f"p={report.p:.6f} p0={report.p0:.6f} r={report.repetitions}")
        for note in report.flags:
            print(f"note: {note}")
    return STATUS_EXIT[report.status]


# ---------------------------------------------------------------------------
# verification


def random_problem(
    rng: np.random.Generator, max_n=4, max_d=4, max_m=3, planted: float = 0.85
) -> IpProblem:
    """Random small instance with a non-negative cost and monomials of degree <= 3.

    With probability ``planted`` every constraint's bound is chosen so a
    random point is feasible; otherwise bounds are arbitrary and the
    feasible region may be empty.
    """
    while True:
        n = int(rng.integers(1, max_n + 1))
        d = int(rng.integers(2, max_d + 1))
        m = int(rng.integers(1, max_m + 1))
        point = tuple(int(v) for v in rng.integers(0, d, size=n))
        plant = rng.random() < planted

        def poly(lo, hi, k):
            terms = []
            for _ in range(k):
                degree = int(rng.integers(0, 4))
                exps = tuple(int(e) for e in np.bincount(rng.integers(0, n, size=degree), minlength=n))
                terms.append(Monomial(float(rng.integers(lo, hi + 1)), exps))
            return Polynomial.from_terms(terms)

        cost = poly(1, 3, int(rng.integers(1, 4)))
        raw = []
        for _ in range(m):
            lhs = poly(-3, 3, int(rng.integers(1, 4)))
            rel = str(rng.choice(["<", "<=", ">", ">="]))
            if plant:
                at = evaluate_poly(lhs, point)
                slack = float(rng.integers(0, 6))
                below = rel in ("<", "<=")
                bound = at + slack if below else at - slack
                if rel in ("<", ">") and slack == 0:
                    bound += 1 if below else -1
            else:
                bound = float(rng.integers(-4, 10))
            raw.append(RawConstraint(lhs, rel, float(bound)))
        try:
            return normalize_problem(n, d, cost, raw)
        except (NormalizationError, ProblemError):
            continue


def verify_problem(problem: IpProblem, l, cub, phase: str) -> list[str]:
    """Differences between the simulator and brute force; empty when they agree."""
    oracle = brute_force_solve(problem)
    report = solve(problem, l=l, cub=cub, phase_mode=phase)
    diffs = []
    if report.status == "undecidable":
        if oracle.feasible:
            diffs.append(f"simulator says undecidable, oracle finds {len(oracle.feasible)} feasible")
        return diffs
    got = [int(y) for y in report.feasible]
    if got != oracle.feasible:
        diffs.append(f"feasible sets differ: simulator {got} oracle {oracle.feasible}")
    if report.status == "degenerate":
        if oracle.optimum_cost != 0:
            diffs.append(f"simulator says degenerate, oracle optimum {oracle.optimum_cost}")
        return diffs
    if report.optimum_cost != float(oracle.optimum_cost):
        diffs.append(
            f"optimum cost differs: simulator {report.optimum_cost} (y={report.optimum_y}) "
            f"oracle {float(oracle.optimum_cost)} (y={oracle.optima})"
        )
    return diffs


def cmd_verify(args) -> int:
    if args.fuzz < 0:
        print("error: --fuzz must be >= 0", file=sys.stderr)
        return EXIT_PARSE
    if not args.problem and not args.fuzz:
        print("error: give --problem or --fuzz N", file=sys.stderr)
        return EXIT_PARSE
    failures = 0
    if args.problem:
        try:
            problem = load_problem(args.problem)
            diffs = verify_problem(problem, args.l, args.cub, args.phase)
        except CostBoundError as exc:
            diffs = [f"cost bound violation: {exc}"]
        except (ProblemError, DimensionError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        for line in diffs:
            print(f"{args.problem}: {line}")
        failures += bool(diffs)
    if args.fuzz:
        rng = np.random.default_rng(args.seed)
        start = time.perf_counter()
        for i in range(args.fuzz):
            problem = random_problem(rng)
            diffs = verify_problem(problem, args.l, "guaranteed", args.phase)
            for line in diffs:
                print(f"fuzz #{i}: {line}")
            failures += bool(diffs)
        print(f"fuzz: {args.fuzz} instances, {failures} mismatches, {time.perf_counter() - start:.1f}s")
    if failures:
        return EXIT_MISMATCH
    print("verify: ok")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analysis tables

_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


def parse_grid(items: list[str]) -> dict:
    """Parse ``n=2..8 m=2..8 d=3 eps=0.1`` into ranges and scalars."""
    grid = {"n": None, "m": None, "d": 3, "eps": 0.1}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in grid:
            raise ValueError(f"bad grid item {item!r}")
        if key in ("n", "m"):
            match = _RANGE.match(value)
            lo, hi = (int(match[1]), int(match[2])) if match else (int(value), int(value))
            if lo < 1 or hi < lo:
                raise ValueError(f"empty or invalid range {item!r}")
            grid[key] = range(lo, hi + 1)
        elif key == "d":
            grid[key] = int(value)
        else:
            grid[key] = float(value)
    if grid["n"] is None or grid["m"] is None:
        raise ValueError("grid needs both n and m")
    if grid["d"] < 2 or not 0 < grid["eps"] < 1:
        raise ValueError("grid needs d >= 2 and 0 < eps < 1")
    if grid["n"].start < 2:
        raise ValueError("grid needs n >= 2 for the (log n)^(3n) model")
    return grid


def _emit(rows: list[dict], name: str, out: str | None) -> None:
    if not rows:
        return
    if out is None:
        fh = sys.stdout
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return
    Path(out).mkdir(parents=True, exist_ok=True)
    with open(Path(out) / name, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_analyze(args) -> int:
    if not args.grid and not args.r_curves:
        print("error: give --grid and/or --r-curves", file=sys.stderr)
        return EXIT_PARSE
    if args.r_max < 1:
        print("error: --r-max must be >= 1", file=sys.stderr)
        return EXIT_PARSE
    if args.grid:
        try:
            grid = parse_grid(args.grid)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        _emit(analysis.model_grid(grid["n"], grid["m"], grid["d"], grid["eps"]), "models.csv", args.out)
    if args.r_curves:
        _emit(analysis.r_curves(r_max=args.r_max), "r_curves.csv", args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    handler = {"solve": cmd_solve, "verify": cmd_verify, "analyze": cmd_analyze}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
