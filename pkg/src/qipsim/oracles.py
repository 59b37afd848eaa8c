"""Classical reference solvers used to check the simulator.

Both work on exact rationals and never touch the numpy grid path.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .problem import IpProblem, as_rational, encode_assignment, evaluate_poly

BRUTE_FORCE_CAP = 2**24


@dataclass
class OracleResult:
    feasible: list[int]  # ascending big-endian indices y
    optima: list[int]  # every y attaining the optimum cost
    optimum_cost: Fraction | None
    evaluations: int
    nodes: int = 0
    first_incumbent_cost: Fraction | None = None
    costs: dict[int, Fraction] = field(default_factory=dict)


def _satisfies(p: IpProblem, x) -> bool:
    return all(
        evaluate_poly(c.lhs, x, exact=True) < as_rational(c.bound) for c in p.constraints
    )


def brute_force_solve(p: IpProblem) -> OracleResult:
    """Enumerate all d**n assignments; maximize the cost over the feasible ones."""
    if p.size > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force needs {p.size} evaluations, cap is {BRUTE_FORCE_CAP}")
    costs = {}
    for x in itertools.product(range(p.d), repeat=p.n):
        if _satisfies(p, x):
            costs[encode_assignment(x, p.n, p.d)] = evaluate_poly(p.cost, x, exact=True)
    feasible = sorted(costs)
    if not feasible:
        return OracleResult([], [], None, p.size)
    best = max(costs.values())
    optima = [y for y in feasible if costs[y] == best]
    return OracleResult(feasible, optima, best, p.size, costs=costs)


def _term_range(coeff: Fraction, exps, fixed: dict[int, int], d: int) -> tuple[Fraction, Fraction]:
    """Interval of one monomial over the unfixed variables in [0, d - 1]."""
    value = coeff
    free = 0
    for var, e in enumerate(exps):
        if e == 0:
            continue
        if var in fixed:
            value *= fixed[var] ** e
        else:
            free += e
    if free == 0 or value == 0:
        return value, value
    hi = value * (d - 1) ** free
    return min(Fraction(0), hi), max(Fraction(0), hi)


def _poly_range(terms, fixed, d) -> tuple[Fraction, Fraction]:
    lo = hi = Fraction(0)
    for coeff, exps in terms:
        a, b = _term_range(coeff, exps, fixed, d)
        lo, hi = lo + a, hi + b
    return lo, hi


def branch_and_bound_solve(p: IpProblem) -> OracleResult:
    """Depth-first branch and bound over variables in index order.

    A node is pruned when some constraint's lower bound already reaches its
    bound, or when the cost's upper bound cannot beat the incumbent. Ties
    with the incumbent are explored so every optimum is reported.
    """
    cost_terms = [(as_rational(t.coeff), t.exponents) for t in p.cost.terms]
    cons = [
        ([(as_rational(t.coeff), t.exponents) for t in c.lhs.terms], as_rational(c.bound))
        for c in p.constraints
    ]
    best: Fraction | None = None
    first: Fraction | None = None
    optima: list[int] = []
    nodes = 0
    evaluations = 0

    def visit(fixed: dict[int, int]):
        nonlocal best, first, optima, nodes, evaluations
        nodes += 1
        for terms, h in cons:
            if _poly_range(terms, fixed, p.d)[0] >= h:
                return
        if best is not None and _poly_range(cost_terms, fixed, p.d)[1] < best:
            return
        if len(fixed) == p.n:
            evaluations += 1
            x = tuple(fixed[i] for i in range(p.n))
            value = _poly_range(cost_terms, fixed, p.d)[0]
            y = encode_assignment(x, p.n, p.d)
            if first is None:
                first = value
            if best is None or value > best:
                best, optima = value, [y]
            elif value == best:
                optima.append(y)
            return
        var = len(fixed)
        for v in range(p.d):
            visit({**fixed, var: v})

    visit({})
    return OracleResult([], sorted(optima), best, evaluations, nodes, first)
