"""Closed-form success probabilities, repetition counts and cost models.

Cost models use unit hidden constants and base-2 logarithms; their values
are "model units", not seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

R_CURVE_TARGETS = (0.51, 0.67, 0.80, 0.999)


@dataclass(frozen=True)
class ComplexityParams:
    n: int
    m: int
    d: int
    eps_qpe: float = 0.1
    eps_u: float = 0.01
    eps_g: float = 0.01
    eps_r: float = 0.01
    l: int = 4
    n_ys: int = 1

    def __post_init__(self):
        if min(self.n, self.m, self.d, self.l, self.n_ys) < 1:
            raise ValueError("sizes must be >= 1")
        for name in ("eps_qpe", "eps_u", "eps_g", "eps_r"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class ErrorBudget:
    delta_qpe: float = 0.0
    eps_qpe: float = 0.0

    def __post_init__(self):
        if not (0 <= self.delta_qpe < 1 and 0 <= self.eps_qpe < 1):
            raise ValueError("error budget entries must lie in [0, 1)")


def ideal_success_probability(n_ys: int, c_star: float) -> float:
    """(1/N) * (1 - (1 + C*)**-2); C* may be math.inf."""
    if n_ys < 1 or c_star < 0:
        raise ValueError("need N_ys >= 1 and C* >= 0")
    return (1.0 - (1.0 + c_star) ** -2) / n_ys


def success_probability_bounds(
    n_ys: int, c_star: float, c_ub: float, delta_qpe: float
) -> tuple[float, float]:
    shift = c_ub * delta_qpe
    low_base = 1.0 + c_star - shift
    if low_base <= 0:
        raise ValueError(
            f"lower bound undefined: 1 + C* - C_ub*delta = {low_base:.6g} <= 0 (delta too large)"
        )
    lower = (1.0 - low_base**-2) / n_ys
    upper = (1.0 - (1.0 + c_star + shift) ** -2) / n_ys
    return lower, upper


def resolvable(
    c_e_star: float, c_dagger: float, c_ub: float, eps_qpe: float, delta_qpe: float = 0.0
) -> tuple[bool, float]:
    """Whether the optimum and runner-up phases separate; returns (ok, margin)."""
    margin = (c_e_star - c_dagger) - (eps_qpe * c_ub + 2 * c_ub * delta_qpe)
    return margin > 0, margin


def repetitions(p: float, p_target: float) -> float:
    """ceil(log(1 - P) / log(1 - p)); math.inf when p == 0 and 1 when p == 1."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if not 0 < p_target < 1:
        raise ValueError("target probability must lie in (0, 1)")
    if p == 0:
        return math.inf
    if p == 1:
        return 1
    return max(1, math.ceil(math.log(1 - p_target) / math.log(1 - p)))


def required_success_probability(p_target: float, r: int) -> float:
    """Per-attempt probability needed to reach ``p_target`` within ``r`` attempts."""
    return 1 - (1 - p_target) ** (1 / r)


def r_curves(targets: Sequence[float] = R_CURVE_TARGETS, r_max: int = 100) -> list[dict]:
    return [
        {"P": P, "r": r, "p": required_success_probability(P, r)}
        for P in targets
        for r in range(1, r_max + 1)
    ]


def ideal_conditional_distribution(costs: Sequence[float]) -> tuple[np.ndarray, float]:
    """Post-selected distribution over feasible states when every phase is exact.

    Returns (probabilities, p0) where p0 is the ancilla-|0> probability for a
    uniform feasible superposition.
    """
    c = np.asarray(costs, dtype=float)
    w = 1.0 - (1.0 + c) ** -2
    p0 = float(w.mean())
    if p0 <= 0:
        raise ValueError("all feasible costs are zero")
    return w / w.sum(), p0


# ---------------------------------------------------------------------------
# cost models


def quantum_time_model(params: ComplexityParams) -> dict:
    """Per-step rows of the quantum cost model plus totals.

    Each row carries its full value and the part that survives in the
    leading-order expression; ``leading_total`` is the sum of the latter.
    """
    n, m, d = params.n, params.m, params.d
    lg = math.log2
    grover = d ** (n / 2) / math.sqrt(params.n_ys)
    rows = [
        ("hadamards", n, 0.0),
        ("entanglers", m * n**2 * lg(d) * lg(1 / params.eps_u), m * n**2 * lg(d)),
        ("amplification", grover * lg(1 / params.eps_g), grover),
        ("mid_circuit_init", 0.0, 0.0),
        ("qpe_hadamards", params.l, 0.0),
        ("phase_oracle", n / params.eps_qpe, n / params.eps_qpe),
        ("inverse_qft", params.l**2, 0.0),
        ("rotation", lg(1 / params.eps_r), 0.0),
        ("measurement", 0.0, 0.0),
    ]
    return {
        "rows": [{"step": name, "value": full, "leading": lead} for name, full, lead in rows],
        "total": sum(r[1] for r in rows),
        "leading_total": sum(r[2] for r in rows),
    }


def brute_force_model(params: ComplexityParams) -> float:
    return float(params.d) ** params.n


def reis_rothvoss_model(params: ComplexityParams) -> float:
    if params.n < 2:
        raise ValueError("the (log n)^(3n) model needs n >= 2")
    return math.log2(params.n) ** (3 * params.n)


CLASSICAL_MODELS: dict[str, Callable[[ComplexityParams], float]] = {
    "brute_force": brute_force_model,
    "reis_rothvoss": reis_rothvoss_model,
}


def classical_time_models(params: ComplexityParams) -> dict:
    """Evaluate every registered classical model; ``flags`` notes degenerate cases."""
    out = {name: fn(params) for name, fn in CLASSICAL_MODELS.items()}
    flags = []
    if params.n == 2:
        flags.append("reis_rothvoss degenerate at n=2 (log2 n = 1)")
    out["flags"] = flags
    return out


def crossover_n(d: int, m: int, eps_qpe: float, n_max: int = 64) -> int | None:
    """Smallest n >= 2 where brute force exceeds the quantum leading-order model."""
    for n in range(2, n_max + 1):
        params = ComplexityParams(n=n, m=m, d=d, eps_qpe=eps_qpe)
        if brute_force_model(params) > quantum_time_model(params)["leading_total"]:
            return n
    return None


def model_grid(ns: Sequence[int], ms: Sequence[int], d: int, eps_qpe: float) -> list[dict]:
    rows = []
    for n in ns:
        for m in ms:
            params = ComplexityParams(n=n, m=m, d=d, eps_qpe=eps_qpe)
            q = quantum_time_model(params)
            c = classical_time_models(params)
            rows.append({
                "n": n, "m": m, "d": d, "eps_qpe": eps_qpe,
                "quantum": q["leading_total"],
                "brute_force": c["brute_force"],
                "reis_rothvoss": c["reis_rothvoss"],
            })
    return rows
