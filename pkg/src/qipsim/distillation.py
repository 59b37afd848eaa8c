"""Constraint distillation: flip sets, the 1-sparse entanglers and |psi_3>.

Each constraint ``C_i < h_i`` becomes a basis permutation that flips qubit
``i`` exactly on the qudit indices satisfying the constraint. Entanglers are
kept as sorted index arrays; ``materialize`` builds the dense matrix for
inspection only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import Constraint, IpProblem, as_rational, grid_from_terms
from .state import HybridState, RegisterLayout, pattern_probabilities

BOUNDARY_TOL = 1e-9
_EXPONENT_CAP = 1024


def distill_value(c_val: float, h: float) -> int:
    """The distillation function 2**floor(c/h): 1 when feasible, even otherwise.

    Only the parity is consumed downstream, so the exponent saturates at
    1024. For ``c_val < 0`` the feasible answer 1 is returned directly since
    the literal power would not be an integer.
    """
    if not h > 0:
        raise ValueError("constraint bound h must be positive")
    if c_val < h:
        return 1
    return 2 ** min(math.floor(c_val / h), _EXPONENT_CAP)


def flips_qubit(c_val: float, h: float) -> bool:
    if not h > 0:
        raise ValueError("constraint bound h must be positive")
    return c_val < h


@dataclass(frozen=True)
class EntanglerPermutation:
    index: int  # 1-based constraint index
    flip_set: np.ndarray  # sorted qudit indices y with C_i(y) < h_i
    n: int
    d: int
    boundary_warning: bool = False

    def mask(self) -> np.ndarray:
        out = np.zeros(self.d**self.n, dtype=bool)
        out[self.flip_set] = True
        return out

    def apply(self, s: HybridState) -> HybridState:
        lay = s.layout
        if (lay.n, lay.d) != (self.n, self.d) or self.index > lay.m:
            raise ValueError("entangler does not match the state layout")
        bit = lay.constraint_bit(self.index)
        perm = np.arange(lay.qubit_dim) ^ bit
        mat = s.matrix().copy()
        rows = self.flip_set
        mat[rows] = mat[rows][:, perm]
        return s.replace(mat.reshape(-1))

    def materialize(self, m: int) -> np.ndarray:
        """Dense permutation matrix on the joint space of ``m`` qubits."""
        lay = RegisterLayout(self.n, self.d, m)
        dim = lay.dim
        bit = lay.constraint_bit(self.index)
        target = np.arange(dim)
        idx = (self.flip_set[:, None] * lay.qubit_dim + np.arange(lay.qubit_dim)[None, :]).ravel()
        target[idx] = idx ^ bit
        u = np.zeros((dim, dim))
        u[target, np.arange(dim)] = 1.0
        return u


def _integer_scaled(c: Constraint) -> tuple[list[tuple[int, tuple[int, ...]]], int] | None:
    """Scale coefficients and bound to integers when all are small-denominator rationals."""
    vals = [as_rational(t.coeff) for t in c.lhs.terms] + [as_rational(c.bound)]
    if any(v.denominator > 10**6 for v in vals):
        return None
    lcm = 1
    for v in vals:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vals]
    return [(k, t.exponents) for k, t in zip(ints[:-1], c.lhs.terms)], ints[-1]


def constraint_flags(c: Constraint, n: int, d: int) -> tuple[np.ndarray, bool]:
    """Satisfaction mask over all d**n indices plus a near-boundary warning flag.

    Rational data is compared exactly on integers; otherwise a plain strict
    float comparison is used and values within 1e-9 of the bound are flagged.
    """
    scaled = _integer_scaled(c)
    if scaled is not None:
        terms, bound = scaled
        magnitude = sum(abs(k) * (d - 1) ** sum(e) for k, e in terms)
        dtype = np.int64 if magnitude < 2**62 else object
        vals = grid_from_terms(terms, n, d, dtype=dtype)
        return np.asarray(vals < bound, dtype=bool).reshape(-1), False
    vals = grid_from_terms([(t.coeff, t.exponents) for t in c.lhs.terms], n, d)
    near = bool(np.any(np.abs(vals - c.bound) < BOUNDARY_TOL))
    return (vals < c.bound).reshape(-1), near


def build_entangler(p: IpProblem, i: int) -> EntanglerPermutation:
    if not 1 <= i <= p.m:
        raise IndexError(f"constraint index {i} outside 1..{p.m}")
    flags, near = constraint_flags(p.constraints[i - 1], p.n, p.d)
    return EntanglerPermutation(i, np.flatnonzero(flags), p.n, p.d, near)


def build_entanglers(p: IpProblem) -> list[EntanglerPermutation]:
    return [build_entangler(p, i) for i in range(1, p.m + 1)]


def apply_entanglers_sequential(
    s: HybridState, p: IpProblem, entanglers: list[EntanglerPermutation] | None = None
) -> HybridState:
    """Apply U_{f_1} ... U_{f_m} in order (they commute; order kept for clarity)."""
    lay = s.layout
    if (lay.n, lay.d, lay.m) != (p.n, p.d, p.m):
        raise ValueError(f"layout (n={lay.n}, d={lay.d}, m={lay.m}) does not match problem")
    for u in entanglers if entanglers is not None else build_entanglers(p):
        s = u.apply(s)
    return s


def popcounts(m: int) -> np.ndarray:
    q = np.arange(2**m)
    return np.array([bin(v).count("1") for v in q], dtype=int)


def gamma_histogram(s: HybridState) -> np.ndarray:
    """Probability of reading a qubit pattern of Hamming weight gamma, gamma = 0..m."""
    probs = pattern_probabilities(s)
    return np.bincount(popcounts(s.layout.m), weights=probs, minlength=s.layout.m + 1)


def feasible_count_upper_bound(entanglers: list[EntanglerPermutation]) -> int | None:
    """Feasible-region size bound from the sparsest entangler (None when m = 0)."""
    if not entanglers:
        return None
    return min(len(u.flip_set) for u in entanglers)

