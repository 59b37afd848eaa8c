"""Polynomial integer programs over the box {0, ..., d-1}^n.

Holds the problem data types, the JSON problem-file parser, the relation
normalizer, polynomial evaluation (scalar and whole-grid), the base-d index
codec shared by every other module, cost upper bounds and a Hessian-based
convexity probe.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

EPS_NORM = 1e-6
ENUMERATION_CAP = 2**20
RELATIONS = ("<", "<=", ">", ">=")


class ProblemError(ValueError):
    """Malformed or unsupported problem data."""


class NormalizationError(ProblemError):
    """A constraint cannot be brought to the strict ``lhs < h`` form with h > 0."""


class CostBoundError(ProblemError):
    """A cost upper bound does not dominate C(y) + 1 on the feasible region."""


@dataclass(frozen=True)
class Monomial:
    coeff: float
    exponents: tuple[int, ...]

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise ProblemError(f"non-finite coefficient {self.coeff!r}")
        if any(int(e) != e or e < 0 for e in self.exponents):
            raise ProblemError(f"exponents must be non-negative integers: {self.exponents}")
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))

    @property
    def degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class Polynomial:
    """Sum of monomials; canonical form merges equal exponent vectors and drops zeros."""

    terms: tuple[Monomial, ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[Monomial | tuple[float, Sequence[int]]]) -> "Polynomial":
        merged: dict[tuple[int, ...], float] = {}
        for t in terms:
            if not isinstance(t, Monomial):
                t = Monomial(float(t[0]), tuple(t[1]))
            merged[t.exponents] = merged.get(t.exponents, 0.0) + t.coeff
        return cls(tuple(Monomial(c, e) for e, c in merged.items() if c != 0.0))

    @classmethod
    def constant(cls, value: float, n: int) -> "Polynomial":
        return cls.from_terms([(value, (0,) * n)])

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.from_terms(self.terms + other.terms)

    def scale(self, alpha: float) -> "Polynomial":
        return Polynomial.from_terms(Monomial(alpha * t.coeff, t.exponents) for t in self.terms)

    def __neg__(self) -> "Polynomial":
        return self.scale(-1.0)

    def shifted(self, c: float, n: int) -> "Polynomial":
        return self + Polynomial.constant(c, n)

    def constant_term(self) -> float:
        return sum(t.coeff for t in self.terms if t.degree == 0)

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def variables(self) -> list[int]:
        """Zero-based indices of variables that appear with a positive exponent."""
        used: set[int] = set()
        for t in self.terms:
            used.update(b for b, e in enumerate(t.exponents) if e)
        return sorted(used)

    def is_zero(self) -> bool:
        return not self.terms

    def derivative(self, var: int) -> "Polynomial":
        out = []
        for t in self.terms:
            e = t.exponents[var]
            if e == 0:
                continue
            exps = list(t.exponents)
            exps[var] = e - 1
            out.append(Monomial(t.coeff * e, tuple(exps)))
        return Polynomial.from_terms(out)

    def has_integer_coefficients(self) -> bool:
        return all(float(t.coeff).is_integer() for t in self.terms)


@dataclass(frozen=True)
class Constraint:
    """Normalized strict constraint ``lhs < bound``.

    ``shift`` records the constant added to both sides during normalization.
    """

    lhs: Polynomial
    bound: float
    shift: float = 0.0


@dataclass(frozen=True)
class RawConstraint:
    lhs: Polynomial
    relation: str
    bound: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ProblemError(f"unknown relation {self.relation!r}")
        if not math.isfinite(self.bound):
            raise ProblemError("constraint bound must be finite")


@dataclass(frozen=True)
class IpProblem:
    n: int
    d: int
    cost: Polynomial
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ProblemError("n must be >= 1")
        if self.d < 2:
            raise ProblemError("d must be >= 2")
        polys = [self.cost] + [c.lhs for c in self.constraints]
        for p in polys:
            for t in p.terms:
                if len(t.exponents) != self.n:
                    raise ProblemError(
                        f"exponent vector {t.exponents} has length {len(t.exponents)}, expected {self.n}"
                    )
        for c in self.constraints:
            if not c.bound > 0:
                raise ProblemError("normalized constraint bounds must be strictly positive")

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def size(self) -> int:
        return self.d**self.n


# ---------------------------------------------------------------------------
# parsing and normalization


def _parse_terms(raw, n: int) -> Polynomial:
    if not isinstance(raw, list):
        raise ProblemError("terms must be a list")
    terms = []
    for item in raw:
        if not isinstance(item, dict) or "coeff" not in item or "exponents" not in item:
            raise ProblemError(f"term {item!r} needs 'coeff' and 'exponents'")
        coeff, exps = item["coeff"], item["exponents"]
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise ProblemError(f"coefficient {coeff!r} is not a number")
        if not isinstance(exps, list) or len(exps) != n:
            raise ProblemError(f"exponent sequence {exps!r} must have length n={n}")
        if any(isinstance(e, bool) or not isinstance(e, int) for e in exps):
            raise ProblemError(f"exponents must be integers: {exps!r}")
        terms.append(Monomial(float(coeff), tuple(exps)))
    return Polynomial.from_terms(terms)


def parse_raw(doc: dict | str) -> tuple[int, int, Polynomial, list[RawConstraint]]:
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemError("problem document must be a JSON object")
    for key in ("n", "d", "cost"):
        if key not in doc:
            raise ProblemError(f"missing field {key!r}")
    n, d = doc["n"], doc["d"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ProblemError("n must be a positive integer")
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise ProblemError("d must be an integer >= 2")
    cost = _parse_terms(doc["cost"], n)
    raw = []
    for item in doc.get("constraints", []):
        if not isinstance(item, dict) or not {"terms", "relation", "bound"} <= item.keys():
            raise ProblemError(f"constraint {item!r} needs 'terms', 'relation' and 'bound'")
        bound = item["bound"]
        if isinstance(bound, bool) or not isinstance(bound, (int, float)):
            raise ProblemError("constraint bound must be a number")
        raw.append(RawConstraint(_parse_terms(item["terms"], n), item["relation"], float(bound)))
    return n, d, cost, raw


def parse_problem(text: dict | str) -> IpProblem:
    """Parse a problem document (JSON text or decoded dict) into a normalized problem."""
    n, d, cost, raw = parse_raw(text)
    return normalize_problem(n, d, cost, raw)


def _integer_scale(p: Polynomial, max_scale: int = 10**6) -> int | None:
    """Smallest positive integer making every coefficient an integer, if small."""
    scale = 1
    for t in p.terms:
        den = as_rational(t.coeff).denominator
        scale = scale * den // math.gcd(scale, den)
        if scale > max_scale:
            return None
    return scale


def _normalize_one(rc: RawConstraint, n: int, eps: float) -> Constraint:
    lhs, h, rel = rc.lhs, rc.bound, rc.relation
    if not lhs.variables():
        value = lhs.constant_term()
        holds = {"<": value < h, "<=": value <= h, ">": value > h, ">=": value >= h}[rel]
        kind = "tautology" if holds else "contradiction"
        raise NormalizationError(f"constraint with constant lhs {value} {rel} {h} is a {kind}")
    if rel in (">", ">="):
        lhs, h = -lhs, -h
        rel = "<" if rel == ">" else "<="
    if rel == "<=":
        scale = _integer_scale(lhs)
        if scale is not None:
            # scale * lhs is integer-valued: lhs <= h  <=>  scale * lhs < floor(scale * h) + 1
            h = (math.floor(Fraction(h) * scale) + 0.5) / scale
        else:
            h = h + eps
    shift = 0.0
    if h <= 0:
        shift = float(math.floor(-h) + 1)
        lhs, h = lhs.shifted(shift, n), h + shift
    return Constraint(lhs, float(h), shift)


def normalize_problem(
    n: int,
    d: int,
    cost: Polynomial,
    raw: Sequence[RawConstraint],
    eps_norm: float = EPS_NORM,
) -> IpProblem:
    """Rewrite every relation as ``lhs < h`` with ``h > 0``.

    Raises NormalizationError for constraints whose lhs does not depend on any
    variable (tautologies and contradictions are reported, not dropped).
    """
    cons = tuple(_normalize_one(rc, n, eps_norm) for rc in raw)
    return IpProblem(n, d, cost, cons)


def problem_to_dict(p: IpProblem) -> dict:
    def terms(poly):
        return [{"coeff": t.coeff, "exponents": list(t.exponents)} for t in poly.terms]

    return {
        "n": p.n,
        "d": p.d,
        "cost": terms(p.cost),
        "constraints": [
            {"terms": terms(c.lhs), "relation": "<", "bound": c.bound} for c in p.constraints
        ],
    }


# ---------------------------------------------------------------------------
# evaluation and the index codec


def evaluate_poly(p: Polynomial, assignment: Sequence[int], d: int | None = None, exact: bool = False):
    """Evaluate ``p`` at an integer assignment, with 0**0 == 1.

    With ``exact=True`` the result is a Fraction; each coefficient is read as
    the small-denominator rational it was written as (see ``as_rational``).
    """
    if d is not None and any(not 0 <= x < d for x in assignment):
        raise ProblemError(f"assignment {tuple(assignment)} outside [0, {d - 1}]")
    total = Fraction(0) if exact else 0.0
    for t in p.terms:
        if len(t.exponents) != len(assignment):
            raise ProblemError("assignment length does not match exponent length")
        prod = 1
        for x, e in zip(assignment, t.exponents):
            if e:
                prod *= int(x) ** e
        total += (as_rational(t.coeff) if exact else t.coeff) * prod
    return total


def encode_assignment(assignment: Sequence[int], n: int, d: int) -> int:
    """Big-endian base-d code: variable 1 is the most significant digit."""
    if len(assignment) != n:
        raise ProblemError("assignment length must equal n")
    y = 0
    for x in assignment:
        if not 0 <= x < d:
            raise ProblemError(f"digit {x} out of range for d={d}")
        y = y * d + int(x)
    return y


def decode_index(y: int, n: int, d: int) -> tuple[int, ...]:
    if not 0 <= y < d**n:
        raise ProblemError(f"index {y} out of range [0, {d**n - 1}]")
    digits = []
    for _ in range(n):
        y, r = divmod(y, d)
        digits.append(r)
    return tuple(reversed(digits))


def as_rational(x: float, max_denominator: int = 10**6) -> Fraction:
    """The small-denominator rational a float was written as, else its exact value."""
    r = Fraction(x).limit_denominator(max_denominator)
    return r if float(r) == x else Fraction(x)


def grid_from_terms(terms, n: int, d: int, dtype=np.float64) -> np.ndarray:
    """Sum of ``coeff * prod x**e`` over every basis index, shape (d,)*n.

    ``terms`` is a sequence of (coeff, exponents). Only variables with a
    positive exponent somewhere are enumerated; the result is broadcast over
    the others and may be a read-only view.
    """
    used = sorted({b for _, exps in terms for b, e in enumerate(exps) if e})
    k = len(used)
    shape = [1] * n
    for b in used:
        shape[b] = d
    if dtype is object:
        axis = np.array([int(v) for v in range(d)], dtype=object)
    else:
        axis = np.arange(d).astype(dtype)
    sub = np.zeros((d,) * k, dtype=dtype)
    for coeff, exps in terms:
        term = np.full((1,) * k, coeff, dtype=dtype)
        for pos, b in enumerate(used):
            e = exps[b]
            if e:
                s = [1] * k
                s[pos] = d
                term = term * (axis**e).reshape(s)
        sub = sub + term
    return np.broadcast_to(sub.reshape(shape), (d,) * n)


def grid_values(p: Polynomial, n: int, d: int) -> np.ndarray:
    """Float values of ``p`` on the whole box, shape (d,)*n (big-endian layout)."""
    return grid_from_terms([(t.coeff, t.exponents) for t in p.terms], n, d)


def feasibility_mask(problem: IpProblem) -> np.ndarray:
    """Boolean mask over basis indices satisfying every constraint (float path)."""
    mask = np.ones(problem.size, dtype=bool)
    for c in problem.constraints:
        mask &= (grid_values(c.lhs, problem.n, problem.d) < c.bound).reshape(-1)
    return mask


# ---------------------------------------------------------------------------
# cost upper bound


@dataclass(frozen=True)
class CostBound:
    value: float
    mode: str
    notes: tuple[str, ...] = ()


def guaranteed_bound(p: IpProblem) -> float:
    return sum(abs(t.coeff) * (p.d - 1) ** t.degree for t in p.cost.terms) + 1.5


def _feasible_costs_if_enumerable(p: IpProblem) -> np.ndarray | None:
    if p.size > ENUMERATION_CAP:
        return None
    mask = feasibility_mask(p)
    return grid_values(p.cost, p.n, p.d).reshape(-1)[mask]


def _continuous_max(p: IpProblem, starts: int = 16, seed: int = 0) -> float | None:
    from scipy.optimize import minimize

    def f(x):
        return -sum(t.coeff * np.prod(x ** np.array(t.exponents)) for t in p.cost.terms)

    cons = [
        {"type": "ineq", "fun": (lambda x, c=c: c.bound - sum(
            t.coeff * np.prod(x ** np.array(t.exponents)) for t in c.lhs.terms))}
        for c in p.constraints
    ]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        x0 = rng.uniform(0, p.d - 1, size=p.n)
        res = minimize(f, x0, method="SLSQP", bounds=[(0, p.d - 1)] * p.n, constraints=cons)
        if not res.success:
            continue
        if any(con["fun"](res.x) < -1e-7 for con in cons):
            continue
        val = -float(res.fun)
        best = val if best is None else max(best, val)
    return best


def resolve_cost_bound(p: IpProblem, mode: str | float = "guaranteed") -> CostBound:
    """Compute C_ub with its provenance notes; see ``cost_upper_bound``."""
    if isinstance(mode, str) and mode not in ("guaranteed", "paper"):
        try:
            mode = float(mode)
        except ValueError:
            raise ProblemError(f"unknown cost-bound mode {mode!r}") from None
    if mode == "guaranteed":
        return CostBound(guaranteed_bound(p), "guaranteed")
    if mode == "paper":
        cont = _continuous_max(p)
        if cont is None:
            return CostBound(guaranteed_bound(p), "guaranteed",
                             ("continuous search failed; fell back to guaranteed bound",))
        value = cont + 1.5
        costs = _feasible_costs_if_enumerable(p)
        if costs is None:
            return CostBound(value, "paper", ("continuous bound not certified by enumeration",))
        if costs.size and not np.all(costs + 1 < value):
            return CostBound(guaranteed_bound(p), "guaranteed",
                             ("continuous bound violated by an integer point; fell back",))
        return CostBound(value, "paper")
    value = float(mode)
    if not math.isfinite(value):
        raise CostBoundError("override value must be finite")
    costs = _feasible_costs_if_enumerable(p)
    if costs is None:
        return CostBound(value, "override", ("override not verified: instance too large to enumerate",))
    if costs.size and not np.all(costs + 1 < value):
        worst = float(costs.max())
        raise CostBoundError(f"C_ub={value} violates C(y)+1 < C_ub (max feasible cost {worst})")
    return CostBound(value, "override")


def cost_upper_bound(p: IpProblem, mode: str | float = "guaranteed") -> float:
    """Upper bound C_ub with C(y) + 1 < C_ub on the feasible region.

    ``mode`` is ``"guaranteed"`` (sum of |coeff|*(d-1)**deg plus 1.5),
    ``"paper"`` (continuous relaxation maximum plus 1.5, best effort) or a
    number used as an override after checking it against enumeration.
    """
    bound = resolve_cost_bound(p, mode)
    for note in bound.notes:
        warnings.warn(note, stacklevel=2)
    return bound.value


# ---------------------------------------------------------------------------
# convexity


@dataclass
class ConstraintConvexity:
    index: int
    classification: str  # "convex", "non-convex" or "linear"
    witness: tuple[float, ...] | None = None
    witness_eigenvalues: tuple[float, ...] | None = None
    indefinite: bool = False
    min_eigenvalue: float = 0.0
    max_eigenvalue: float = 0.0
    grid_limited: bool = False


@dataclass
class ConvexityReport:
    constraints: list[ConstraintConvexity] = field(default_factory=list)

    def classifications(self) -> list[str]:
        return [c.classification for c in self.constraints]


def hessian(p: Polynomial, n: int) -> list[list[Polynomial]]:
    grads = [p.derivative(i) for i in range(n)]
    return [[grads[i].derivative(j) for j in range(n)] for i in range(n)]


def _probe_points(n: int, d: int, density: int, max_points: int = 20000) -> np.ndarray:
    axis = np.unique(np.concatenate([np.linspace(0, d - 1, density), np.arange(d, dtype=float)]))
    if len(axis) ** n <= max_points:
        return np.array(list(itertools.product(axis, repeat=n)))
    rng = np.random.default_rng(0)
    corners = np.array(list(itertools.product([0.0, d - 1.0], repeat=n))) if 2**n <= max_points // 2 else np.empty((0, n))
    rest = rng.choice(axis, size=(max_points - len(corners), n))
    return np.vstack([corners, rest])


def _eval_poly_points(p: Polynomial, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts))
    for t in p.terms:
        out += t.coeff * np.prod(pts ** np.array(t.exponents, dtype=float), axis=1)
    return out


def convexity_report(p: IpProblem, probe: int = 5, tol: float = 1e-9) -> ConvexityReport:
    """Classify each constraint polynomial via its symbolic Hessian on a probe grid.

    A constraint is non-convex when some probe point has a negative Hessian
    eigenvalue; the first such point is kept as the witness. A convex verdict
    is limited to the probed points.
    """
    pts = _probe_points(p.n, p.d, probe)
    report = ConvexityReport()
    for idx, c in enumerate(p.constraints, start=1):
        H = hessian(c.lhs, p.n)
        if all(h.is_zero() for row in H for h in row):
            report.constraints.append(ConstraintConvexity(idx, "linear"))
            continue
        mats = np.zeros((len(pts), p.n, p.n))
        for i in range(p.n):
            for j in range(p.n):
                if not H[i][j].is_zero():
                    mats[:, i, j] = _eval_poly_points(H[i][j], pts)
        eig = np.linalg.eigvalsh(mats)
        neg = eig[:, 0] < -tol
        entry = ConstraintConvexity(
            idx, "convex", min_eigenvalue=float(eig.min()), max_eigenvalue=float(eig.max())
        )
        if neg.any():
            both = neg & (eig[:, -1] > tol)
            k = int(np.argmax(both)) if both.any() else int(np.argmax(neg))
            entry.classification = "non-convex"
            entry.witness = tuple(float(v) for v in pts[k])
            entry.witness_eigenvalues = tuple(float(v) for v in eig[k])
            entry.indefinite = bool(both.any())
        else:
            entry.grid_limited = True
        report.constraints.append(entry)
    return report
