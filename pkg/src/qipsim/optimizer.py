"""Cost optimization on the collapsed feasible register and the full pipeline.

Stage II amplitudes are stored as an array of shape (N_ys, 2**l, 2) indexed
by (feasible slot, phase-register value, ancilla); the flat index is
``((slot * 2**l) + k) * 2 + a``. Only the feasible slots are allocated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .amplification import Diagnosis, UndecidableError, amplify, detect_undecidable
from .distillation import apply_entanglers_sequential, build_entanglers
from .problem import IpProblem, ProblemError, as_rational, decode_index, grid_values, resolve_cost_bound
from .state import (
    POSTSELECT_TOL,
    RegisterLayout,
    apply_hadamard_all_qudits,
    dim_cap,
    init_state,
    pattern_probabilities,
    postselect_qubits,
)

DEFAULT_L = 4
MAX_L = 12
BRANCH_FLAG_TOL = 1e-6


class DegenerateObjectiveError(RuntimeError):
    """No ancilla-|0> mass survives: every feasible cost is zero."""


class NegativeCostError(ProblemError):
    """The cost polynomial is negative somewhere on the feasible region."""


@dataclass(frozen=True)
class PhaseTable:
    c_ub: float
    ys: np.ndarray
    costs: np.ndarray
    phases: np.ndarray

    def slot(self, y: int) -> int:
        i = int(np.searchsorted(self.ys, y))
        if i >= len(self.ys) or self.ys[i] != y:
            raise KeyError(f"y={y} is not in the phase table")
        return i

    def phase(self, y: int) -> float:
        return float(self.phases[self.slot(y)])


def build_phase_table(p: IpProblem, feasible, c_ub: float) -> PhaseTable:
    """Normalized phases (C(y) + 1) / C_ub for every feasible index, ascending in y."""
    ys = np.sort(np.asarray(list(feasible), dtype=np.int64))
    costs = grid_values(p.cost, p.n, p.d).reshape(-1)[ys].astype(float)
    if np.any(costs < 0):
        bad = int(ys[np.argmin(costs)])
        raise NegativeCostError(f"cost is negative on feasible index y={bad} (C={costs.min()})")
    phases = (costs + 1.0) / c_ub
    if np.any(phases <= 0) or np.any(phases >= 1):
        raise ValueError(
            f"C_ub={c_ub} too small: needs C(y) + 1 < C_ub (max feasible cost {costs.max()})"
        )
    return PhaseTable(float(c_ub), ys, costs, phases)


def phase_oracle_check(table: PhaseTable, y: int, k: int) -> complex:
    """Eigenvalue of the k-th power of the phase oracle on basis state |y>."""
    return complex(np.exp(2j * np.pi * table.phase(y) * k))


def monomial_phase_product(p: IpProblem, assignment, c_ub: float) -> complex:
    """Phase imprinted term by term, one exp(i 2 pi c x^e / C_ub) factor per monomial."""
    out = 1.0 + 0j
    for t in p.cost.terms:
        val = t.coeff * math.prod(int(x) ** e for x, e in zip(assignment, t.exponents))
        out *= np.exp(2j * np.pi * val / c_ub)
    return out


# ---------------------------------------------------------------------------
# Stage II state and its operations


@dataclass(frozen=True)
class StageTwoState:
    ys: np.ndarray
    l: int
    amplitudes: np.ndarray  # shape (N_ys, 2**l, 2)

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def replace(self, amplitudes: np.ndarray) -> "StageTwoState":
        return StageTwoState(self.ys, self.l, amplitudes)


def init_stage_two(ys, qudit_amplitudes, l: int) -> StageTwoState:
    """Feasible register in the given amplitudes, phase register uniform, ancilla |0>."""
    if not 1 <= l <= MAX_L:
        raise ValueError(f"phase register width must lie in 1..{MAX_L}")
    ys = np.asarray(ys, dtype=np.int64)
    amps = np.zeros((len(ys), 2**l, 2), dtype=complex)
    amps[:, :, 0] = np.asarray(qudit_amplitudes)[:, None] * 2 ** (-l / 2)
    return StageTwoState(ys, l, amps)


def qft(register: np.ndarray, axis: int = -1) -> np.ndarray:
    """|k> -> 2**(-l/2) sum_j exp(+2 pi i jk / 2**l) |j>."""
    return np.fft.ifft(register, axis=axis, norm="ortho")


def inverse_qft(register: np.ndarray, axis: int = -1) -> np.ndarray:
    """|k> -> 2**(-l/2) sum_j exp(-2 pi i jk / 2**l) |j>."""
    return np.fft.fft(register, axis=axis, norm="ortho")


def apply_controlled_phases(s2: StageTwoState, table: PhaseTable) -> StageTwoState:
    if not np.array_equal(s2.ys, table.ys):
        raise ValueError("phase table and Stage II state disagree on the feasible set")
    k = np.arange(2**s2.l)
    factors = np.exp(2j * np.pi * np.outer(table.phases, k))
    return s2.replace(s2.amplitudes * factors[:, :, None])


def qpe(s2: StageTwoState, table: PhaseTable) -> StageTwoState:
    """Controlled powers of the phase oracle followed by the inverse QFT."""
    s = apply_controlled_phases(s2, table)
    return s.replace(inverse_qft(s.amplitudes, axis=1))


def rotation_amplitudes(estimates: np.ndarray, c_ub: float) -> tuple[np.ndarray, np.ndarray]:
    """(|0>, |1>) amplitudes of the ancilla rotation for phase estimates.

    Estimates with C_ub * phi < 1 (including phi = 0) send the ancilla to |1>.
    """
    x = c_ub * np.asarray(estimates, dtype=float)
    valid = x >= 1
    one = np.where(valid, 1.0 / np.where(valid, x, 1.0), 1.0)
    zero = np.sqrt(np.clip(1.0 - one**2, 0.0, 1.0))
    return zero, one


def controlled_rotation(s2: StageTwoState, c_ub: float) -> tuple[StageTwoState, float]:
    """Rotate the ancilla conditioned on the phase-register value j.

    Returns the rotated state and the probability mass routed to |1> by the
    guarded branches (j = 0 or C_ub * j / 2**l < 1).
    """
    j = np.arange(2**s2.l)
    c0, c1 = rotation_amplitudes(j / 2**s2.l, c_ub)
    a0, a1 = s2.amplitudes[:, :, 0], s2.amplitudes[:, :, 1]
    out = np.empty_like(s2.amplitudes)
    out[:, :, 0] = c0 * a0 - c1 * a1
    out[:, :, 1] = c1 * a0 + c0 * a1
    guarded = c_ub * j / 2**s2.l < 1
    guarded_mass = float(np.sum(np.abs(s2.amplitudes[:, guarded, :]) ** 2))
    return s2.replace(out), guarded_mass


def postselect_ancilla_zero(s2: StageTwoState, tol: float = POSTSELECT_TOL) -> tuple[np.ndarray, float]:
    """Joint (slot, j) distribution given ancilla |0>, and the |0> probability p0."""
    probs = np.abs(s2.amplitudes[:, :, 0]) ** 2
    p0 = float(probs.sum())
    if p0 <= tol:
        raise DegenerateObjectiveError("ancilla |0> has zero probability (degenerate objective)")
    return probs / p0, p0


def ideal_stage_two(table: PhaseTable, qudit_amplitudes) -> tuple[np.ndarray, float]:
    """Stage II with an infinitely precise phase register.

    The rotation uses the true phase of every feasible state, so this is the
    exact-phase reference. Returns (distribution over slots, p0).
    """
    zero, _ = rotation_amplitudes(table.phases, table.c_ub)
    probs = np.abs(np.asarray(qudit_amplitudes) * zero) ** 2
    p0 = float(probs.sum())
    if p0 <= POSTSELECT_TOL:
        raise DegenerateObjectiveError("ancilla |0> has zero probability (degenerate objective)")
    return probs / p0, p0


# ---------------------------------------------------------------------------
# phase-register sizing


def _exact_width(costs: np.ndarray, c_ub: float, max_l: int) -> int | None:
    """Smallest l with every (C + 1) / C_ub a multiple of 2**-l, if any."""
    cub = as_rational(c_ub)
    fracs = {(as_rational(float(c)) + 1) / cub for c in costs}
    for l in range(1, max_l + 1):
        if all((f * 2**l).denominator == 1 for f in fracs):
            return l
    return None


def choose_register(
    costs: np.ndarray, c_ub: float, round_bound: bool, n_ys: int, max_l: int = MAX_L
) -> tuple[float, int, bool, list[str]]:
    """Pick (C_ub, l) for ``l="auto"``.

    When the bound may be raised (not an override) it is rounded up to a
    power of two; then the smallest l that represents every phase exactly is
    used. Otherwise the smallest l whose precision resolves the two best
    costs is used. Returns (C_ub, l, exact, notes).
    """
    notes = []
    cap_l = max_l
    while cap_l > 1 and n_ys * 2**cap_l * 2 > dim_cap():
        cap_l -= 1
    if round_bound:
        c_ub = float(2 ** math.ceil(math.log2(c_ub)))
    l = _exact_width(costs, c_ub, cap_l)
    if l is not None:
        return c_ub, l, True, notes
    distinct = np.unique(costs)
    notes.append("no phase-register width represents every phase exactly")
    if len(distinct) < 2:
        return c_ub, min(DEFAULT_L, cap_l), False, notes
    for l in range(DEFAULT_L, cap_l + 1):
        if analysis.resolvable(distinct[-1], distinct[-2], c_ub, 2.0**-l)[0]:
            return c_ub, l, False, notes
    notes.append(f"optimum and runner-up not resolvable at l={cap_l}")
    return c_ub, cap_l, False, notes


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class SolveReport:
    status: str  # "ok", "undecidable" or "degenerate"
    n: int
    d: int
    m: int
    diagnosis: Diagnosis
    grover_iterations: int = 0
    target_probability_before: float = 0.0
    target_probability_after: float = 0.0
    qubit_before: np.ndarray | None = None
    qubit_after: np.ndarray | None = None
    feasible: np.ndarray | None = None
    feasible_costs: np.ndarray | None = None
    c_ub: float | None = None
    c_ub_mode: str | None = None
    l: int | None = None
    phase_mode: str = "qpe"
    exact_phases: bool = False
    joint: np.ndarray | None = None  # (N_ys, 2**l) post-selected distribution
    y_marginal: np.ndarray | None = None
    counts: dict | None = None
    optimum_y: int | None = None
    optimum_assignment: tuple[int, ...] | None = None
    optimum_cost: float | None = None
    estimated_cost: float | None = None
    p0: float | None = None
    p: float | None = None
    p_joint: float | None = None
    repetitions: float | None = None
    repetitions_joint: float | None = None
    p_target: float = 0.99
    resolution_margin: float | None = None
    resample: dict | None = None
    flags: list[str] = field(default_factory=list)

    def raise_for_status(self) -> "SolveReport":
        if self.status == "undecidable":
            raise UndecidableError("feasible region is empty", self.diagnosis)
        if self.status == "degenerate":
            raise DegenerateObjectiveError("every feasible cost is zero")
        return self

    def distributions(self) -> list[tuple[str, int, float]]:
        """Rows (series, basis_index, probability) for the four bar series."""
        rows = []
        for name, arr in (("qubit_before", self.qubit_before), ("qubit_after", self.qubit_after)):
            if arr is not None:
                rows += [(name, q, float(v)) for q, v in enumerate(arr)]
        if self.feasible is not None:
            uni = 1.0 / len(self.feasible)
            rows += [("feasible_before", int(y), uni) for y in self.feasible]
        if self.y_marginal is not None:
            rows += [("feasible_after", int(y), float(v)) for y, v in zip(self.feasible, self.y_marginal)]
        return rows

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in np.asarray(a).ravel()]

        def num(v):
            if v is None:
                return None
            v = float(v)
            return None if math.isinf(v) else v

        return {
            "status": self.status,
            "n": self.n, "d": self.d, "m": self.m,
            "diagnosis": self.diagnosis.to_dict(),
            "grover_iterations": self.grover_iterations,
            "target_probability_before": self.target_probability_before,
            "target_probability_after": self.target_probability_after,
            "feasible": None if self.feasible is None else [int(y) for y in self.feasible],
            "n_ys": None if self.feasible is None else int(len(self.feasible)),
            "feasible_costs": arr(self.feasible_costs),
            "c_ub": self.c_ub,
            "c_ub_mode": self.c_ub_mode,
            "l": self.l,
            "phase_mode": self.phase_mode,
            "exact_phases": self.exact_phases,
            "y_marginal": arr(self.y_marginal),
            "joint": None if self.joint is None else [arr(row) for row in self.joint],
            "counts": None if self.counts is None else {str(k): v for k, v in self.counts.items()},
            "optimum": None if self.optimum_y is None else {
                "y": self.optimum_y,
                "assignment": list(self.optimum_assignment),
                "cost": self.optimum_cost,
                "estimated_cost": self.estimated_cost,
            },
            "p0": self.p0,
            "p": self.p,
            "p_joint": self.p_joint,
            "p_target": self.p_target,
            "repetitions": num(self.repetitions),
            "repetitions_joint": num(self.repetitions_joint),
            "resolution_margin": self.resolution_margin,
            "resample": self.resample,
            "flags": list(self.flags),
        }


def solve(
    problem: IpProblem,
    l: int | str = DEFAULT_L,
    cub: str | float = "guaranteed",
    shots: int | None = None,
    seed: int = 0,
    p_target: float = 0.99,
    phase_mode: str = "qpe",
    resample: bool = False,
) -> SolveReport:
    """Run both stages end to end.

    ``l`` is the phase-register width or ``"auto"``; ``cub`` is a cost-bound
    mode accepted by ``resolve_cost_bound``. ``phase_mode="ideal"`` replaces
    the l-bit phase register with exact phases. With ``shots`` the optimum is
    decoded from a seeded sample instead of the exact distribution.
    """
    if phase_mode not in ("qpe", "ideal"):
        raise ValueError("phase_mode must be 'qpe' or 'ideal'")
    layout = RegisterLayout(problem.n, problem.d, problem.m)
    entanglers = build_entanglers(problem)
    psi2 = apply_hadamard_all_qudits(init_state(layout))
    psi3 = apply_entanglers_sequential(psi2, problem, entanglers)
    diag = detect_undecidable(psi3)
    report = SolveReport("ok", problem.n, problem.d, problem.m, diag, p_target=p_target)
    report.qubit_before = pattern_probabilities(psi3)
    report.target_probability_before = diag.target_mass
    report.flags += [f"constraint {u.index}: lhs within 1e-9 of its bound" for u in entanglers if u.boundary_warning]
    if not diag.decidable:
        report.status = "undecidable"
        return report

    amplified, iters, p_after = amplify(psi3)
    report.grover_iterations = iters
    report.target_probability_after = p_after
    report.qubit_after = pattern_probabilities(amplified)

    qudit_amps, _ = postselect_qubits(amplified, layout.all_ones)
    ys = np.flatnonzero(np.abs(qudit_amps) ** 2 > POSTSELECT_TOL)
    report.feasible = ys
    costs = grid_values(problem.cost, problem.n, problem.d).reshape(-1)[ys].astype(float)
    report.feasible_costs = costs
    if np.all(costs == 0):
        report.status = "degenerate"
        return report

    bound = resolve_cost_bound(problem, cub)
    report.flags += list(bound.notes)
    c_ub, width = bound.value, l
    if phase_mode == "qpe":
        if l == "auto":
            c_ub, width, exact, notes = choose_register(
                costs, c_ub, bound.mode != "override", len(ys)
            )
            report.flags += notes
        else:
            width = int(l)
            exact = _exact_width(costs, c_ub, width) is not None
        report.exact_phases = exact
        report.l = width
    else:
        report.exact_phases = True
    report.c_ub, report.c_ub_mode, report.phase_mode = c_ub, bound.mode, phase_mode

    table = build_phase_table(problem, ys, c_ub)
    amps = qudit_amps[ys]
    try:
        if phase_mode == "ideal":
            marginal, p0 = ideal_stage_two(table, amps)
            joint = marginal[:, None]
        else:
            s2 = qpe(init_stage_two(ys, amps, width), table)
            s2, guarded = controlled_rotation(s2, c_ub)
            if guarded > BRANCH_FLAG_TOL:
                report.flags.append(f"guarded rotation branches carried mass {guarded:.3g}")
            joint, p0 = postselect_ancilla_zero(s2)
            marginal = joint.sum(axis=1)
    except DegenerateObjectiveError:
        report.status = "degenerate"
        return report
    report.joint, report.y_marginal, report.p0 = joint, marginal, p0

    rng = np.random.default_rng(seed)
    if shots:
        flat = joint.ravel() / joint.sum()
        counts = rng.multinomial(shots, flat)
        ycounts = counts.reshape(joint.shape).sum(axis=1)
        report.counts = {int(y): int(c) for y, c in zip(ys, ycounts) if c}
        slot = int(np.argmax(ycounts))
    else:
        slot = int(np.argmax(marginal))
    if resample:
        report.resample = resample_until_success(joint, p0, ys, rng, shots or 1)

    y = int(ys[slot])
    report.optimum_y = y
    report.optimum_assignment = decode_index(y, problem.n, problem.d)
    report.optimum_cost = float(costs[slot])
    if phase_mode == "qpe":
        j_peak = int(np.argmax(joint[slot]))
        report.estimated_cost = j_peak / 2**width * c_ub - 1
    else:
        report.estimated_cost = float(table.phases[slot] * c_ub - 1)
    report.p = float(marginal[slot])
    report.p_joint = report.p * p0
    report.repetitions = analysis.repetitions(min(report.p, 1.0), p_target)
    report.repetitions_joint = analysis.repetitions(min(report.p_joint, 1.0), p_target)
    distinct = np.unique(costs)
    if len(distinct) >= 2:
        eps = 2.0**-width if phase_mode == "qpe" else 0.0
        report.resolution_margin = analysis.resolvable(distinct[-1], distinct[-2], c_ub, eps)[1]
    return report


def resample_until_success(joint: np.ndarray, p0: float, ys: np.ndarray, rng, runs: int) -> dict:
    """Literal repeat-until-|0> loop: returns attempts per run and the y outcomes."""
    flat = joint.ravel() / joint.sum()
    attempts, outcomes = [], []
    for _ in range(runs):
        k = 1
        while rng.random() >= p0:
            k += 1
        attempts.append(k)
        idx = int(rng.choice(flat.size, p=flat))
        outcomes.append(int(ys[idx // joint.shape[1]]))
    return {"attempts": attempts, "outcomes": outcomes, "mean_attempts": float(np.mean(attempts))}
