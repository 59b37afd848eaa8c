import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qipsim.amplification import (
    UndecidableError,
    amplify,
    detect_undecidable,
    diffuse,
    grover_step,
    mark_target,
    optimal_iterations,
    rotation_angle,
    target_probability,
)
from qipsim.distillation import apply_entanglers_sequential
from qipsim.problem import Constraint, IpProblem, Polynomial
from qipsim.state import HybridState, RegisterLayout, apply_hadamard_all_qudits, basis_state, init_state

from conftest import DEMO_FEASIBLE, poly


def psi3_of(p):
    s = apply_hadamard_all_qudits(init_state(RegisterLayout(p.n, p.d, p.m)))
    return apply_entanglers_sequential(s, p)


def quarter_instance():
    """Exactly one quarter of the box is feasible: x1 < 1 and x2 < 1 over d = 2."""
    return IpProblem(
        2, 2, poly((1, (1, 0))), (Constraint(poly((1, (1, 0))), 1.0), Constraint(poly((1, (0, 1))), 1.0))
    )


def test_mark_target_basics():
    lay = RegisterLayout(1, 3, 2)
    s = basis_state(lay, 0, 3)
    assert np.array_equal(mark_target(s).amplitudes, -s.amplitudes)
    s = basis_state(lay, 0, 0)
    assert np.array_equal(mark_target(s).amplitudes, s.amplitudes)


def test_mark_target_demo(demo):
    psi3 = psi3_of(demo)
    marked = mark_target(psi3)
    diff = np.flatnonzero(~np.isclose(marked.amplitudes, psi3.amplitudes))
    assert len(diff) == 6
    assert [int(i) // 16 for i in diff] == DEMO_FEASIBLE
    assert all(int(i) % 16 == 15 for i in diff)


def test_diffuse_fixed_point_and_orthogonal():
    lay = RegisterLayout(1, 2, 1)
    ref = HybridState(lay, np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2))
    orth = HybridState(lay, np.array([1, -1, 0, 0], dtype=complex) / np.sqrt(2))
    assert np.allclose(diffuse(ref, ref).amplitudes, ref.amplitudes)
    assert np.allclose(diffuse(orth, ref).amplitudes, -orth.amplitudes)


def test_one_grover_step_demo(demo):
    psi3 = psi3_of(demo)
    theta = math.asin(math.sqrt(6 / 243))
    p1 = target_probability(grover_step(psi3, psi3))
    assert p1 == pytest.approx(math.sin(3 * theta) ** 2, abs=1e-12)
    assert p1 == pytest.approx(0.2078, abs=1e-4)


def test_optimal_iterations_examples():
    assert rotation_angle(6 / 243) == pytest.approx(0.15778, abs=1e-5)
    assert optimal_iterations(6 / 243) == 4
    assert optimal_iterations(1.0) == 0
    assert optimal_iterations(0.25) == 1
    with pytest.raises(ValueError):
        optimal_iterations(0.0)
    with pytest.raises(ValueError):
        optimal_iterations(1.5)


@given(st.floats(1e-6, 1.0))
def test_optimal_iterations_is_nearest_integer(p):
    theta = rotation_angle(p)
    k = optimal_iterations(p)
    target = math.pi / (4 * theta) - 0.5
    assert abs(k - target) <= 0.5 + 1e-9


def test_amplify_demo(demo):
    out, k, prob = amplify(psi3_of(demo))
    theta = math.asin(math.sqrt(6 / 243))
    assert k == 4
    assert prob == pytest.approx(math.sin(9 * theta) ** 2, abs=1e-9)
    assert prob >= 0.97
    assert out.norm() == pytest.approx(1.0)


def test_amplify_quarter_instance():
    out, k, prob = amplify(psi3_of(quarter_instance()))
    assert k == 1
    assert prob == pytest.approx(1.0, abs=1e-12)


def test_amplify_full_feasibility():
    p = IpProblem(1, 3, poly((1, (1,))), (Constraint(poly((1, (1,))), 5.0),))
    psi3 = psi3_of(p)
    out, k, prob = amplify(psi3)
    assert k == 0 and prob == pytest.approx(1.0)
    assert np.array_equal(out.amplitudes, psi3.amplitudes)


def test_amplify_empty_region(empty_feasible):
    with pytest.raises(UndecidableError) as err:
        amplify(psi3_of(empty_feasible))
    assert err.value.diagnosis.relaxations == 1


def test_detect_undecidable(demo, empty_feasible):
    d = detect_undecidable(psi3_of(demo))
    assert d.decidable and d.gamma_max == 4 and d.relaxations == 0
    d = detect_undecidable(psi3_of(empty_feasible))
    assert not d.decidable
    assert d.gamma_max == empty_feasible.m - 1
    assert d.relaxations == 1
    assert sum(d.gamma_masses) == pytest.approx(1.0)


def test_detect_m_zero():
    p = IpProblem(1, 3, poly((1, (1,))))
    d = detect_undecidable(psi3_of(p))
    assert d.decidable and d.gamma_max == 0 and d.relaxations == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 26))
def test_amplification_follows_closed_form(k):
    # k feasible points out of 27 via the single constraint x1*9 + x2*3 + x3 < k
    p = IpProblem(3, 3, Polynomial(), (Constraint(poly((9, (1, 0, 0)), (3, (0, 1, 0)), (1, (0, 0, 1))), float(k)),))
    psi3 = psi3_of(p)
    assert target_probability(psi3) == pytest.approx(k / 27)
    theta = math.asin(math.sqrt(k / 27))
    s = psi3
    for j in range(1, 4):
        s = grover_step(s, psi3)
        assert target_probability(s) == pytest.approx(math.sin((2 * j + 1) * theta) ** 2, abs=1e-10)
        assert s.norm() == pytest.approx(1.0)
