import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qipsim.distillation import apply_entanglers_sequential
from qipsim.state import (
    DimensionError,
    HybridState,
    RegisterLayout,
    ZeroProbabilityError,
    apply_hadamard_all_qudits,
    basis_state,
    hadamard_matrix,
    init_state,
    pattern_probabilities,
    postselect_qubits,
    qubit_pattern_probability,
    sample,
)

from conftest import DEMO_FEASIBLE


def dense_hadamard(n: int, d: int, m: int) -> np.ndarray:
    """H_d on every qudit, identity on the qubits, built from the defining matrix."""
    h = np.array([[np.exp(2j * np.pi * a * b / d) for a in range(d)] for b in range(d)]) / np.sqrt(d)
    out = np.eye(1)
    for _ in range(n):
        out = np.kron(out, h)
    return np.kron(out, np.eye(2**m))


@pytest.mark.parametrize("n,d,m,dim", [(1, 2, 0, 2), (2, 3, 1, 18), (5, 3, 4, 3888)])
def test_init_state(n, d, m, dim):
    s = init_state(RegisterLayout(n, d, m))
    assert s.amplitudes.shape == (dim,)
    assert s.amplitudes[0] == 1 and np.count_nonzero(s.amplitudes) == 1


def test_layout_cap(monkeypatch):
    with pytest.raises(DimensionError):
        RegisterLayout(3, 3, 2, cap=100)
    monkeypatch.setenv("QIPSIM_DIM_CAP", "64")
    with pytest.raises(DimensionError):
        RegisterLayout(5, 3, 0)
    assert RegisterLayout(2, 2, 2).dim == 16


def test_layout_validation():
    with pytest.raises(ValueError):
        RegisterLayout(0, 2, 0)
    with pytest.raises(ValueError):
        RegisterLayout(1, 1, 0)


def test_constraint_bit_order():
    lay = RegisterLayout(1, 2, 4)
    assert [lay.constraint_bit(i) for i in range(1, 5)] == [8, 4, 2, 1]
    assert lay.all_ones == 15
    with pytest.raises(IndexError):
        lay.constraint_bit(5)


def test_hadamard_small_cases():
    s = apply_hadamard_all_qudits(init_state(RegisterLayout(1, 2, 0)))
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5])
    s = apply_hadamard_all_qudits(init_state(RegisterLayout(1, 3, 0)))
    assert np.allclose(s.amplitudes, np.ones(3) / np.sqrt(3))
    w = np.exp(2j * np.pi / 3)
    s = apply_hadamard_all_qudits(basis_state(RegisterLayout(1, 3, 0), 1))
    assert np.allclose(s.amplitudes, np.array([1, w, w**2]) / np.sqrt(3))


def test_hadamard_matrix_is_unitary():
    for d in range(2, 7):
        h = hadamard_matrix(d)
        assert np.allclose(h @ h.conj().T, np.eye(d))


@pytest.mark.parametrize("n,d,m", [(1, 3, 0), (2, 3, 1), (3, 2, 2), (2, 4, 1)])
def test_hadamard_matches_dense_kronecker(n, d, m):
    lay = RegisterLayout(n, d, m)
    rng = np.random.default_rng(n * 100 + d * 10 + m)
    v = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    got = apply_hadamard_all_qudits(HybridState(lay, v)).amplitudes
    assert np.allclose(got, dense_hadamard(n, d, m) @ v)


def test_pattern_probabilities_basics(demo):
    lay = RegisterLayout(2, 3, 2)
    s = apply_hadamard_all_qudits(init_state(lay))
    assert qubit_pattern_probability(s, "00") == pytest.approx(1.0)
    assert pattern_probabilities(s).sum() == pytest.approx(1.0)
    psi3 = apply_entanglers_sequential(
        apply_hadamard_all_qudits(init_state(RegisterLayout(5, 3, 4))), demo
    )
    assert qubit_pattern_probability(psi3, "1111") == pytest.approx(6 / 243, abs=1e-12)
    assert pattern_probabilities(psi3).sum() == pytest.approx(1.0)


def test_pattern_validation():
    s = init_state(RegisterLayout(1, 2, 2))
    with pytest.raises(ValueError):
        qubit_pattern_probability(s, "1")
    with pytest.raises(ValueError):
        qubit_pattern_probability(s, "12")
    with pytest.raises(ValueError):
        qubit_pattern_probability(s, 4)


def test_postselect_demo(demo):
    psi3 = apply_entanglers_sequential(
        apply_hadamard_all_qudits(init_state(RegisterLayout(5, 3, 4))), demo
    )
    amps, prob = postselect_qubits(psi3, "1111")
    assert prob == pytest.approx(6 / 243)
    assert list(np.flatnonzero(np.abs(amps) > 1e-12)) == DEMO_FEASIBLE
    assert np.allclose(np.abs(amps[DEMO_FEASIBLE]), 6**-0.5)


def test_postselect_zero_probability():
    s = init_state(RegisterLayout(1, 2, 2))
    with pytest.raises(ZeroProbabilityError):
        postselect_qubits(s, "11")


def test_postselect_bell_like():
    lay = RegisterLayout(1, 2, 1)
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 2**-0.5
    out, prob = postselect_qubits(HybridState(lay, amps), "1")
    assert prob == pytest.approx(0.5)
    assert np.allclose(out, [0, 1])


def test_sample_deterministic_state():
    s = basis_state(RegisterLayout(3, 2, 0), 5)
    assert sample(s, 100, seed=3) == {5: 100}


def test_sample_binomial_spread():
    counts = sample(np.array([0.5, 0.5]), 10**5, seed=11)
    sigma = np.sqrt(10**5 / 4)
    assert abs(counts[0] - 5 * 10**4) < 5 * sigma
    assert counts[0] + counts[1] == 10**5


def test_sample_replay():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert sample(p, 1000, seed=7) == sample(p, 1000, seed=7)
    with pytest.raises(ValueError):
        sample(p, 0, seed=7)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(2, 4), st.integers(0, 2), st.integers(0, 2**31))
def test_hadamard_preserves_norm(n, d, m, seed):
    lay = RegisterLayout(n, d, m)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    v /= np.linalg.norm(v)
    assert apply_hadamard_all_qudits(HybridState(lay, v)).norm() == pytest.approx(1.0)
