"""Dense hybrid qudit-qubit state vectors.

Joint basis index: ``idx = y * 2**m + q`` where ``y`` is the big-endian
base-d qudit index and ``q`` the constraint-register bitstring with
constraint 1 as its most significant bit.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass

import numpy as np

DEFAULT_DIM_CAP = 2**26
POSTSELECT_TOL = 1e-12


class DimensionError(ValueError):
    """Requested register layout exceeds the amplitude cap."""


class ZeroProbabilityError(ValueError):
    """A post-selection pattern has (numerically) zero probability."""


def dim_cap() -> int:
    env = os.environ.get("QIPSIM_DIM_CAP")
    return int(env) if env else DEFAULT_DIM_CAP


@dataclass(frozen=True)
class RegisterLayout:
    n: int
    d: int
    m: int
    cap: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.d < 2 or self.m < 0:
            raise ValueError(f"invalid layout n={self.n} d={self.d} m={self.m}")
        cap = self.cap if self.cap is not None else dim_cap()
        if self.dim > cap:
            raise DimensionError(f"layout needs {self.dim} amplitudes, cap is {cap}")

    @property
    def qudit_dim(self) -> int:
        return self.d**self.n

    @property
    def qubit_dim(self) -> int:
        return 2**self.m

    @property
    def dim(self) -> int:
        return self.qudit_dim * self.qubit_dim

    def constraint_bit(self, i: int) -> int:
        """Bit mask of the qubit that tracks constraint ``i`` (1-based)."""
        if not 1 <= i <= self.m:
            raise IndexError(f"constraint index {i} outside 1..{self.m}")
        return 1 << (self.m - i)

    @property
    def all_ones(self) -> int:
        return self.qubit_dim - 1


@dataclass(frozen=True)
class HybridState:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (self.layout.dim,):
            raise ValueError(
                f"amplitude array shape {self.amplitudes.shape} does not match layout dim {self.layout.dim}"
            )

    def matrix(self) -> np.ndarray:
        """Amplitudes as a (d**n, 2**m) array: rows are qudit indices."""
        return self.amplitudes.reshape(self.layout.qudit_dim, self.layout.qubit_dim)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def replace(self, amplitudes: np.ndarray) -> "HybridState":
        return HybridState(self.layout, amplitudes)


def init_state(layout: RegisterLayout) -> HybridState:
    amps = np.zeros(layout.dim, dtype=complex)
    amps[0] = 1.0
    return HybridState(layout, amps)


def basis_state(layout: RegisterLayout, y: int, q: int = 0) -> HybridState:
    amps = np.zeros(layout.dim, dtype=complex)
    amps[y * layout.qubit_dim + q] = 1.0
    return HybridState(layout, amps)


def hadamard_matrix(d: int) -> np.ndarray:
    """Generalized Hadamard, ``H[beta, alpha] = exp(2 pi i alpha beta / d) / sqrt(d)``."""
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def apply_hadamard_all_qudits(s: HybridState) -> HybridState:
    lay = s.layout
    t = s.amplitudes.reshape((lay.d,) * lay.n + (lay.qubit_dim,))
    # per-axis H_d is the orthonormal inverse DFT
    out = np.fft.ifftn(t, axes=tuple(range(lay.n)), norm="ortho")
    return s.replace(out.reshape(-1))


def _pattern_index(pattern: str | int, m: int) -> int:
    if isinstance(pattern, str):
        if len(pattern) != m or set(pattern) - {"0", "1"}:
            raise ValueError(f"pattern {pattern!r} must be a {m}-bit string")
        return int(pattern, 2) if m else 0
    if not 0 <= pattern < 2**m:
        raise ValueError(f"pattern {pattern} out of range for m={m}")
    return int(pattern)


def pattern_probabilities(s: HybridState) -> np.ndarray:
    """Marginal probability of every qubit pattern q (length 2**m)."""
    return np.sum(np.abs(s.matrix()) ** 2, axis=0)


def qubit_pattern_probability(s: HybridState, pattern: str | int) -> float:
    q = _pattern_index(pattern, s.layout.m)
    return float(np.sum(np.abs(s.matrix()[:, q]) ** 2))


def postselect_qubits(
    s: HybridState, pattern: str | int, tol: float = POSTSELECT_TOL
) -> tuple[np.ndarray, float]:
    """Condition on the qubit register reading ``pattern``.

    Returns the renormalized qudit amplitudes (length d**n) and the
    probability of the pattern.
    """
    q = _pattern_index(pattern, s.layout.m)
    col = s.matrix()[:, q]
    prob = float(np.sum(np.abs(col) ** 2))
    if prob <= tol:
        raise ZeroProbabilityError(f"qubit pattern {pattern!r} is unobservable (p={prob:.3g})")
    return col / np.sqrt(prob), prob


def sample(probs_or_state, shots: int, seed: int) -> dict[int, int]:
    """Draw ``shots`` i.i.d. basis indices from |amp|**2 (or a probability vector)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if isinstance(probs_or_state, HybridState):
        probs = probs_or_state.probabilities()
    else:
        probs = np.asarray(probs_or_state, dtype=float)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    return dict(Counter({int(i): int(c) for i, c in enumerate(counts) if c}))
