"""Amplitude amplification of the all-ones constraint pattern.

The diffusion step reflects about the stored |psi_3> vector directly,
which is what the U_f X Z_MC X U_f gate sequence implements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distillation import gamma_histogram
from .state import POSTSELECT_TOL, HybridState, qubit_pattern_probability


class UndecidableError(RuntimeError):
    """The all-ones constraint pattern has no probability mass."""

    def __init__(self, message: str, diagnosis: "Diagnosis | None" = None):
        super().__init__(message)
        self.diagnosis = diagnosis


def target_probability(s: HybridState) -> float:
    return qubit_pattern_probability(s, s.layout.all_ones)


def mark_target(s: HybridState) -> HybridState:
    mat = s.matrix().copy()
    mat[:, s.layout.all_ones] *= -1
    return s.replace(mat.reshape(-1))


def diffuse(s: HybridState, ref: HybridState) -> HybridState:
    """Reflect ``s`` about ``ref``: 2|ref><ref|s> - |s>."""
    overlap = np.vdot(ref.amplitudes, s.amplitudes)
    return s.replace(2 * overlap * ref.amplitudes - s.amplitudes)


def grover_step(s: HybridState, ref: HybridState) -> HybridState:
    return diffuse(mark_target(s), ref)


def rotation_angle(p_target: float) -> float:
    return math.asin(math.sqrt(min(max(p_target, 0.0), 1.0)))


def optimal_iterations(p_target: float) -> int:
    """round(pi / (4 theta) - 1/2) with theta = arcsin(sqrt(P)), never negative."""
    if not p_target > 0:
        raise ValueError("target probability must be positive")
    if p_target > 1 + 1e-12:
        raise ValueError("target probability cannot exceed 1")
    theta = rotation_angle(p_target)
    # round-half-up of pi/(4 theta) - 1/2
    return max(0, math.floor(math.pi / (4 * theta)))


def amplify(
    psi3: HybridState, iterations: int | None = None, tol: float = POSTSELECT_TOL
) -> tuple[HybridState, int, float]:
    """Run the optimal number of Grover steps (or ``iterations`` if given).

    Returns the amplified state, the iteration count and the final
    all-ones pattern probability.
    """
    p = target_probability(psi3)
    if p <= tol:
        raise UndecidableError(
            f"all-ones pattern probability {p:.3g} is below tolerance", detect_undecidable(psi3, tol)
        )
    k = optimal_iterations(p) if iterations is None else iterations
    s = psi3
    for _ in range(k):
        s = grover_step(s, psi3)
    return s, k, target_probability(s)


@dataclass
class Diagnosis:
    decidable: bool
    gamma_max: int
    gamma_masses: list[float]
    relaxations: int
    target_mass: float

    def to_dict(self) -> dict:
        return {
            "decidable": self.decidable,
            "gamma_max": self.gamma_max,
            "gamma_masses": self.gamma_masses,
            "suggested_relaxations": self.relaxations,
            "target_mass": self.target_mass,
        }


def detect_undecidable(psi3: HybridState, tol: float = POSTSELECT_TOL) -> Diagnosis:
    """Read the constraint register's Hamming-weight masses.

    The instance is undecidable when the all-ones mass is at most ``tol``;
    ``relaxations`` is the number of constraints that would have to be
    dropped for the best-satisfied states to become feasible.
    """
    m = psi3.layout.m
    masses = gamma_histogram(psi3)
    target = target_probability(psi3)
    nonzero = [g for g in range(m + 1) if masses[g] > tol]
    gamma_max = max(nonzero) if nonzero else 0
    return Diagnosis(
        decidable=target > tol,
        gamma_max=gamma_max,
        gamma_masses=[float(v) for v in masses],
        relaxations=m - gamma_max,
        target_mass=target,
    )
