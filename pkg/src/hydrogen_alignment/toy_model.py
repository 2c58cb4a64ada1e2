"""Restricted 1S/2S/2P/3P hydrogen model without fine structure.

Six stationary balance equations in the unknowns N_1S, N_2S, N_2P, N_3P, the
2P alignment ``a_2P`` and ``c_2S2P`` (imaginary part of the 2S-2P orientation
coherence), with rates ``R_nn'`` for Bohr level n -> n'.  The 3P balance is
linearly dependent on the others and is swapped for the trace condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radiation_field import Illumination, RateSet, rates
from .hydrogen_model import restrict_to_toy

__all__ = [
    "ToyRates",
    "ToySolution",
    "toy_matrix",
    "toy_solve",
    "toy_closed_form",
    "two_term_factor",
    "toy_lyman_alpha_blp",
]

SQ6 = math.sqrt(6.0)


@dataclass(frozen=True)
class ToyRates:
    R12: float
    R13: float
    R21: float
    R23: float
    R31: float
    R32: float

    def __post_init__(self):
        for k, v in self.as_dict().items():
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{k} must be finite and non-negative, got {v}")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("R12", "R13", "R21", "R23", "R31", "R32")}

    @property
    def max_rate(self) -> float:
        return max(self.as_dict().values())

    @classmethod
    def from_rates(cls, rs: RateSet) -> "ToyRates":
        S1, S2, P2, P3 = (1, 0), (2, 0), (2, 1), (3, 1)
        ly_a, ly_b, h_a = rs[(P2, S1)], rs[(P3, S1)], rs[(P3, S2)]
        return cls(
            R12=ly_a.R_abs,
            R13=ly_b.R_abs,
            R21=ly_a.R_down,
            R23=h_a.R_abs,
            R31=ly_b.R_down,
            R32=h_a.R_down,
        )

    @classmethod
    def from_illumination(cls, ill: Illumination) -> "ToyRates":
        return cls.from_rates(rates(ill, restrict_to_toy().transitions()))

    def without_3P(self) -> "ToyRates":
        """Two-term limit: every process involving 3P switched off."""
        return ToyRates(self.R12, 0.0, self.R21, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ToySolution:
    N_1S: float
    N_2S: float
    N_2P: float
    N_3P: float
    a_2P: float
    c_2S2P: float
    omega_E: float
    imbalance: float = None  # N_2P - 3 N_2S, solved for directly

    def __post_init__(self):
        if self.imbalance is None:
            object.__setattr__(self, "imbalance", self.N_2P - 3 * self.N_2S)

    @property
    def populations(self) -> tuple:
        return (self.N_1S, self.N_2S, self.N_2P, self.N_3P)

    @property
    def normalized_alignment(self) -> float:
        """``a_2P / (N_2P - 3 N_2S)``; NaN when the imbalance vanishes."""
        d = self.imbalance
        return self.a_2P / d if d != 0 else float("nan")


def toy_matrix(r: ToyRates, omega_E: float) -> np.ndarray:
    """The six balance equations as rows, columns (N1S, N2S, N2P, N3P, a2P, c)."""
    w = omega_E
    return np.array(
        [
            [r.R12 + r.R13, 0.0, -r.R21, -r.R31, 0.0, 0.0],
            [0.0, r.R23, 0.0, -r.R32, 0.0, -6 * w],
            [r.R12, 0.0, -r.R21, 0.0, 0.0, -6 * w],
            [r.R13, r.R23, 0.0, -(r.R31 + r.R32), 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, r.R21, -2 * SQ6 * w],
            [0.0, 3 * w, -w, 0.0, SQ6 * w, 0.5 * (r.R23 + r.R21)],
        ]
    )


def toy_solve(r: ToyRates, omega_E: float) -> ToySolution:
    """Stationary solution of the restricted model at Stark frequency ``omega_E`` (rad/s).

    Without any 3P rate the 3P unknown and its balance are dropped and the
    1S balance is swapped for the trace condition.
    """
    if r.R21 <= 0:
        raise ValueError("R21 must be positive")
    if r.R12 == 0 and r.R13 == 0 and r.R23 == 0:
        raise np.linalg.LinAlgError("no pumping: the restricted system is singular")
    A = toy_matrix(r, omega_E)
    b = np.zeros(6)
    has_3P = any((r.R13, r.R31, r.R23, r.R32))
    swap = 3 if has_3P else 0
    A[swap] = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0]
    b[swap] = 1.0
    if omega_E:
        # coherence balance divided by omega_E: exact population coefficients 3 and -1
        A[5] = [0.0, 3.0, -1.0, 0.0, SQ6, 0.5 * (r.R23 + r.R21) / omega_E]
    # unknowns (N1S, N2S, D, N3P, a, c) with N2P = D + 3 N2S; D is small near equilibrium
    sub = np.eye(6)
    sub[2, 1] = 3.0
    A = A @ sub
    keep = [0, 1, 2, 3, 4, 5] if has_3P else [0, 1, 2, 4, 5]
    A, b = A[np.ix_(keep, keep)], b[keep]
    y = np.zeros(6)
    z = np.linalg.solve(A, b)
    z += np.linalg.solve(A, b - A @ z)
    y[keep] = z
    N1, N2S, D, N3P, a, c = y
    return ToySolution(N1, N2S, D + 3 * N2S, N3P, a, c, omega_E, D)


def toy_residual(r: ToyRates, sol: ToySolution) -> np.ndarray:
    """Residuals of all six original equations (including the replaced one)."""
    x = np.array([sol.N_1S, sol.N_2S, sol.N_2P, sol.N_3P, sol.a_2P, sol.c_2S2P])
    return toy_matrix(r, sol.omega_E) @ x


def toy_closed_form(r: ToyRates, populations, omega_E: float) -> tuple[float, float]:
    """Closed-form ``(a_2P, c_2S2P)`` from the 2S and 2P populations."""
    if r.R21 <= 0:
        raise ValueError("R21 must be positive")
    if isinstance(populations, ToySolution):
        imbalance = populations.imbalance
    else:
        _, N2S, N2P, _ = populations
        imbalance = N2P - 3 * N2S
    c = 2 * r.R21 * omega_E / (r.R21 * (r.R21 + r.R23) + 24 * omega_E**2) * imbalance
    a = 2 * SQ6 / r.R21 * c * omega_E
    return a, c


def two_term_factor(r: ToyRates) -> float:
    """``R12 R23 R31 - 3 R13 R32 R21``; sign of N_2P - 3 N_2S, zero without 3P."""
    return r.R12 * r.R23 * r.R31 - 3 * r.R13 * r.R32 * r.R21


def toy_lyman_alpha_blp(sol: ToySolution) -> float:
    """Ly-alpha linear polarization seen at 90 deg from the field, positive perpendicular to it.

    For a P -> S transition the emission depends only on the 2P population
    and alignment.
    """
    den = 4 * sol.N_2P - SQ6 * sol.a_2P
    return 3 * SQ6 * sol.a_2P / den if den else 0.0
