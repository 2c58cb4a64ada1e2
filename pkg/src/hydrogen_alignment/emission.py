"""Frequency-integrated Stokes emissivities of hydrogen lines.

For a line between an upper and a lower set of states, with dipole matrices
``D_i = <l|r_i|u>`` and two real polarization unit vectors ``e1, e2``
spanning the plane of the sky, the coherency matrix

    C_jk = Tr( (e_j . D) rho_u (e_k . D)^dagger )

sums upper-level coherences coherently and lower sublevels incoherently.
Then I = C11 + C22, Q = C11 - C22, U = 2 Re C12 and V = -2 Im C12, with V > 0
for counter-clockwise rotation of the field seen by the observer (positive
helicity along the propagation direction).  Only spontaneous emission is
counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density_matrix import DensityMatrix
from .hydrogen_model import CONSTANTS, bohr_frequency, _emission_kappa, spherical_to_cartesian, term_label
from .radiation_field import line_label, parse_line

__all__ = ["ViewingGeometry", "StokesResult", "stokes_emissivity", "blp", "bcp", "resolve_line", "CSV_HEADER"]

CSV_HEADER = ("line", "view_theta_deg", "view_phi_deg", "I", "Q", "U", "V", "blp", "bcp")


@dataclass(frozen=True)
class ViewingGeometry:
    """Propagation direction towards the observer and the reference direction of positive Q."""

    direction: tuple
    reference_direction: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        e = np.asarray(self.reference_direction, dtype=float)
        if d.shape != (3,) or e.shape != (3,):
            raise ValueError("directions must be 3-vectors")
        if abs(d @ d - 1) > 1e-12 or abs(e @ e - 1) > 1e-12 or abs(d @ e) > 1e-12:
            raise ValueError("direction and reference_direction must be orthonormal")
        object.__setattr__(self, "direction", tuple(d))
        object.__setattr__(self, "reference_direction", tuple(e))

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "ViewingGeometry":
        """View at inclination ``theta`` and azimuth ``phi`` (radians) from the z axis.

        The reference direction is the azimuthal unit vector, perpendicular to
        the z axis, so Q > 0 means polarization perpendicular to the
        projected quantization axis.
        """
        st, ct, sp_, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
        return cls((st * cp, st * sp_, ct), (-sp_, cp, 0.0))

    @property
    def angles(self) -> tuple[float, float]:
        x, y, z = self.direction
        return math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x) % (2 * math.pi) if (x or y) else 0.0

    @property
    def second_direction(self) -> np.ndarray:
        return np.cross(self.direction, self.reference_direction)


@dataclass(frozen=True)
class StokesResult:
    I: float
    Q: float
    U: float
    V: float

    def __add__(self, other: "StokesResult") -> "StokesResult":
        return StokesResult(self.I + other.I, self.Q + other.Q, self.U + other.U, self.V + other.V)

    def scaled(self, w: float) -> "StokesResult":
        return StokesResult(w * self.I, w * self.Q, w * self.U, w * self.V)

    @property
    def blp(self) -> float:
        return blp(self)

    @property
    def bcp(self) -> float:
        return bcp(self)

    @property
    def linear_degree(self) -> float:
        return math.hypot(self.Q, self.U) / self.I


def blp(result: StokesResult) -> float:
    """Signed fractional linear polarization ``Q / I``."""
    if not result.I > 0:
        raise ValueError("line intensity is zero; polarization undefined")
    return result.Q / result.I


def bcp(result: StokesResult) -> float:
    """Fractional circular polarization ``V / I``."""
    if not result.I > 0:
        raise ValueError("line intensity is zero; polarization undefined")
    return result.V / result.I


def resolve_line(scheme, line):
    """Upper and lower state index lists (per shell) for a line.

    ``line`` may be a label (``"Ly_alpha"``), a shell pair ``(3, 2)`` or a term
    pair ``((2, 1), (1, 0))``.  Shell pairs include every term component.
    """
    if isinstance(line, tuple) and len(line) == 2 and all(isinstance(t, tuple) for t in line):
        (nu, Lu), (nl, Ll) = line
        if abs(Lu - Ll) != 1 or nu <= nl:
            raise ValueError(f"{term_label(nu, Lu)}-{term_label(nl, Ll)} is not a dipole-allowed emission line")
        up = [i for i, s in enumerate(scheme.shell_states(nu)) if s.L == Lu]
        lo = [i for i, s in enumerate(scheme.shell_states(nl)) if s.L == Ll]
        label = f"{term_label(nu, Lu)}-{term_label(nl, Ll)}"
    else:
        nu, nl = parse_line(line)
        if nu <= nl:
            raise ValueError(f"line {line!r} has no emission component")
        up = list(range(len(scheme.shell_states(nu))))
        lo = list(range(len(scheme.shell_states(nl))))
        label = line_label(nu, nl)
    if not up or not lo or nu not in scheme.shells or nl not in scheme.shells:
        raise ValueError(f"line {line!r} is not part of the level scheme")
    return nu, nl, up, lo, label


def stokes_emissivity(rho: DensityMatrix, line, geom: ViewingGeometry) -> StokesResult:
    """Spontaneous-emission Stokes emissivities (W sr^-1 per atom) of a line."""
    scheme = rho.scheme
    nu, nl, up, lo, _ = resolve_line(scheme, line)
    su = [scheme.shell_states(nu)[i] for i in up]
    sl = [scheme.shell_states(nl)[i] for i in lo]
    D = spherical_to_cartesian(scheme.dipole_matrix(sl, su))
    if not np.any(D):
        raise ValueError(f"line {line!r} is dipole forbidden")
    r = rho.blocks[nu][np.ix_(up, up)]
    A1 = np.einsum("i,ijk->jk", np.asarray(geom.reference_direction), D)
    A2 = np.einsum("i,ijk->jk", geom.second_direction, D)
    C11 = np.einsum("ij,jk,ik->", A1, r, A1.conj()).real
    C22 = np.einsum("ij,jk,ik->", A2, r, A2.conj()).real
    C12 = np.einsum("ij,jk,ik->", A1, r, A2.conj())
    nu_hz = bohr_frequency(nu, nl, scheme.constants)
    scale = CONSTANTS.h * nu_hz * _emission_kappa(nu_hz, scheme.constants) * 3 / (8 * math.pi)
    return StokesResult(
        scale * (C11 + C22), scale * (C11 - C22), scale * 2 * C12.real, scale * -2 * C12.imag
    )


def csv_row(line_name: str, geom: ViewingGeometry, s: StokesResult) -> list:
    th, ph = geom.angles
    p_l = s.Q / s.I if s.I > 0 else float("nan")
    p_c = s.V / s.I if s.I > 0 else float("nan")
    return [line_name, math.degrees(th), math.degrees(ph), s.I, s.Q, s.U, s.V, p_l, p_c]
