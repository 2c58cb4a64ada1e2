"""Broadband, unpolarized, zero-anisotropy illumination and radiative rates.

Only the mean intensity of each line enters: the illumination type has no
way to carry a radiation quadrupole, so it can never polarize the atoms by
itself.  A line is a pair of Bohr levels; all its term and fine-structure
components share one mean intensity, evaluated at the Bohr frequency.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .hydrogen_model import CONSTANTS, TransitionTable, bohr_frequency

__all__ = ["planck", "Illumination", "RateSet", "TermRates", "rates", "line_label", "parse_line"]

_SERIES = {1: "Ly", 2: "H", 3: "Pa", 4: "Br", 5: "Pf"}
_GREEK = ["alpha", "beta", "gamma", "delta", "epsilon"]


def planck(T: float, nu: float) -> float:
    """Planck specific intensity B_nu(T) in W m^-2 Hz^-1 sr^-1."""
    if T <= 0 or nu <= 0:
        raise ValueError("temperature and frequency must be positive")
    C = CONSTANTS
    return 2 * C.h * nu**3 / C.c**2 / math.expm1(C.h * nu / (C.k_B * T))


def line_label(n_upper: int, n_lower: int) -> str:
    """``Ly_alpha``, ``H_beta``, ... for the Bohr-level pair."""
    k = n_upper - n_lower - 1
    if n_lower in _SERIES and 0 <= k < len(_GREEK):
        return f"{_SERIES[n_lower]}_{_GREEK[k]}"
    return f"{n_upper}-{n_lower}"


def parse_line(label) -> tuple[int, int]:
    """Inverse of :func:`line_label`; also accepts ``(nu, nl)`` tuples and ``"3-1"``."""
    if isinstance(label, tuple):
        return int(label[0]), int(label[1])
    text = str(label).strip().replace("-", "_").replace(" ", "_")
    m = re.fullmatch(r"(\d+)_(\d+)", text)
    if m:
        return int(m.group(1)), int(m.group(2))
    key = text.lower()
    for nl, prefix in _SERIES.items():
        for k, g in enumerate(_GREEK):
            if key in (f"{prefix}_{g}".lower(), f"{prefix}{g}".lower()):
                return nl + k + 1, nl
    raise ValueError(f"unknown line label {label!r}")


@dataclass(frozen=True)
class Illumination:
    """Isotropic unpolarized radiation.

    ``mode`` is one of ``diluted_planck`` (``dilution * B_T`` in every line),
    ``planck_te`` (undiluted ``B_T``) or ``per_line`` (explicit mean
    intensities).  ``per_line`` entries override the Planck value of the
    listed lines in the other modes.
    """

    mode: str = "diluted_planck"
    T: float = 20000.0
    dilution: float = 0.5
    per_line: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("diluted_planck", "planck_te", "per_line"):
            raise ValueError(f"unknown illumination mode {self.mode!r}")
        if self.mode != "per_line" and self.T <= 0:
            raise ValueError("temperature must be positive")
        if self.dilution < 0:
            raise ValueError("dilution must be non-negative")
        for v in self.per_line.values():
            if v < 0:
                raise ValueError("mean intensities must be non-negative")

    @classmethod
    def planck_te(cls, T: float) -> "Illumination":
        return cls("planck_te", T, 1.0)

    @classmethod
    def dark(cls) -> "Illumination":
        return cls("diluted_planck", 20000.0, 0.0)

    @classmethod
    def only_lines(cls, lines, T: float = 20000.0, dilution: float = 0.5, n_max: int = 6) -> "Illumination":
        """Diluted Planck radiation in the listed lines, darkness in all others."""
        keep = {parse_line(x) for x in lines}
        per = {}
        for nu in range(2, n_max + 1):
            for nl in range(1, nu):
                per[(nu, nl)] = dilution * planck(T, bohr_frequency(nu, nl)) if (nu, nl) in keep else 0.0
        return cls("per_line", T, dilution, per)

    @property
    def anisotropy(self) -> float:
        return 0.0

    def mean_intensity(self, n_upper: int, n_lower: int) -> float:
        for key, val in self.per_line.items():
            if parse_line(key) == (n_upper, n_lower):
                return float(val)
        if self.mode == "per_line":
            raise KeyError(f"no mean intensity given for line {line_label(n_upper, n_lower)}")
        nu = bohr_frequency(n_upper, n_lower)
        w = 1.0 if self.mode == "planck_te" else self.dilution
        return w * planck(self.T, nu) if w else 0.0

    def occupation(self, n_upper: int, n_lower: int) -> float:
        """Photon occupation number ``J c^2 / (2 h nu^3)`` of the line."""
        nu = bohr_frequency(n_upper, n_lower)
        if self.mode == "planck_te" and not self.per_line:
            return 1.0 / math.expm1(CONSTANTS.h * nu / (CONSTANTS.k_B * self.T))
        return self.mean_intensity(n_upper, n_lower) * CONSTANTS.c**2 / (2 * CONSTANTS.h * nu**3)


@dataclass(frozen=True)
class TermRates:
    upper: tuple
    lower: tuple
    R_abs: float  # per atom in the lower term
    R_spont: float
    R_stim: float

    @property
    def R_down(self) -> float:
        return self.R_spont + self.R_stim


@dataclass(frozen=True)
class RateSet:
    """Term-pair rates plus the photon occupation of each line."""

    terms: dict  # (upper, lower) -> TermRates
    occupation: dict  # (n_upper, n_lower) -> nbar

    def __getitem__(self, key) -> TermRates:
        return self.terms[key]


def rates(ill: Illumination, table: TransitionTable) -> RateSet:
    """Absorption, spontaneous and stimulated rates of every dipole term pair."""
    occ = {}
    out = {}
    for (up, lo), tr in table.entries.items():
        line = (up[0], lo[0])
        if line not in occ:
            occ[line] = ill.occupation(*line)
        nbar = occ[line]
        g_ratio = (2 * up[1] + 1) / (2 * lo[1] + 1)
        out[(up, lo)] = TermRates(up, lo, g_ratio * tr.A * nbar, tr.A, tr.A * nbar)
    return RateSet(out, occ)
