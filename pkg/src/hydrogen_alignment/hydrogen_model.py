"""Hydrogen level scheme, radial dipole integrals and Einstein coefficients.

States are ``|n L S=1/2 J M>``.  Energies are kept as angular frequencies
relative to the shell centroid; only transition frequencies between Bohr
levels enter the radiative rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import constants as _sc

from .angular_momentum import sixj

__all__ = [
    "CONSTANTS",
    "PhysicalConstants",
    "State",
    "LevelScheme",
    "Transition",
    "TransitionTable",
    "build_levels",
    "restrict_to_toy",
    "radial_dipole",
    "einstein_A",
    "bohr_frequency",
    "fine_structure_offset",
    "term_label",
    "LAMB_SHIFT_2S_HZ",
]

L_LETTERS = "SPDFGHIK"
LAMB_SHIFT_2S_HZ = 1057.845e6


@dataclass(frozen=True)
class PhysicalConstants:
    e0: float = _sc.e
    a0: float = _sc.physical_constants["Bohr radius"][0]
    hbar: float = _sc.hbar
    mu_bohr: float = _sc.physical_constants["Bohr magneton"][0]
    c: float = _sc.c
    k_B: float = _sc.k
    h: float = _sc.h
    eps0: float = _sc.epsilon_0
    alpha: float = _sc.fine_structure
    m_e: float = _sc.m_e
    rydberg_hz: float = _sc.physical_constants["Rydberg constant times c in Hz"][0]

    @property
    def omega_E_per_V_per_m(self) -> float:
        """Stark angular frequency per unit field, ``a0 e0 / hbar``."""
        return self.a0 * self.e0 / self.hbar

    @property
    def omega_B_per_tesla(self) -> float:
        """Larmor angular frequency per tesla, ``mu_B / hbar``."""
        return self.mu_bohr / self.hbar


CONSTANTS = PhysicalConstants()


def term_label(n: int, L: int) -> str:
    return f"{n}{L_LETTERS[L]}"


@dataclass(frozen=True, order=True)
class State:
    """A magnetic sublevel; ``J2`` and ``M2`` are twice J and M."""

    n: int
    L: int
    J2: int
    M2: int

    @property
    def J(self) -> float:
        return self.J2 / 2

    @property
    def M(self) -> float:
        return self.M2 / 2

    @property
    def term(self) -> tuple[int, int]:
        return (self.n, self.L)

    @property
    def level(self) -> tuple[int, int, int]:
        return (self.n, self.L, self.J2)

    def __str__(self) -> str:
        return f"{term_label(self.n, self.L)}{self.J2}/2,{self.M2}/2"


# ---------------------------------------------------------------------------
# radial integrals


def _check_nl(n: int, L: int) -> None:
    if not (isinstance(n, (int, np.integer)) and n >= 1 and 0 <= L < n):
        raise ValueError(f"invalid hydrogen term n={n}, L={L}")


def _hyp2f1_poly(a: int, b: int, c: int, x: Fraction) -> Fraction:
    """Terminating Gauss series 2F1(a, b; c; x) for a non-positive integer a or b."""
    total = Fraction(0)
    term = Fraction(1)
    k = 0
    while True:
        total += term
        if (a + k) == 0 or (b + k) == 0:
            return total
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1)) * x
        k += 1


def _gordon(n: int, l: int, n2: int) -> float:
    """Gordon's closed form for the radial integral between (n, l) and (n2, l-1), n != n2."""
    pref = Fraction(
        math.factorial(n + l) * math.factorial(n2 + l - 1),
        math.factorial(n - l - 1) * math.factorial(n2 - l),
    )
    x = Fraction(-4 * n * n2, (n - n2) ** 2)
    nr, nr2 = n - l - 1, n2 - l
    bracket = _hyp2f1_poly(-nr, -nr2, 2 * l, x) - Fraction(n - n2, n + n2) ** 2 * _hyp2f1_poly(
        -nr - 2, -nr2, 2 * l, x
    )
    rational = (
        Fraction((-1) ** (n2 - l), 4 * math.factorial(2 * l - 1))
        * Fraction(4 * n * n2) ** (l + 1)
        * Fraction(n - n2) ** (n + n2 - 2 * l - 2)
        / Fraction(n + n2) ** (n + n2)
        * bracket
    )
    return float(rational) * math.sqrt(pref)


def radial_dipole(n: int, L: int, n2: int, L2: int) -> float:
    """Signed radial integral ``<nL|r|n2 L2>`` in Bohr radii.

    Radial functions follow the convention that they are positive near the
    origin.  Only ``|L - L2| == 1`` is allowed.
    """
    _check_nl(n, L)
    _check_nl(n2, L2)
    if abs(L - L2) != 1:
        raise ValueError(f"radial dipole requires |L-L'| = 1, got L={L}, L'={L2}")
    if L < L2:
        n, L, n2, L2 = n2, L2, n, L
    if n == n2:
        return -1.5 * n * math.sqrt(n * n - L * L)
    return _gordon(n, L, n2)


def bohr_frequency(n_upper: int, n_lower: int, constants: PhysicalConstants = CONSTANTS) -> float:
    """Transition frequency (Hz) between Bohr levels."""
    return constants.rydberg_hz * (1.0 / n_lower**2 - 1.0 / n_upper**2)


def _emission_kappa(nu: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """``omega^3 e^2 / (3 pi eps0 hbar c^3)`` times a0^2: A per unit |<l|r|u>|^2 in a0^2."""
    C = constants
    w = 2 * math.pi * nu
    return w**3 * C.e0**2 * C.a0**2 / (3 * math.pi * C.eps0 * C.hbar * C.c**3)


def einstein_A(
    upper: tuple[int, int],
    lower: tuple[int, int],
    radial: float | None = None,
    nu: float | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Spontaneous term-to-term rate A(upper -> lower) in s^-1.

    ``radial`` (a0) and ``nu`` (Hz) default to the hydrogenic values and can
    be overridden to probe the A ~ nu^3 d^2 scaling.
    """
    (nu_n, Lu), (nl, Ll) = upper, lower
    _check_nl(nu_n, Lu)
    _check_nl(nl, Ll)
    if abs(Lu - Ll) != 1:
        raise ValueError(f"{term_label(*upper)}->{term_label(*lower)} is not dipole allowed")
    if nu_n <= nl:
        raise ValueError("upper term must lie in a higher Bohr level")
    if radial is None:
        radial = radial_dipole(nu_n, Lu, nl, Ll)
    if nu is None:
        nu = bohr_frequency(nu_n, nl, constants)
    return _emission_kappa(nu, constants) * max(Lu, Ll) / (2 * Lu + 1) * radial**2


def dirac_energy(n: int, J: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Dirac bound-state energy (J) excluding rest mass."""
    a = constants.alpha
    k = J + 0.5
    delta = k - math.sqrt(k * k - a * a)
    return constants.m_e * constants.c**2 * (1.0 / math.sqrt(1.0 + (a / (n - delta)) ** 2) - 1.0)


def fine_structure_offset(n: int, J, enabled: bool = True, constants: PhysicalConstants = CONSTANTS) -> float:
    """Dirac fine-structure offset (rad/s) of level (n, J) from the shell centroid.

    The centroid is the (2J+1)-weighted mean over every |n L J M> state of
    the shell, so offsets of a shell average to zero.
    """
    J = float(J)
    if n < 1 or not (0.5 <= J <= n - 0.5) or (2 * J) % 2 != 1:
        raise ValueError(f"invalid level n={n}, J={J}")
    if not enabled:
        return 0.0
    # each J < n-1/2 is realised by two terms (L = J +- 1/2), J = n-1/2 by one
    num = den = 0.0
    for L in range(n):
        for Jp in (L - 0.5, L + 0.5):
            if Jp < 0.5:
                continue
            g = 2 * Jp + 1
            num += g * dirac_energy(n, Jp, constants)
            den += g
    return (dirac_energy(n, J, constants) - num / den) / constants.hbar


# ---------------------------------------------------------------------------
# level scheme


@dataclass(frozen=True)
class Transition:
    upper: tuple[int, int]
    lower: tuple[int, int]
    radial: float  # a0
    A: float  # s^-1
    nu: float  # Hz

    @property
    def B_ratio(self) -> float:
        """``B_ul / A = c^2 / (2 h nu^3)``: converts mean intensity to photon occupation."""
        return CONSTANTS.c**2 / (2 * CONSTANTS.h * self.nu**3)

    @property
    def label(self) -> str:
        return f"{term_label(*self.upper)}-{term_label(*self.lower)}"


@dataclass(frozen=True)
class TransitionTable:
    entries: dict  # (upper term, lower term) -> Transition
    stark_couplings: dict  # (term, term') same n, |dL|=1 -> radial (a0)

    def lines(self) -> list[tuple[int, int]]:
        """Bohr-level pairs (n_upper, n_lower) with at least one dipole transition."""
        return sorted({(u[0], l[0]) for (u, l) in self.entries}, key=lambda p: (p[1], p[0]))


@dataclass
class LevelScheme:
    """Enumeration of the |n L J M> states of a (possibly restricted) hydrogen model.

    ``terms`` lists the (n, L) terms kept; states are ordered by shell, term,
    J and decreasing M.
    """

    n_max: int
    fine_structure: bool = True
    lamb_shift_hz: float = 0.0
    terms: tuple = None
    states: list = field(init=False)
    energies: np.ndarray = field(init=False)
    constants: PhysicalConstants = CONSTANTS

    def __post_init__(self):
        if not (1 <= self.n_max <= 6):
            raise ValueError(f"n_max must be in 1..6, got {self.n_max}")
        if self.terms is None:
            self.terms = tuple((n, L) for n in range(1, self.n_max + 1) for L in range(n))
        else:
            for n, L in self.terms:
                _check_nl(n, L)
                if n > self.n_max:
                    raise ValueError(f"term {term_label(n, L)} exceeds n_max={self.n_max}")
            self.terms = tuple(sorted(set(self.terms)))
        states = []
        for n, L in self.terms:
            for J2 in (2 * L - 1, 2 * L + 1):
                if J2 < 1:
                    continue
                for M2 in range(J2, -J2 - 1, -2):
                    states.append(State(n, L, J2, M2))
        self.states = states
        self.index = {s: i for i, s in enumerate(states)}
        en = np.array(
            [fine_structure_offset(s.n, s.J, self.fine_structure, self.constants) for s in states]
        )
        if self.lamb_shift_hz:
            for i, s in enumerate(states):
                if s.n == 2 and s.L == 0:
                    en[i] += 2 * math.pi * self.lamb_shift_hz
        self.energies = en

    @property
    def shells(self) -> list[int]:
        return sorted({n for n, _ in self.terms})

    def shell_states(self, n: int) -> list[State]:
        return [s for s in self.states if s.n == n]

    def levels(self) -> list[tuple[int, int, int]]:
        seen = []
        for s in self.states:
            if s.level not in seen:
                seen.append(s.level)
        return seen

    def dimension(self) -> int:
        """Number of intra-shell dyads, i.e. the size of the statistical-equilibrium system."""
        return sum(len(self.shell_states(n)) ** 2 for n in self.shells)

    def transitions(self) -> TransitionTable:
        entries = {}
        stark = {}
        for (n, L) in self.terms:
            for (n2, L2) in self.terms:
                if abs(L - L2) != 1:
                    continue
                if n > n2:
                    r = radial_dipole(n, L, n2, L2)
                    nu = bohr_frequency(n, n2, self.constants)
                    A = einstein_A((n, L), (n2, L2), radial=r, nu=nu, constants=self.constants)
                    entries[((n, L), (n2, L2))] = Transition((n, L), (n2, L2), r, A, nu)
                elif n == n2:
                    stark[((n, L), (n2, L2))] = radial_dipole(n, L, n2, L2)
        return TransitionTable(entries, stark)

    # -- operators ----------------------------------------------------------

    def dipole_matrix(self, rows: Iterable[State], cols: Iterable[State]) -> np.ndarray:
        """Spherical components ``<a|r_q|b>`` (a0) for q = -1, 0, +1, shape (3, len(rows), len(cols))."""
        rows, cols = list(rows), list(cols)
        out = np.zeros((3, len(rows), len(cols)))
        radial_cache = {}
        for i, a in enumerate(rows):
            for j, b in enumerate(cols):
                if abs(a.L - b.L) != 1:
                    continue
                key = (a.n, a.L, b.n, b.L)
                if key not in radial_cache:
                    radial_cache[key] = radial_dipole(*key)
                red = radial_cache[key] * _reduced_dipole_LSJ(a.L, a.J2, b.L, b.J2)
                if red == 0.0:
                    continue
                q2 = a.M2 - b.M2
                if abs(q2) > 2:
                    continue
                w = _threej2(a.J2, 2, b.J2, -a.M2, q2, b.M2)
                phase = -1.0 if ((a.J2 - a.M2) // 2) % 2 else 1.0
                out[q2 // 2 + 1, i, j] = phase * w * red
        return out

    def angular_matrices(self, states: Iterable[State]):
        """Cartesian matrices of J and S (units of hbar) within a set of states."""
        states = list(states)
        d = len(states)
        Jsph = np.zeros((3, d, d))
        Ssph = np.zeros((3, d, d))
        for i, a in enumerate(states):
            for j, b in enumerate(states):
                if a.n != b.n or a.L != b.L:
                    continue
                q2 = a.M2 - b.M2
                if abs(q2) > 2:
                    continue
                phase = -1.0 if ((a.J2 - a.M2) // 2) % 2 else 1.0
                w = _threej2(a.J2, 2, b.J2, -a.M2, q2, b.M2)
                if w == 0.0:
                    continue
                if a.J2 == b.J2:
                    J = a.J2 / 2
                    Jsph[q2 // 2 + 1, i, j] = phase * w * math.sqrt(J * (J + 1) * (2 * J + 1))
                Ssph[q2 // 2 + 1, i, j] = phase * w * _reduced_spin(a.L, a.J2, b.J2)
        return spherical_to_cartesian(Jsph), spherical_to_cartesian(Ssph)


def _threej2(t1, t2, t3, u1, u2, u3) -> float:
    from .angular_momentum import _threej_float

    return _threej_float(t1, t2, t3, u1, u2, u3)


def _reduced_dipole_LSJ(L: int, J2: int, L2: int, J22: int) -> float:
    """Angular part of <L S J || r || L' S J'> / radial, for S = 1/2."""
    J, Jp = J2 / 2, J22 / 2
    # <L||C^1||L'> = (-1)^L sqrt((2L+1)(2L'+1)) (L 1 L'; 0 0 0)
    cl = (-1) ** L * math.sqrt((2 * L + 1) * (2 * L2 + 1)) * _threej2(2 * L, 2, 2 * L2, 0, 0, 0)
    if cl == 0.0:
        return 0.0
    phase = -1.0 if int(round(L + 0.5 + Jp + 1)) % 2 else 1.0
    return phase * math.sqrt((2 * J + 1) * (2 * Jp + 1)) * sixj(L, J, 0.5, Jp, L2, 1) * cl


def _reduced_spin(L: int, J2: int, J22: int) -> float:
    """<L S J || S || L S J'> for S = 1/2."""
    J, Jp = J2 / 2, J22 / 2
    phase = -1.0 if int(round(L + 0.5 + J + 1)) % 2 else 1.0
    return (
        phase
        * math.sqrt((2 * J + 1) * (2 * Jp + 1))
        * sixj(J, 1, Jp, 0.5, L, 0.5)
        * math.sqrt(0.5 * 1.5 * 2)
    )


def spherical_to_cartesian(sph: np.ndarray) -> np.ndarray:
    """Map stacked spherical components (q=-1,0,+1) of a vector operator to (x, y, z)."""
    vm, v0, vp = sph
    x = (vm - vp) / math.sqrt(2)
    y = 1j * (vm + vp) / math.sqrt(2)
    return np.array([x, y, v0.astype(complex)])


def build_levels(n_max: int, fine_structure: bool = True, lamb_shift_hz: float = 0.0) -> LevelScheme:
    """Complete hydrogen model up to ``n_max``."""
    return LevelScheme(n_max, fine_structure, lamb_shift_hz)


def restrict_to_toy(scheme: LevelScheme | None = None) -> LevelScheme:
    """The 1S/2S/2P/3P model without fine structure."""
    consts = scheme.constants if scheme is not None else CONSTANTS
    return LevelScheme(3, False, 0.0, terms=((1, 0), (2, 0), (2, 1), (3, 1)), constants=consts)
