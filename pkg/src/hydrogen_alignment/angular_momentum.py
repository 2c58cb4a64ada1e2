"""Wigner 3j/6j symbols and reduced rotation matrices.

Angular momenta are accepted as ints, floats, ``Fraction`` or
:class:`HalfInteger`; internally every quantum number is carried as twice its
value so half-integers stay exact.  Symbols are evaluated with the Racah
single-sum formulas in exact rational arithmetic and cached on a
symmetry-reduced key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from numbers import Real

__all__ = [
    "HalfInteger",
    "WignerValue",
    "wigner3j",
    "wigner6j",
    "threej",
    "sixj",
    "wigner3j_float",
    "wigner6j_float",
    "reduced_rotation",
    "rotation_matrix",
    "triangle",
]


@dataclass(frozen=True, order=True)
class HalfInteger:
    """An integer or half-integer stored as ``twice_value``."""

    twice_value: int

    @classmethod
    def of(cls, x) -> "HalfInteger":
        return x if isinstance(x, HalfInteger) else cls(_twice(x))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    def __float__(self) -> float:
        return self.twice_value / 2

    def __repr__(self) -> str:
        if self.twice_value % 2:
            return f"HalfInteger({self.twice_value}/2)"
        return f"HalfInteger({self.twice_value // 2})"


@dataclass(frozen=True)
class WignerValue:
    """A Wigner symbol: float value plus the exact ``sign * sqrt(radicand)``."""

    value: float
    sign: int = 0
    radicand: Fraction = Fraction(0)

    def __float__(self) -> float:
        return self.value

    def __eq__(self, other):
        if isinstance(other, WignerValue):
            return self.sign == other.sign and self.radicand == other.radicand
        return self.value == other

    def __hash__(self):
        return hash((self.sign, self.radicand))

    def exact_squared(self) -> Fraction:
        """Signed square ``sign * radicand`` (exact)."""
        return self.sign * self.radicand


_ZERO = WignerValue(0.0, 0, Fraction(0))


def _twice(x) -> int:
    if isinstance(x, HalfInteger):
        return x.twice_value
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, Fraction):
        t = 2 * x
        if t.denominator != 1:
            raise ValueError(f"{x} is not a half-integer")
        return int(t)
    if isinstance(x, Real):
        t = round(2 * float(x))
        if abs(2 * float(x) - t) > 1e-9:
            raise ValueError(f"{x} is not a half-integer")
        return int(t)
    raise TypeError(f"cannot interpret {x!r} as an angular momentum")


def triangle(ta: int, tb: int, tc: int) -> bool:
    """Triangle rule on doubled values (including integer perimeter)."""
    return (
        ta >= 0
        and tb >= 0
        and tc >= 0
        and abs(ta - tb) <= tc <= ta + tb
        and (ta + tb + tc) % 2 == 0
    )


_f = math.factorial


def _delta(ta: int, tb: int, tc: int) -> Fraction:
    return Fraction(
        _f((ta + tb - tc) // 2) * _f((ta - tb + tc) // 2) * _f((-ta + tb + tc) // 2),
        _f((ta + tb + tc) // 2 + 1),
    )


def _signed_sqrt(s: Fraction, radicand: Fraction, phase: int) -> WignerValue:
    """Build ``phase * s * sqrt(radicand)`` as a WignerValue."""
    if s == 0:
        return _ZERO
    sign = phase * (1 if s > 0 else -1)
    r = s * s * radicand
    return WignerValue(sign * math.sqrt(r), sign, r)


# ---------------------------------------------------------------------------
# 3j


def _valid_3j(t1, t2, t3, u1, u2, u3) -> bool:
    if u1 + u2 + u3 != 0 or not triangle(t1, t2, t3):
        return False
    for t, u in ((t1, u1), (t2, u2), (t3, u3)):
        if abs(u) > t or (t - u) % 2:
            return False
    return True


def _racah_3j(t1, t2, t3, u1, u2, u3) -> WignerValue:
    j1, j2, j3 = t1, t2, t3
    # all expressions below are doubled, halved at factorial time
    kmin = max(0, j2 - j3 - u1, j1 - j3 + u2) // 2
    kmax = min(j1 + j2 - j3, j1 - u1, j2 + u2) // 2
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        k2 = 2 * k
        den = (
            _f(k)
            * _f((j3 - j2 + k2 + u1) // 2)
            * _f((j3 - j1 + k2 - u2) // 2)
            * _f((j1 + j2 - j3 - k2) // 2)
            * _f((j1 - k2 - u1) // 2)
            * _f((j2 - k2 + u2) // 2)
        )
        s += Fraction(-1 if k % 2 else 1, den)
    rad = _delta(j1, j2, j3) * (
        _f((j1 + u1) // 2)
        * _f((j1 - u1) // 2)
        * _f((j2 + u2) // 2)
        * _f((j2 - u2) // 2)
        * _f((j3 + u3) // 2)
        * _f((j3 - u3) // 2)
    )
    phase = -1 if ((j1 - j2 - u3) // 2) % 2 else 1
    return _signed_sqrt(s, rad, phase)


def _canonical_3j(args):
    """Symmetry-reduced key and the sign relating it to ``args``."""
    t1, t2, t3, u1, u2, u3 = args
    odd = -1 if ((t1 + t2 + t3) // 2) % 2 else 1
    cols = [(t1, u1), (t2, u2), (t3, u3)]
    best = None
    for perm, parity in _PERM3:
        for flip in (1, -1):
            c = tuple((cols[i][0], flip * cols[i][1]) for i in perm)
            sign = 1
            if parity:
                sign *= odd
            if flip < 0:
                sign *= odd
            key = (c[0][0], c[1][0], c[2][0], c[0][1], c[1][1], c[2][1])
            if best is None or key < best[0]:
                best = (key, sign)
    return best


_PERM3 = [
    ((0, 1, 2), 0),
    ((1, 2, 0), 0),
    ((2, 0, 1), 0),
    ((1, 0, 2), 1),
    ((0, 2, 1), 1),
    ((2, 1, 0), 1),
]


@lru_cache(maxsize=None)
def _cached_3j(key) -> WignerValue:
    return _racah_3j(*key)


def _wigner3j_twice(t1, t2, t3, u1, u2, u3) -> WignerValue:
    if not _valid_3j(t1, t2, t3, u1, u2, u3):
        return _ZERO
    key, sign = _canonical_3j((t1, t2, t3, u1, u2, u3))
    w = _cached_3j(key)
    if sign == 1 or w.sign == 0:
        return w
    return WignerValue(-w.value, -w.sign, w.radicand)


def wigner3j(j1, j2, j3, m1, m2, m3) -> WignerValue:
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Invalid couplings (triangle, projection sum or range violations) give an
    exact zero rather than an error.
    """
    return _wigner3j_twice(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


@lru_cache(maxsize=None)
def _threej_float(t1, t2, t3, u1, u2, u3) -> float:
    return _wigner3j_twice(t1, t2, t3, u1, u2, u3).value


def threej(j1, j2, j3, m1, m2, m3) -> float:
    """Float-valued, memoized :func:`wigner3j`."""
    return _threej_float(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


# ---------------------------------------------------------------------------
# 6j


def _racah_6j(a, b, c, d, e, f) -> WignerValue:
    s1 = a + b + c
    s2 = a + e + f
    s3 = d + b + f
    s4 = d + e + c
    b1 = a + b + d + e
    b2 = b + c + e + f
    b3 = c + a + f + d
    tmin = max(s1, s2, s3, s4) // 2
    tmax = min(b1, b2, b3) // 2
    s = Fraction(0)
    for t in range(tmin, tmax + 1):
        t2 = 2 * t
        den = (
            _f((t2 - s1) // 2)
            * _f((t2 - s2) // 2)
            * _f((t2 - s3) // 2)
            * _f((t2 - s4) // 2)
            * _f((b1 - t2) // 2)
            * _f((b2 - t2) // 2)
            * _f((b3 - t2) // 2)
        )
        s += Fraction((-1 if t % 2 else 1) * _f(t + 1), den)
    rad = _delta(a, b, c) * _delta(a, e, f) * _delta(d, b, f) * _delta(d, e, c)
    return _signed_sqrt(s, rad, 1)


def _canonical_6j(args):
    a, b, c, d, e, f = args
    cols = [(a, d), (b, e), (c, f)]
    best = None
    for perm in permutations(range(3)):
        pc = [cols[i] for i in perm]
        # swap upper/lower in any two columns (or none)
        for flips in ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)):
            cc = [(lo, up) if fl else (up, lo) for (up, lo), fl in zip(pc, flips)]
            key = (cc[0][0], cc[1][0], cc[2][0], cc[0][1], cc[1][1], cc[2][1])
            if best is None or key < best:
                best = key
    return best


@lru_cache(maxsize=None)
def _cached_6j(key) -> WignerValue:
    return _racah_6j(*key)


def _wigner6j_twice(a, b, c, d, e, f) -> WignerValue:
    if not (
        triangle(a, b, c) and triangle(a, e, f) and triangle(d, b, f) and triangle(d, e, c)
    ):
        return _ZERO
    return _cached_6j(_canonical_6j((a, b, c, d, e, f)))


def wigner6j(j1, j2, j3, l1, l2, l3) -> WignerValue:
    """Wigner 6j symbol ``{j1 j2 j3; l1 l2 l3}``; zero if any triad fails."""
    return _wigner6j_twice(*(_twice(x) for x in (j1, j2, j3, l1, l2, l3)))


@lru_cache(maxsize=None)
def _sixj_float(a, b, c, d, e, f) -> float:
    return _wigner6j_twice(a, b, c, d, e, f).value


def sixj(j1, j2, j3, l1, l2, l3) -> float:
    """Float-valued, memoized :func:`wigner6j`."""
    return _sixj_float(*(_twice(x) for x in (j1, j2, j3, l1, l2, l3)))


# ---------------------------------------------------------------------------
# independent floating-point path (no caching, no rationals)

_FACT = [float(math.factorial(i)) for i in range(171)]


def wigner3j_float(j1, j2, j3, m1, m2, m3) -> float:
    """Racah 3j formula in plain double precision with compensated summation."""
    t1, t2, t3, u1, u2, u3 = (_twice(x) for x in (j1, j2, j3, m1, m2, m3))
    if not _valid_3j(t1, t2, t3, u1, u2, u3):
        return 0.0
    F = _FACT
    kmin = max(0, t2 - t3 - u1, t1 - t3 + u2) // 2
    kmax = min(t1 + t2 - t3, t1 - u1, t2 + u2) // 2
    terms = []
    for k in range(kmin, kmax + 1):
        k2 = 2 * k
        den = (
            F[k]
            * F[(t3 - t2 + k2 + u1) // 2]
            * F[(t3 - t1 + k2 - u2) // 2]
            * F[(t1 + t2 - t3 - k2) // 2]
            * F[(t1 - k2 - u1) // 2]
            * F[(t2 - k2 + u2) // 2]
        )
        terms.append((-1.0 if k % 2 else 1.0) / den)
    s = math.fsum(terms)
    tri = (
        F[(t1 + t2 - t3) // 2]
        * F[(t1 - t2 + t3) // 2]
        * F[(-t1 + t2 + t3) // 2]
        / F[(t1 + t2 + t3) // 2 + 1]
    )
    rad = tri * (
        F[(t1 + u1) // 2]
        * F[(t1 - u1) // 2]
        * F[(t2 + u2) // 2]
        * F[(t2 - u2) // 2]
        * F[(t3 + u3) // 2]
        * F[(t3 - u3) // 2]
    )
    phase = -1.0 if ((t1 - t2 - u3) // 2) % 2 else 1.0
    return phase * s * math.sqrt(rad)


def wigner6j_float(j1, j2, j3, l1, l2, l3) -> float:
    """Racah 6j formula in plain double precision with compensated summation."""
    a, b, c, d, e, f = (_twice(x) for x in (j1, j2, j3, l1, l2, l3))
    if not (
        triangle(a, b, c) and triangle(a, e, f) and triangle(d, b, f) and triangle(d, e, c)
    ):
        return 0.0
    F = _FACT

    def tri(x, y, z):
        return F[(x + y - z) // 2] * F[(x - y + z) // 2] * F[(-x + y + z) // 2] / F[(x + y + z) // 2 + 1]

    s1, s2, s3, s4 = a + b + c, a + e + f, d + b + f, d + e + c
    b1, b2, b3 = a + b + d + e, b + c + e + f, c + a + f + d
    terms = []
    for t in range(max(s1, s2, s3, s4) // 2, min(b1, b2, b3) // 2 + 1):
        t2 = 2 * t
        den = (
            F[(t2 - s1) // 2]
            * F[(t2 - s2) // 2]
            * F[(t2 - s3) // 2]
            * F[(t2 - s4) // 2]
            * F[(b1 - t2) // 2]
            * F[(b2 - t2) // 2]
            * F[(b3 - t2) // 2]
        )
        terms.append((-1.0 if t % 2 else 1.0) * F[t + 1] / den)
    s = math.fsum(terms)
    return s * math.sqrt(tri(a, b, c) * tri(a, e, f) * tri(d, b, f) * tri(d, e, c))


# ---------------------------------------------------------------------------
# rotations


def reduced_rotation(j, m, mp, beta: float) -> float:
    """Wigner small-d element ``d^j_{m,mp}(beta)`` (Wigner's explicit sum)."""
    tj, ta, tb = _twice(j), _twice(m), _twice(mp)
    if abs(ta) > tj or abs(tb) > tj or (tj - ta) % 2 or (tj - tb) % 2:
        return 0.0
    jpa, jma = (tj + ta) // 2, (tj - ta) // 2
    jpb, jmb = (tj + tb) // 2, (tj - tb) // 2
    dab = (ta - tb) // 2
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    total = 0.0
    for k in range(max(0, -dab), min(jpb, jma) + 1):
        den = _f(jpb - k) * _f(k) * _f(dab + k) * _f(jma - k)
        term = (c ** (jpb + jma - 2 * k)) * (s ** (dab + 2 * k)) / den
        total += -term if (dab + k) % 2 else term
    return math.sqrt(_f(jpa) * _f(jma) * _f(jpb) * _f(jmb)) * total


def rotation_matrix(j, alpha: float, beta: float, gamma: float):
    """Wigner ``D^j_{m m'}(alpha, beta, gamma)`` with rows/cols ordered m = j..-j."""
    import numpy as np

    tj = _twice(j)
    ms = [Fraction(tm, 2) for tm in range(tj, -tj - 1, -2)]
    D = np.empty((len(ms), len(ms)), dtype=complex)
    for a, m in enumerate(ms):
        for b, mp in enumerate(ms):
            D[a, b] = (
                np.exp(-1j * float(m) * alpha)
                * reduced_rotation(j, m, mp, beta)
                * np.exp(-1j * float(mp) * gamma)
            )
    return D
