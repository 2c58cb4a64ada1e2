"""Atomic density matrix in the |nLJM> dyadic basis and its multipole view.

Only dyads inside one Bohr shell are stored.  Statistical tensors

    rho^K_Q(LJ, L'J') = sum_{MM'} (-1)^(J-M) sqrt(2K+1) (J J' K; M -M' -Q) rho(LJM, L'J'M')

are computed on demand, and can be recoupled to the orbital (term) level.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .angular_momentum import sixj, threej
from .hydrogen_model import LevelScheme, State

__all__ = [
    "DensityMatrix",
    "StatisticalTensors",
    "Observables",
    "to_tensors",
    "from_tensors",
    "term_tensors",
    "term_multipoles",
    "polarization_ratio",
    "observables",
    "dump_matrix",
    "load_matrix",
]


@lru_cache(maxsize=None)
def _tensor_basis(J2: int, Jp2: int):
    """Rows: (K, Q) pairs; columns: (M, M') pairs with M, M' descending.

    The matrix is orthogonal, so its transpose inverts the transform.
    """
    J, Jp = J2 / 2, Jp2 / 2
    Ms = [m / 2 for m in range(J2, -J2 - 1, -2)]
    Mps = [m / 2 for m in range(Jp2, -Jp2 - 1, -2)]
    KQ = [(K, Q) for K in range(abs(J2 - Jp2) // 2, (J2 + Jp2) // 2 + 1) for Q in range(-K, K + 1)]
    T = np.zeros((len(KQ), len(Ms) * len(Mps)))
    for r, (K, Q) in enumerate(KQ):
        for a, M in enumerate(Ms):
            for b, Mp in enumerate(Mps):
                w = threej(J, Jp, K, M, -Mp, -Q)
                if w:
                    T[r, a * len(Mps) + b] = (-1) ** round(J - M) * math.sqrt(2 * K + 1) * w
    return KQ, T


@dataclass
class DensityMatrix:
    """Per-shell complex blocks over the states of ``scheme``."""

    scheme: LevelScheme
    blocks: dict = field(default_factory=dict)
    # solver diagnostics, set by the stationary solver
    residual: float = field(default=float("nan"), compare=False, repr=False)
    rcond: float = field(default=float("nan"), compare=False, repr=False)

    def __post_init__(self):
        for n in self.scheme.shells:
            d = len(self.scheme.shell_states(n))
            if n not in self.blocks:
                self.blocks[n] = np.zeros((d, d), dtype=complex)
            elif self.blocks[n].shape != (d, d):
                raise ValueError(f"shell {n} block has shape {self.blocks[n].shape}, expected {(d, d)}")

    # -- vectorisation ---------------------------------------------------

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.blocks[n].ravel() for n in self.scheme.shells])

    @classmethod
    def from_vector(cls, scheme: LevelScheme, vec: np.ndarray) -> "DensityMatrix":
        blocks, pos = {}, 0
        for n in scheme.shells:
            d = len(scheme.shell_states(n))
            blocks[n] = np.array(vec[pos : pos + d * d], dtype=complex).reshape(d, d)
            pos += d * d
        if pos != len(vec):
            raise ValueError("vector length does not match scheme dimension")
        return cls(scheme, blocks)

    # -- element access --------------------------------------------------

    def element(self, a: State, b: State) -> complex:
        if a.n != b.n:
            return 0.0j
        states = self.scheme.shell_states(a.n)
        return self.blocks[a.n][states.index(a), states.index(b)]

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def hermiticity_error(self) -> float:
        return max(float(np.abs(b - b.conj().T).max(initial=0.0)) for b in self.blocks.values())

    def hermitize(self) -> "DensityMatrix":
        return DensityMatrix(self.scheme, {n: 0.5 * (b + b.conj().T) for n, b in self.blocks.items()})

    def normalized(self) -> "DensityMatrix":
        t = self.trace()
        return DensityMatrix(self.scheme, {n: b / t for n, b in self.blocks.items()})

    def min_population(self) -> float:
        return min(float(np.diag(b).real.min()) for b in self.blocks.values())

    def __add__(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(self.scheme, {n: b + other.blocks[n] for n, b in self.blocks.items()})

    def __mul__(self, x: complex) -> "DensityMatrix":
        return DensityMatrix(self.scheme, {n: b * x for n, b in self.blocks.items()})

    __rmul__ = __mul__

    def level_block(self, n: int, L: int, J2: int, Lp: int, Jp2: int) -> np.ndarray:
        states = self.scheme.shell_states(n)
        rows = [i for i, s in enumerate(states) if s.L == L and s.J2 == J2]
        cols = [i for i, s in enumerate(states) if s.L == Lp and s.J2 == Jp2]
        return self.blocks[n][np.ix_(rows, cols)]

    @classmethod
    def isotropic(cls, scheme: LevelScheme, term_populations: dict) -> "DensityMatrix":
        """Each term uniformly populated over its sublevels (no coherences)."""
        blocks = {}
        for n in scheme.shells:
            states = scheme.shell_states(n)
            diag = []
            for s in states:
                g = 2 * (2 * s.L + 1)
                diag.append(term_populations.get((n, s.L), 0.0) / g)
            blocks[n] = np.diag(np.array(diag, dtype=complex))
        return cls(scheme, blocks)


@dataclass
class StatisticalTensors:
    """Multipole components keyed by ``(n, L, J, L', J', K, Q)`` with J as floats."""

    scheme: LevelScheme
    components: dict = field(default_factory=dict)

    def __getitem__(self, key) -> complex:
        return self.components.get(key, 0.0j)

    def __setitem__(self, key, value):
        self.components[key] = complex(value)

    def conjugation_error(self) -> float:
        err = 0.0
        for (n, L, J, Lp, Jp, K, Q), v in self.components.items():
            partner = self[(n, Lp, Jp, L, J, K, -Q)]
            sign = (-1) ** round(J - Jp + Q)
            err = max(err, abs(v.conjugate() - sign * partner))
        return err

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.components.values()))


def _level_indices(scheme: LevelScheme, n: int):
    states = scheme.shell_states(n)
    groups: dict = {}
    for i, s in enumerate(states):
        groups.setdefault((s.L, s.J2), []).append(i)
    return groups


def to_tensors(rho: DensityMatrix) -> StatisticalTensors:
    """Statistical tensors of every level pair inside each shell."""
    out = StatisticalTensors(rho.scheme)
    for n in rho.scheme.shells:
        block = rho.blocks[n]
        groups = _level_indices(rho.scheme, n)
        for (L, J2), ri in groups.items():
            for (Lp, Jp2), ci in groups.items():
                KQ, T = _tensor_basis(J2, Jp2)
                vals = T @ block[np.ix_(ri, ci)].ravel()
                for (K, Q), v in zip(KQ, vals):
                    out.components[(n, L, J2 / 2, Lp, Jp2 / 2, K, Q)] = complex(v)
    return out


def from_tensors(t: StatisticalTensors) -> DensityMatrix:
    """Inverse of :func:`to_tensors`."""
    scheme = t.scheme
    rho = DensityMatrix(scheme)
    for n in scheme.shells:
        groups = _level_indices(scheme, n)
        for (L, J2), ri in groups.items():
            for (Lp, Jp2), ci in groups.items():
                KQ, T = _tensor_basis(J2, Jp2)
                vec = np.array([t[(n, L, J2 / 2, Lp, Jp2 / 2, K, Q)] for K, Q in KQ])
                rho.blocks[n][np.ix_(ri, ci)] = (T.T @ vec).reshape(len(ri), len(ci))
    return rho


def term_tensors(t: StatisticalTensors, n: int, L: int, Lp: int, K: int, Q: int) -> complex:
    """Orbital multipole rho^K_Q(L, L') of shell ``n`` from the fine-structure tensors."""
    S = 0.5
    total = 0.0j
    for J in (L - S, L + S):
        if J < 0:
            continue
        for Jp in (Lp - S, Lp + S):
            if Jp < 0:
                continue
            w = sixj(L, Lp, K, Jp, J, S)
            if w == 0.0:
                continue
            phase = (-1) ** round(K + Lp + Jp + S)
            total += phase * math.sqrt((2 * J + 1) * (2 * Jp + 1)) * w * t[(n, L, J, Lp, Jp, K, Q)]
    return total


def term_multipoles(rho: DensityMatrix, tensors: StatisticalTensors | None = None) -> dict:
    """All orbital multipoles ``(n, L, L', K, Q) -> rho^K_Q(L, L')`` of the model terms."""
    t = tensors if tensors is not None else to_tensors(rho)
    out = {}
    for n in rho.scheme.shells:
        Ls = sorted({s.L for s in rho.scheme.shell_states(n)})
        for L in Ls:
            for Lp in Ls:
                for K in range(abs(L - Lp), L + Lp + 1):
                    for Q in range(-K, K + 1):
                        out[(n, L, Lp, K, Q)] = term_tensors(t, n, L, Lp, K, Q)
    return out


def polarization_ratio(rho: DensityMatrix) -> float:
    """Largest |rho^K_Q(L, L')| with K > 0 relative to sqrt(rho^0_0(L, L) rho^0_0(L', L')).

    Zero for a state without alignment, orientation or inter-term coherence.
    """
    m = term_multipoles(rho)
    worst = 0.0
    for (n, L, Lp, K, Q), v in m.items():
        if K == 0:
            continue
        ref = math.sqrt(abs(m[(n, L, L, 0, 0)] * m[(n, Lp, Lp, 0, 0)]))
        if abs(v) > 0:
            worst = max(worst, abs(v) / ref if ref > 0 else math.inf)
    return worst


@dataclass
class Observables:
    populations: dict  # (n, L, J) -> N_nL(J)
    term_populations: dict  # (n, L) -> N_nL
    a_2P: float
    c_2S2P: float

    @property
    def imbalance(self) -> float:
        """``N_2P - 3 N_2S``; zero at thermodynamic equilibrium."""
        return self.term_populations.get((2, 1), 0.0) - 3 * self.term_populations.get((2, 0), 0.0)

    @property
    def normalized_alignment(self) -> float:
        return self.a_2P / self.imbalance


def observables(rho: DensityMatrix, tensors: StatisticalTensors | None = None) -> Observables:
    t = tensors if tensors is not None else to_tensors(rho)
    pops, terms = {}, {}
    for n, L, J2 in rho.scheme.levels():
        J = J2 / 2
        N = math.sqrt(2 * J + 1) * t[(n, L, J, L, J, 0, 0)].real
        pops[(n, L, J)] = N
        terms[(n, L)] = terms.get((n, L), 0.0) + N
    have = {(n, L) for n, L in rho.scheme.terms}
    a = term_tensors(t, 2, 1, 1, 2, 0).real if (2, 1) in have else 0.0
    c = term_tensors(t, 2, 0, 1, 1, 0).imag if {(2, 0), (2, 1)} <= have else 0.0
    return Observables(pops, terms, a, c)


# ---------------------------------------------------------------------------
# plain-text matrix dump


def dump_matrix(blocks: dict, labels: dict | None = None, title: str = "", fh=None) -> str:
    """Write blocks as text: a ``shell <key> <rows> <cols>`` header, then rows of re/im pairs."""
    buf = io.StringIO()
    if title:
        buf.write(f"# {title}\n")
    for key, m in blocks.items():
        m = np.atleast_2d(m)
        buf.write(f"shell {key} {m.shape[0]} {m.shape[1]}\n")
        if labels and key in labels:
            buf.write("# " + " ".join(labels[key]) + "\n")
        for row in m:
            buf.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def load_matrix(text: str) -> dict:
    """Parse the output of :func:`dump_matrix` back into a dict of complex arrays."""
    blocks = {}
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "shell":
            raise ValueError(f"expected shell header, got {lines[i]!r}")
        key = head[1]
        key = int(key) if key.lstrip("-").isdigit() else key
        r, c = int(head[2]), int(head[3])
        vals = np.array([[float(x) for x in lines[i + 1 + k].split()] for k in range(r)])
        blocks[key] = vals[:, 0::2] + 1j * vals[:, 1::2]
        if blocks[key].shape != (r, c):
            raise ValueError(f"block {key} has inconsistent size")
        i += 1 + r
    return blocks


def dump_density(rho: DensityMatrix) -> str:
    labels = {n: [str(s) for s in rho.scheme.shell_states(n)] for n in rho.scheme.shells}
    return dump_matrix(rho.blocks, labels, title="density matrix, |n L J M> basis")
