"""Statistical-equilibrium operator in the dyadic |nLJM> basis and its stationary solution.

The density matrix of every Bohr shell is vectorised row-major and stacked.
The generator is

    d rho/dt = -i [H, rho]/hbar - (Gamma rho + rho Gamma) + T rho

with H = fine structure + Stark + Zeeman inside each shell.  Radiative
damping and transfer come from one dipole jump operator per Bohr-level pair:
lowering at rate kappa (1 + nbar) (spontaneous + stimulated), raising at rate
kappa nbar (absorption), where nbar is the photon occupation of the line.
Only the mean intensity enters, so the radiation carries no anisotropy.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .angular_momentum import rotation_matrix
from .density_matrix import DensityMatrix, dump_matrix
from .hydrogen_model import CONSTANTS, LevelScheme, _emission_kappa, restrict_to_toy, spherical_to_cartesian
from .radiation_field import Illumination, RateSet, rates

__all__ = [
    "FieldConfig",
    "EvolutionOperator",
    "SESystem",
    "SingularSystemError",
    "assemble",
    "stationary_solve",
    "restrict_to_toy",
    "solve",
]

log = logging.getLogger(__name__)

COMPONENTS = ("hamiltonian_free", "stark", "zeeman", "damping", "transfer")


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, message: str, rcond: float):
        super().__init__(f"{message} (reciprocal condition estimate {rcond:.3e})")
        self.rcond = rcond


@dataclass(frozen=True)
class FieldConfig:
    """Electric field (V/m) and magnetic field (T) vectors in the quantization frame."""

    E: tuple = (0.0, 0.0, 0.0)
    B: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        E = np.asarray(self.E, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if E.shape != (3,) or B.shape != (3,):
            raise ValueError("E and B must be 3-vectors")
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(B))):
            raise ValueError("field components must be finite")
        object.__setattr__(self, "E", tuple(E))
        object.__setattr__(self, "B", tuple(B))

    @classmethod
    def polar(cls, E: float = 0.0, theta: float = 0.0, phi: float = 0.0, B: float = 0.0) -> "FieldConfig":
        """|E| (V/m) at polar angles (theta, phi) and |B| (T) along z."""
        Ev = E * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        return cls(tuple(Ev), (0.0, 0.0, B))

    @classmethod
    def from_lab_units(cls, E_V_per_cm=(0, 0, 0), B_gauss=(0, 0, 0)) -> "FieldConfig":
        return cls(tuple(100.0 * np.asarray(E_V_per_cm, float)), tuple(1e-4 * np.asarray(B_gauss, float)))

    @property
    def omega_E(self) -> float:
        return CONSTANTS.omega_E_per_V_per_m * float(np.linalg.norm(self.E))

    @property
    def omega_B(self) -> float:
        return CONSTANTS.omega_B_per_tesla * float(np.linalg.norm(self.B))


@dataclass
class EvolutionOperator:
    """Component-tagged generator acting on the stacked, vectorised density matrix."""

    scheme: LevelScheme
    components: dict  # name -> scipy.sparse matrix
    hamiltonians: dict = None  # shell -> H (rad/s), used for conditioning estimates
    _dense: np.ndarray = field(default=None, repr=False)
    _sparse: sp.csr_matrix = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return next(iter(self.components.values())).shape[0]

    @property
    def sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            total = None
            for c in self.components.values():
                total = c.copy() if total is None else total + c
            self._sparse = total.tocsr()
        return self._sparse

    @property
    def matrix(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.sparse.toarray()
        return self._dense

    def population_indices(self) -> np.ndarray:
        idx, pos = [], 0
        for n in self.scheme.shells:
            d = len(self.scheme.shell_states(n))
            idx.extend(pos + i * d + i for i in range(d))
            pos += d * d
        return np.array(idx)

    def dump(self, fh=None) -> str:
        blocks = {name: c.toarray() for name, c in self.components.items()}
        return dump_matrix(blocks, title=f"evolution operator, dimension {self.dimension}", fh=fh)


def _commutator(H: np.ndarray) -> sp.csr_matrix:
    """Superoperator of ``-i [H, .]`` for row-major vectorisation."""
    d = H.shape[0]
    Id = sp.identity(d, format="csr")
    Hs = sp.csr_matrix(H)
    return (-1j * (sp.kron(Hs, Id) - sp.kron(Id, Hs.T))).tocsr()


def _anticommutator(G: np.ndarray) -> sp.csr_matrix:
    d = G.shape[0]
    Id = sp.identity(d, format="csr")
    Gs = sp.csr_matrix(G)
    return (sp.kron(Gs, Id) + sp.kron(Id, Gs.T)).tocsr()


class SESystem:
    """Field-independent pieces for one (scheme, illumination); assembles per field point."""

    def __init__(self, scheme: LevelScheme, rate_set: RateSet, max_dimension: int = 5000):
        self.scheme = scheme
        self.rates = rate_set
        dim = scheme.dimension()
        if dim > max_dimension:
            raise ValueError(f"system dimension {dim} exceeds the cap {max_dimension}")
        self.dimension = dim
        self.shells = scheme.shells
        self.states = {n: scheme.shell_states(n) for n in self.shells}
        self.sizes = {n: len(self.states[n]) for n in self.shells}
        self.offsets = {}
        pos = 0
        for n in self.shells:
            self.offsets[n] = pos
            pos += self.sizes[n] ** 2
        # per-shell operators
        self.r_cart = {}
        self.JS = {}
        self.H0 = {}
        for n in self.shells:
            st = self.states[n]
            self.r_cart[n] = spherical_to_cartesian(scheme.dipole_matrix(st, st))
            J, S = scheme.angular_matrices(st)
            self.JS[n] = J + S
            idx = [scheme.index[s] for s in st]
            self.H0[n] = np.diag(scheme.energies[idx]).astype(complex)
        self._damping, self._transfer = self._radiative()
        # commutator superoperators of the field-free Hamiltonian and of each
        # Cartesian component of r and L + 2S, summed over shells
        self._free = sum(self._embed(n, n, _commutator(self.H0[n])) for n in self.shells).tocsr()
        self._stark = [sum(self._embed(n, n, _commutator(self.r_cart[n][i])) for n in self.shells).tocsr()
                       for i in range(3)]
        self._zeeman = [sum(self._embed(n, n, _commutator(self.JS[n][i])) for n in self.shells).tocsr()
                        for i in range(3)]

    def _radiative(self):
        dim = self.dimension
        damping = sp.csr_matrix((dim, dim), dtype=complex)
        transfer = sp.csr_matrix((dim, dim), dtype=complex)
        table = self.scheme.transitions()
        lines = table.lines()
        for nu_, nl in lines:
            if (nu_, nl) not in self.rates.occupation:
                raise ValueError(f"rate set has no occupation for line {nu_}->{nl}")
            nbar = self.rates.occupation[(nu_, nl)]
            nu = next(tr.nu for (u, l), tr in table.entries.items() if u[0] == nu_ and l[0] == nl)
            kappa = _emission_kappa(nu, self.scheme.constants)
            Ls = spherical_to_cartesian(self.scheme.dipole_matrix(self.states[nl], self.states[nu_]))
            down, up = kappa * (1.0 + nbar), kappa * nbar
            G_u = sum(L.conj().T @ L for L in Ls)
            G_l = sum(L @ L.conj().T for L in Ls)
            T_lu = sum(sp.kron(sp.csr_matrix(L), sp.csr_matrix(L.conj())) for L in Ls)
            T_ul = sum(sp.kron(sp.csr_matrix(L.conj().T), sp.csr_matrix(L.T)) for L in Ls)
            damping = damping + self._embed(nu_, nu_, -0.5 * down * _anticommutator(G_u))
            transfer = transfer + self._embed(nl, nu_, down * T_lu)
            if up:
                damping = damping + self._embed(nl, nl, -0.5 * up * _anticommutator(G_l))
                transfer = transfer + self._embed(nu_, nl, up * T_ul)
        return damping.tocsr(), transfer.tocsr()

    def _embed(self, row_shell: int, col_shell: int, block) -> sp.csr_matrix:
        block = sp.coo_matrix(block)
        r0, c0 = self.offsets[row_shell], self.offsets[col_shell]
        return sp.csr_matrix(
            (block.data, (block.row + r0, block.col + c0)), shape=(self.dimension, self.dimension)
        )

    def operator(self, fields: FieldConfig) -> EvolutionOperator:
        C = CONSTANTS
        wE = C.omega_E_per_V_per_m * np.asarray(fields.E)
        wB = C.omega_B_per_tesla * np.asarray(fields.B)
        # electron charge is -e0: H_E = e0 r.E, H_B = mu_B B.(L + 2S); both in rad/s
        hams = {
            n: self.H0[n] + np.einsum("i,ijk->jk", wE, self.r_cart[n]) + np.einsum("i,ijk->jk", wB, self.JS[n])
            for n in self.shells
        }
        empty = sp.csr_matrix((self.dimension, self.dimension), dtype=complex)

        def combine(ops, w):
            return sum((wi * op for wi, op in zip(w, ops) if wi), empty).tocsr()

        parts = {
            "hamiltonian_free": self._free,
            "stark": combine(self._stark, wE),
            "zeeman": combine(self._zeeman, wB),
            "damping": self._damping,
            "transfer": self._transfer,
        }
        return EvolutionOperator(self.scheme, parts, hams)

    def solve(self, fields: FieldConfig, quantize_along_B: bool = True, **kw) -> DensityMatrix:
        """Stationary state for one field configuration.

        With ``quantize_along_B`` a magnetic field off the z axis is handled
        in a rotated frame where it lies along z, and the result is rotated
        back.  In the lab frame the Larmor precession couples ground-level
        populations to coherences whose only relaxation is absorption, which
        can be slower by ~14 orders of magnitude (cold radiation); the
        rotated system is far better conditioned.
        """
        B = np.asarray(fields.B)
        if not quantize_along_B or (B[0] == 0.0 and B[1] == 0.0):
            return stationary_solve(self.operator(fields), **kw)
        b = np.linalg.norm(B)
        theta, phi = math.acos(B[2] / b), math.atan2(B[1], B[0])
        # R = Ry(-theta) Rz(-phi) takes B to +z
        R = _rot_y(-theta) @ _rot_z(-phi)
        rotated = FieldConfig(tuple(R @ np.asarray(fields.E)), (0.0, 0.0, b))
        rho_r = stationary_solve(self.operator(rotated), **kw)
        blocks = {}
        for n in self.shells:
            U = self.shell_rotation(n, (0.0, -theta, -phi))
            blocks[n] = U.conj().T @ rho_r.blocks[n] @ U
        rho = DensityMatrix(self.scheme, blocks).hermitize()
        rho.residual, rho.rcond = rho_r.residual, rho_r.rcond
        return rho

    def shell_rotation(self, n: int, euler) -> np.ndarray:
        """Unitary of the active rotation R(alpha, beta, gamma) on the states of shell ``n``."""
        st = self.states[n]
        U = np.zeros((len(st), len(st)), dtype=complex)
        i = 0
        while i < len(st):
            d = st[i].J2 + 1
            U[i:i + d, i:i + d] = rotation_matrix(st[i].J2 / 2, *euler)
            i += d
        return U


def _rot_z(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def assemble(scheme: LevelScheme, rate_set: RateSet, fields: FieldConfig, max_dimension: int = 5000) -> EvolutionOperator:
    """Build the statistical-equilibrium generator for one field configuration."""
    return SESystem(scheme, rate_set, max_dimension).operator(fields)


def stationary_solve(
    op: EvolutionOperator,
    on_singular: str = "conserve",
    rcond_min: float = 1e-15,
    residual_tol: float = 1e-10,
) -> DensityMatrix:
    """Solve ``op . vec(rho) = 0`` with ``trace(rho) = 1``.

    The trace condition replaces the population equation with the smallest
    diagonal magnitude.  If that system is numerically singular the generator
    has further conserved quantities (spin polarization without fine
    structure, the ground level in the dark, ...).  With
    ``on_singular="conserve"`` every conserved quantity is pinned to its value
    in the unpolarized ground level, which selects the stationary state
    reached from it; ``"raise"`` raises
    :class:`SingularSystemError` instead.
    """
    M = op.sparse
    dim = M.shape[0]
    pops = op.population_indices()
    anorm = float(abs(M).sum(axis=1).max())
    # the generator preserves Hermiticity: solve for the real parameters of rho
    to_vec, to_real = _hermitian_maps(op.scheme)
    Mr = (to_real @ M @ to_vec).real.toarray()
    trace_row = np.zeros(dim)
    trace_row[pops] = 1.0
    k = pops[np.argmin(np.abs(Mr[pops, pops]))]
    # unknowns scaled by estimated magnitudes, rows equilibrated: excited shells
    # may sit many orders of magnitude below the ground level
    col = _dyad_scales(op)
    MC = Mr * col[None, :]
    A = MC.copy()
    A[k] = trace_row * col
    row = _row_scale(A)
    A *= row[:, None]
    b = np.zeros(dim)
    b[k] = row[k]
    lu, piv = _lu(A)
    rcond = _rcond(lu, float(np.abs(A).sum(axis=0).max()))
    if not (rcond >= rcond_min):
        if on_singular == "raise":
            raise SingularSystemError("stationary system is numerically singular", rcond)
        if on_singular != "conserve":
            raise ValueError(f"unknown on_singular mode {on_singular!r}")
        x0 = np.zeros(dim)
        ground = pops[: len(op.scheme.shell_states(op.scheme.shells[0]))]
        x0[ground] = 1.0 / len(ground)
        A, b = _pin_conserved(MC, col, trace_row, x0)
        lu, piv = _lu(A)
        rcond2 = _rcond(lu, float(np.abs(A).sum(axis=0).max()))
        log.info("degenerate stationary system (rcond=%.2e); pinned conserved quantities (rcond=%.2e)", rcond, rcond2)
        if not (rcond2 >= rcond_min):
            raise SingularSystemError("stationary system stays singular after pinning conserved quantities", rcond2)
        rcond = rcond2
    y = sla.lu_solve((lu, piv), b, check_finite=False)
    y += sla.lu_solve((lu, piv), b - A @ y, check_finite=False)
    x = to_vec @ (col * y[:dim])
    resid = float(np.abs(M @ x).max())
    if resid > residual_tol * anorm:
        raise SingularSystemError(
            f"stationary residual {resid:.3e} exceeds {residual_tol:g} * ||op|| = {residual_tol * anorm:.3e}",
            rcond,
        )
    rho = DensityMatrix.from_vector(op.scheme, x).hermitize()
    rho.residual = resid / anorm if anorm > 0 else resid
    rho.rcond = rcond
    return rho


def _pin_conserved(MC: np.ndarray, col: np.ndarray, trace_row: np.ndarray, x0: np.ndarray, tol: float = 1e-12):
    """Bordered system for a generator with extra conserved quantities.

    With ``U`` spanning the left null space of the row-equilibrated matrix
    ``A`` (trace functional included) and ``W`` the matching conserved
    functionals on the scaled unknowns, ``[[A, U], [W, 0]] [y; lam] = [0; W y0]``
    is square and regular.  ``U`` is orthogonal to the range of ``A``, so
    ``lam = 0`` and ``y`` is the stationary state sharing every conserved
    quantity with ``x0``.
    """
    dim = MC.shape[0]
    r = _row_scale(MC)
    A = MC * r[:, None]
    U, sv, _ = sla.svd(A, check_finite=False)
    t = trace_row / r
    Us = np.hstack([U[:, sv <= tol * sv[0]], (t / np.linalg.norm(t))[:, None]])
    Q, R, _ = sla.qr(Us, pivoting=True, mode="economic")
    d = np.abs(np.diag(R))
    k = int(np.sum(d > 1e-8 * d[0]))
    Ub = Q[:, :k]
    # conserved functionals on y (x = col * y), orthonormalized
    WC = (Ub.conj().T * r[None, :]) * col[None, :]
    WC /= np.abs(WC).max(axis=1)[:, None]
    WC = sla.qr(WC.T, mode="economic")[0].T
    big = np.zeros((dim + k, dim + k), dtype=A.dtype)
    big[:dim, :dim] = A
    big[:dim, dim:] = Ub
    big[dim:, :dim] = WC
    b = np.zeros(dim + k, dtype=A.dtype)
    nz = x0 != 0
    b[dim:] = WC[:, nz] @ (x0[nz] / col[nz])
    return big, b


def _row_scale(A: np.ndarray) -> np.ndarray:
    # identically zero rows (uncoupled dyads) keep unit scale
    m = np.abs(A).max(axis=1)
    return 1.0 / np.where(m > 0, m, 1.0)


def _gth_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary vector of a Markov generator by Grassmann-Taksar-Heyman state reduction.

    ``P[i, j]`` is the rate i -> j (diagonal ignored).  The reduction uses no
    subtractions, so tiny probabilities keep full relative accuracy.  States
    that cannot leave to lower-indexed ones start a new class with weight 1.
    """
    P = np.array(P, dtype=float)
    np.fill_diagonal(P, 0.0)
    n = P.shape[0]
    roots = []
    for k in range(n - 1, 0, -1):
        s = P[k, :k].sum()
        if s <= 0:
            roots.append(k)
            P[:k, k] = 0.0
            continue
        P[:k, k] /= s
        P[:k, :k] += np.outer(P[:k, k], P[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = 1.0 if k in roots else pi[:k] @ P[:k, k]
    return pi / pi.sum()


def _dyad_scales(op: EvolutionOperator, floor: float = 1e-30) -> np.ndarray:
    """Magnitude estimate of every unknown, sqrt(p_a p_b).

    ``p`` solves rate equations: the radiative population-to-population
    rates plus, for each Hamiltonian coupling V between states a and b, the
    incoherent rate 2 |V|^2 g / (D^2 + g^2) obtained by adiabatically
    eliminating their coherence (D: energy difference, g: mean loss rate).
    """
    rad = (op.components["damping"] + op.components["transfer"]).tocsr()
    pops = op.population_indices()
    R = rad[pops][:, pops].toarray().real.T  # R[i, j]: rate i -> j
    loss = -np.diag(R).copy()
    if op.hamiltonians:
        i0 = 0
        for n in op.scheme.shells:
            H = op.hamiltonians[n]
            d = H.shape[0]
            V = np.abs(H) ** 2
            np.fill_diagonal(V, 0.0)
            e = H.diagonal().real
            g = 0.5 * (loss[i0 : i0 + d, None] + loss[None, i0 : i0 + d])
            D2 = (e[:, None] - e[None, :]) ** 2
            den = D2 + g**2
            with np.errstate(divide="ignore", invalid="ignore"):
                k = np.where(den > 0, 2 * V * g / den, np.sqrt(V))
            R[i0 : i0 + d, i0 : i0 + d] += k
            i0 += d
    p = _gth_stationary(R)
    p = np.maximum(p / p.max(), floor)
    out, i0 = [], 0
    for n in op.scheme.shells:
        d = len(op.scheme.shell_states(n))
        q = np.sqrt(p[i0 : i0 + d])
        out.append(np.outer(q, q).ravel())
        i0 += d
    return np.concatenate(out)


def _hermitian_maps(scheme: LevelScheme) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse maps between vec(rho) and its real parameters.

    For i < j the parameter at the position of dyad (i, j) is Re rho_ij and
    the one at (j, i) is Im rho_ij; diagonal positions hold populations.
    Returns ``(to_vec, to_real)`` with ``vec = to_vec @ y`` and
    ``y = Re(to_real @ vec)`` for Hermitian rho.
    """
    v_rows, v_cols, v_vals, r_rows, r_cols, r_vals = [], [], [], [], [], []
    pos = 0
    for n in scheme.shells:
        d = len(scheme.shell_states(n))
        i, j = np.triu_indices(d, 1)
        ij, ji, ii = pos + i * d + j, pos + j * d + i, pos + np.arange(d) * (d + 1)
        one = np.ones(len(ij))
        # x_ij = y_ij + i y_ji, x_ji = y_ij - i y_ji, x_ii = y_ii
        v_rows += [ij, ij, ji, ji, ii]
        v_cols += [ij, ji, ij, ji, ii]
        v_vals += [one, 1j * one, one, -1j * one, np.ones(d)]
        # y_ij = Re x_ij, y_ji = Re(-i x_ij), y_ii = Re x_ii
        r_rows += [ij, ji, ii]
        r_cols += [ij, ij, ii]
        r_vals += [one, -1j * one, np.ones(d)]
        pos += d * d

    def build(vals, rows, cols):
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(pos, pos))

    return build(v_vals, v_rows, v_cols), build(r_vals, r_rows, r_cols)


def _lu(A: np.ndarray):
    # singularity is judged from the condition estimate, not from LAPACK's warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=False)


def _rcond(lu: np.ndarray, anorm1: float) -> float:
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rc, info = gecon(lu, anorm1, norm="1")
    return float(rc) if info == 0 else 0.0


def solve(scheme: LevelScheme, illumination: Illumination, fields: FieldConfig, **kw) -> DensityMatrix:
    """One-shot convenience: rates, assembly and stationary solution."""
    return SESystem(scheme, rates(illumination, scheme.transitions())).solve(fields, **kw)
