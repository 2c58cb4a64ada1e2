"""Sweeps over electric-field strength and orientation distributions.

Stokes parameters are averaged incoherently over field realizations.  Since
Stokes vectors are linear in the density matrix, the density matrix itself is
averaged over quadrature nodes and the emission computed once per grid point.
For B along z (or B = 0) the generator is covariant under rotations about z,
so a uniform average over the field azimuth only keeps dyads with M = M':
one solve per inclination suffices.  A brute-force azimuth quadrature is
available for checking.

Isotropic averages over cos(theta) meet level (anti)crossings whose width in
cos(theta) is set by radiative widths and can be far below 1e-3, so the
default isotropic rule is adaptive Gauss-Kronrod on [0, 1].  The reflection
z -> -z leaves B (axial, along z) unchanged and flips E_z; it maps
rho(-mu) to P rho(mu) P with P = diag((-1)^L e^{-i pi M}), so only half the
range is integrated.  The adaptive error control covers only the shells
behind the reported quantities (shell 2 and the upper shells of the requested
lines); the other shells come back as NaN.  Fixed Gauss-Legendre nodes remain
available.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.integrate import quad_vec

from .density_matrix import DensityMatrix, observables
from .emission import StokesResult, ViewingGeometry, resolve_line, stokes_emissivity
from .hydrogen_model import CONSTANTS, LevelScheme, build_levels
from .radiation_field import Illumination, rates
from .se_solver import FieldConfig, SESystem
from .toy_model import ToyRates, toy_solve

__all__ = [
    "FieldDistribution",
    "SweepRow",
    "SweepResult",
    "FigureConfig",
    "sweep",
    "reproduce_figure",
    "default_grid",
    "azimuth_average",
    "max_workers",
    "reflection_phases",
]

log = logging.getLogger(__name__)

WORKER_ENV = "HALIGN_MAX_WORKERS"


def max_workers(requested: int | None = None) -> int:
    """Worker count: the request (default: CPU count) capped by ``$HALIGN_MAX_WORKERS``."""
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(WORKER_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", WORKER_ENV, cap)
    return max(1, n)


def default_grid(n: int = 40, lo_V_per_cm: float = 1e-2, hi_V_per_cm: float = 1e5) -> np.ndarray:
    """Logarithmic field-strength grid in V/m."""
    return 100.0 * np.logspace(math.log10(lo_V_per_cm), math.log10(hi_V_per_cm), n)


@dataclass(frozen=True)
class FieldDistribution:
    """Orientation distribution of a field of fixed strength.

    ``kind`` is ``deterministic`` (one direction ``theta, phi``),
    ``random_azimuth`` (inclination ``theta``, uniform azimuth) or
    ``isotropic``.  Angles in radians.  For isotropic fields ``quadrature``
    selects ``adaptive`` Gauss-Kronrod in cos(theta) (relative tolerance
    ``tol``, starting from ``panels`` equal panels) or fixed ``gauss``
    Gauss-Legendre with ``n_polar`` nodes.
    """

    kind: str = "deterministic"
    theta: float = 0.0
    phi: float = 0.0
    n_azimuth: int = 8
    n_polar: int = 16
    quadrature: str = "adaptive"
    tol: float = 1e-6
    panels: int = 2

    def __post_init__(self):
        if self.kind not in ("deterministic", "random_azimuth", "isotropic"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.n_azimuth < 1 or self.n_polar < 1 or self.panels < 1:
            raise ValueError("quadrature counts must be positive")
        if self.quadrature not in ("adaptive", "gauss"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError("inclination must lie in [0, pi]")

    @property
    def adaptive(self) -> bool:
        return self.kind == "isotropic" and self.quadrature == "adaptive"

    @classmethod
    def deterministic(cls, theta: float = 0.0, phi: float = 0.0) -> "FieldDistribution":
        return cls("deterministic", theta, phi)

    @classmethod
    def random_azimuth(cls, theta: float, n_azimuth: int = 8) -> "FieldDistribution":
        return cls("random_azimuth", theta, 0.0, n_azimuth)

    @classmethod
    def isotropic(
        cls, n_polar: int = 16, n_azimuth: int = 8, quadrature: str = "adaptive", tol: float = 1e-6, panels: int = 2
    ) -> "FieldDistribution":
        return cls("isotropic", 0.0, 0.0, n_azimuth, n_polar, quadrature, tol, panels)

    @property
    def label(self) -> str:
        if self.kind == "deterministic":
            return f"deterministic(theta={math.degrees(self.theta):g},phi={math.degrees(self.phi):g})"
        if self.kind == "random_azimuth":
            return f"random_azimuth(theta={math.degrees(self.theta):g})"
        return "isotropic"

    def nodes(self, azimuth_symmetric: bool = False) -> list[tuple[float, float, float, bool]]:
        """Quadrature nodes ``(theta, phi, weight, azimuth_average)``.

        With ``azimuth_symmetric`` the azimuthal quadrature collapses to one
        node per inclination, flagged for analytic azimuth averaging.  For the
        adaptive isotropic rule these are the azimuth nodes applied at each
        cos(theta) sample, with polar angle 0.
        """
        if self.adaptive:
            if azimuth_symmetric:
                return [(0.0, 0.0, 1.0, True)]
            return _normalize([(0.0, 2 * math.pi * k / self.n_azimuth, 1.0, False) for k in range(self.n_azimuth)])
        if self.kind == "deterministic":
            return [(self.theta, self.phi, 1.0, False)]
        if self.kind == "random_azimuth":
            thetas, wts = [self.theta], [1.0]
        else:
            x, w = np.polynomial.legendre.leggauss(self.n_polar)
            thetas = [math.acos(xi) for xi in x[::-1]]
            wts = list(0.5 * w[::-1])
        if azimuth_symmetric or self._polar(thetas):
            out = [(t, 0.0, wt, True) for t, wt in zip(thetas, wts)]
        else:
            out = [
                (t, 2 * math.pi * k / self.n_azimuth, wt / self.n_azimuth, False)
                for t, wt in zip(thetas, wts)
                for k in range(self.n_azimuth)
            ]
        return _normalize(out)

    @staticmethod
    def _polar(thetas) -> bool:
        # a field along +-z is unchanged by azimuthal rotation
        return all(t == 0.0 or t == math.pi for t in thetas)


def _normalize(nodes):
    total = math.fsum(n[2] for n in nodes)
    return [(t, p, w / total, a) for t, p, w, a in nodes]


def azimuth_average(rho: DensityMatrix) -> DensityMatrix:
    """Uniform average of ``rho`` over rotations about z: keeps dyads with M = M'."""
    blocks = {}
    for n, b in rho.blocks.items():
        M2 = np.array([s.M2 for s in rho.scheme.shell_states(n)])
        blocks[n] = np.where(M2[:, None] == M2[None, :], b, 0.0)
    return DensityMatrix(rho.scheme, blocks)


@dataclass
class SweepRow:
    E: float  # V/m
    label: str
    stokes: dict  # (line, geometry name) -> StokesResult
    a_2P: float
    normalized_alignment: float
    ok: bool = True
    message: str = ""
    max_residual: float = 0.0
    elapsed: float = 0.0  # summed wall time of the solves behind the row, s

    @property
    def E_V_per_cm(self) -> float:
        return self.E / 100.0

    @property
    def omega_E(self) -> float:
        return CONSTANTS.omega_E_per_V_per_m * self.E


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def labels(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.label not in seen:
                seen.append(r.label)
        return seen

    def curve(self, label: str, quantity: str = "normalized_alignment", key=None) -> tuple[np.ndarray, np.ndarray]:
        """``(E, y)`` for one label; ``quantity`` is a row attribute or ``blp``/``bcp``/``I``/``Q``/``U``/``V`` of ``key``."""
        rows = [r for r in self.rows if r.label == label]
        E = np.array([r.E for r in rows])
        if quantity in ("a_2P", "normalized_alignment"):
            y = [getattr(r, quantity) for r in rows]
        else:
            y = []
            for r in rows:
                s = r.stokes.get(key) if r.ok else None
                if s is None:
                    y.append(float("nan"))
                elif quantity in ("blp", "bcp"):
                    y.append(getattr(s, quantity) if s.I > 0 else float("nan"))
                else:
                    y.append(getattr(s, quantity))
        return E, np.array(y, dtype=float)

    def extend(self, other: "SweepResult") -> "SweepResult":
        self.rows.extend(other.rows)
        return self


DEFAULT_GEOMETRIES = {
    "perp": ViewingGeometry.from_angles(math.pi / 2, 0.0),
    "par": ViewingGeometry.from_angles(0.0, 0.0),
}


# -- worker side ------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(scheme: LevelScheme, rate_set, solver_kw: dict):
    _WORKER["system"] = SESystem(scheme, rate_set)
    _WORKER["kw"] = solver_kw
    _WORKER.pop("phase", None)


def _solve_node(task):
    """Solve one (E, node); returns weighted density-matrix blocks or an error."""
    idx, E, B, (theta, phi, weight, avg) = task
    system = _WORKER["system"]
    try:
        rho = system.solve(FieldConfig.polar(E, theta, phi, B), **_WORKER["kw"])
        resid = rho.residual
        if avg:
            rho = azimuth_average(rho)
        return idx, {n: weight * b for n, b in rho.blocks.items()}, resid, None
    except Exception as exc:  # reported per node, sweep continues
        return idx, None, float("nan"), f"node theta={theta:.6g} phi={phi:.6g}: {exc}"


def reflection_phases(scheme: LevelScheme) -> dict:
    """Per-shell ``(-1)^(L+L'+M-M')``: the z -> -z reflection acting on dyads."""
    out = {}
    for n in scheme.shells:
        st = scheme.shell_states(n)
        L = np.array([s.L for s in st])
        M2 = np.array([s.M2 for s in st])
        out[n] = np.where((L[:, None] + L[None, :] + (M2[:, None] - M2[None, :]) // 2) % 2, -1.0, 1.0)
    return out


def _integrate_point(task):
    """Adaptive isotropic average at one field strength."""
    idx, E, B, dist, az_nodes, shells = task
    system = _WORKER["system"]
    scheme = system.scheme
    phase = _WORKER.setdefault("phase", reflection_phases(scheme))
    resid = [0.0]

    def rho_sym(mu):
        theta = math.acos(min(1.0, max(-1.0, mu)))
        acc = {n: 0.0 for n in shells}
        for _, phi, w, avg in az_nodes:
            rho = system.solve(FieldConfig.polar(E, theta, phi, B), **_WORKER["kw"])
            resid[0] = max(resid[0], rho.residual)
            if avg:
                rho = azimuth_average(rho)
            for n in shells:
                acc[n] = acc[n] + w * rho.blocks[n]
        return {n: 0.5 * (acc[n] + phase[n] * acc[n]) for n in shells}

    try:
        ref = rho_sym(0.5)
        # scale each shell by its population so the max-norm controls every shell
        scale = {n: max(abs(np.trace(ref[n]).real), 1e-300) for n in shells}
        shapes = [(n, ref[n].shape) for n in shells]

        def f(mu):
            r = rho_sym(mu)
            return np.concatenate([np.concatenate([r[n].real.ravel(), r[n].imag.ravel()]) / scale[n] for n in shells])

        cuts = list(np.linspace(0.0, 1.0, dist.panels + 1)[1:-1])
        v, _, info = quad_vec(
            f, 0.0, 1.0, epsabs=0.0, epsrel=dist.tol, norm="max", quadrature="gk15",
            points=cuts or None, limit=5000, full_output=True,
        )
        if not info.success:
            raise ArithmeticError(f"adaptive quadrature did not converge: {info.message}")
        blocks, off = {}, 0
        for n, shp in shapes:
            k = shp[0] * shp[1]
            blocks[n] = scale[n] * (v[off:off + k] + 1j * v[off + k:off + 2 * k]).reshape(shp)
            off += 2 * k
        for n in scheme.shells:
            if n not in blocks:  # not integrated
                d = len(scheme.shell_states(n))
                blocks[n] = np.full((d, d), np.nan + 0j)
        return idx, blocks, resid[0], None
    except Exception as exc:
        return idx, None, float("nan"), f"isotropic E={E:.6g} V/m: {exc}"


def _timed(fn, task):
    t0 = time.perf_counter()
    out = fn(task)
    return (*out, time.perf_counter() - t0)


def _run_tasks(tasks, scheme, rate_set, solver_kw, workers, fn=_solve_node):
    workers = max_workers(workers)
    call = partial(_timed, fn)
    if workers == 1 or len(tasks) == 1:
        _init_worker(scheme, rate_set, solver_kw)
        return [call(t) for t in tasks]
    chunk = 1 if fn is _integrate_point else max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(scheme, rate_set, solver_kw)) as pool:
        return list(pool.map(call, tasks, chunksize=chunk))


def sweep(
    scheme: LevelScheme,
    illumination: Illumination,
    B_vector=(0.0, 0.0, 0.0),
    dist: FieldDistribution = FieldDistribution(),
    E_grid=None,
    lines=("Ly_alpha",),
    geometries: dict | None = None,
    workers: int | None = 1,
    use_symmetry: bool = True,
    label: str | None = None,
    solver_kw: dict | None = None,
) -> SweepResult:
    """Solve over a field-strength grid and a field-orientation distribution.

    ``B_vector`` (T) must lie along z when nonzero.  Returns one row per grid
    point with node-averaged Stokes parameters and 2P alignment.
    """
    E_grid = default_grid() if E_grid is None else np.asarray(E_grid, dtype=float)
    if E_grid.ndim != 1 or len(E_grid) == 0:
        raise ValueError("E_grid must be a non-empty sequence")
    if np.any(E_grid < 0) or np.any(np.diff(E_grid) <= 0):
        raise ValueError("E_grid must be non-negative and strictly increasing")
    B = np.asarray(B_vector, dtype=float)
    if B.shape != (3,) or abs(B[0]) > 0 or abs(B[1]) > 0:
        raise ValueError("B must be a 3-vector along z")
    geometries = DEFAULT_GEOMETRIES if geometries is None else geometries
    rate_set = rates(illumination, scheme.transitions())
    if dist.adaptive:
        az = dist.nodes(azimuth_symmetric=use_symmetry)
        nodes = [None]
        # error control covers only the shells behind the reported quantities
        shells = tuple(sorted({2} | {resolve_line(scheme, line)[0] for line in lines}))
        tasks = [((i, 0), float(E), float(B[2]), dist, az, shells) for i, E in enumerate(E_grid)]
        results = _run_tasks(tasks, scheme, rate_set, solver_kw or {}, workers, _integrate_point)
    else:
        nodes = dist.nodes(azimuth_symmetric=use_symmetry)
        tasks = [((i, j), float(E), float(B[2]), node) for i, E in enumerate(E_grid) for j, node in enumerate(nodes)]
        results = _run_tasks(tasks, scheme, rate_set, solver_kw or {}, workers)
    by_point: dict = {}
    for (i, j), blocks, resid, err, dt in results:
        by_point.setdefault(i, {})[j] = (blocks, resid, err, dt)
    out = SweepResult()
    name = label or dist.label
    for i, E in enumerate(E_grid):
        per = by_point[i]
        elapsed = math.fsum(per[j][3] for j in range(len(nodes)))
        errors = [per[j][2] for j in range(len(nodes)) if per[j][2]]
        if errors:
            out.rows.append(
                SweepRow(float(E), name, {}, float("nan"), float("nan"), False, "; ".join(errors), float("nan"), elapsed)
            )
            continue
        # fixed summation order: bit-identical regardless of worker count
        total = {n: sum(per[j][0][n] for j in range(len(nodes))) for n in scheme.shells}
        rho = DensityMatrix(scheme, total)
        st = {}
        for line in lines:
            for gname, geom in geometries.items():
                st[(line, gname)] = stokes_emissivity(rho, line, geom)
        ob = observables(rho)
        imb = ob.imbalance
        out.rows.append(
            SweepRow(
                float(E),
                name,
                st,
                ob.a_2P,
                ob.a_2P / imb if imb else float("nan"),
                True,
                "",
                max(per[j][1] for j in range(len(nodes))),
                elapsed,
            )
        )
    return out


# -- figures ----------------------------------------------------------------


@dataclass
class FigureConfig:
    n_max: int = 4
    fine_structure: bool = True
    lamb_shift_hz: float = 0.0
    illumination: Illumination = field(default_factory=Illumination)
    E_grid: np.ndarray = None  # V/m
    B_gauss: float = 1000.0
    inclinations_deg: tuple = (0.0, 30.0, 60.0, 90.0)
    n_polar: int = 16
    n_azimuth: int = 8
    quadrature: str = "adaptive"
    tol: float = 1e-6
    panels: int = 2
    workers: int | None = 1
    use_symmetry: bool = True

    def grid(self) -> np.ndarray:
        return default_grid() if self.E_grid is None else np.asarray(self.E_grid, dtype=float)


def toy_curve(illumination: Illumination, E_grid, label: str = "toy") -> SweepResult:
    """Normalized 2P alignment of the restricted model along a field grid."""
    r = ToyRates.from_illumination(illumination)
    out = SweepResult()
    for E in E_grid:
        s = toy_solve(r, CONSTANTS.omega_E_per_V_per_m * float(E))
        out.rows.append(SweepRow(float(E), label, {}, s.a_2P, s.normalized_alignment))
    return out


def reproduce_figure(figure_id: str, config: FigureConfig | None = None) -> SweepResult:
    """Data behind one of the figures: ``fig2`` (2P alignment), ``fig3`` (BLP), ``fig4`` (BCP).

    fig3 and fig4 share the same solves: every row carries Ly-alpha Stokes
    parameters both at 90 degrees from z (``perp``) and along z (``par``).
    """
    cfg = config or FigureConfig()
    grid = cfg.grid()
    scheme = build_levels(cfg.n_max, cfg.fine_structure, cfg.lamb_shift_hz)
    if figure_id == "fig2":
        res = sweep(
            scheme, cfg.illumination, (0, 0, 0), FieldDistribution.deterministic(), grid,
            workers=cfg.workers, label="full",
        )
        return res.extend(toy_curve(cfg.illumination, grid))
    if figure_id in ("fig3", "fig4"):
        B = (0.0, 0.0, cfg.B_gauss * 1e-4)
        res = SweepResult()
        for inc in cfg.inclinations_deg:
            d = FieldDistribution("random_azimuth", math.radians(inc), 0.0, cfg.n_azimuth, cfg.n_polar)
            res.extend(
                sweep(scheme, cfg.illumination, B, d, grid, workers=cfg.workers,
                      use_symmetry=cfg.use_symmetry, label=f"theta_E={inc:g}")
            )
        d = FieldDistribution.isotropic(cfg.n_polar, cfg.n_azimuth, cfg.quadrature, cfg.tol, cfg.panels)
        res.extend(
            sweep(scheme, cfg.illumination, B, d, grid, workers=cfg.workers,
                  use_symmetry=cfg.use_symmetry, label="isotropic")
        )
        return res
    raise ValueError(f"unknown figure id {figure_id!r}; expected fig2, fig3 or fig4")
