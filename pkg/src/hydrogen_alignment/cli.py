"""Command-line interface: ``halign {solve,sweep,figure,toy,selftest}``.

Configuration comes from an optional JSON file (``--config``) whose
sections mirror :class:`RunConfig`; command-line flags override it.  Fields
are given in V/cm and gauss.  Results go to CSV (``--output``, default
stdout) with a ``<output>.meta`` key-value sidecar.

Exit codes: 0 success, 1 selftest failure, 2 configuration error, 3 solver
failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .density_matrix import dump_density, observables
from .emission import ViewingGeometry, resolve_line, stokes_emissivity
from .field_sweep import FieldDistribution, FigureConfig, max_workers, reproduce_figure, sweep
from .hydrogen_model import CONSTANTS, build_levels, restrict_to_toy
from .radiation_field import Illumination, line_label, parse_line, rates
from .se_solver import FieldConfig, SESystem, SingularSystemError
from .toy_model import ToyRates, toy_lyman_alpha_blp, toy_solve

log = logging.getLogger("hydrogen_alignment")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ModelConfig:
    n_max: int = 4
    fine_structure: bool = True
    lamb_shift_hz: float = 0.0


@dataclass
class IlluminationConfig:
    mode: str = "diluted_planck"
    T_kelvin: float = 20000.0
    dilution: float = 0.5
    lines: list = None  # pump only these lines (diluted Planck), others dark
    per_line: dict = field(default_factory=dict)  # label -> mean intensity (W m^-2 Hz^-1 sr^-1)


@dataclass
class FieldsConfig:
    E_V_per_cm: float = 0.0
    theta_E_deg: float = 0.0
    phi_E_deg: float = 0.0
    B_gauss: float = 0.0  # along z
    E_vector_V_per_cm: list = None  # solve only; overrides E_V_per_cm and the angles
    B_vector_gauss: list = None  # solve only; overrides B_gauss
    grid_V_per_cm: list = None  # explicit grid; overrides grid_lo/hi/n
    grid_lo_V_per_cm: float = 1e-2
    grid_hi_V_per_cm: float = 1e5
    grid_n: int = 40


@dataclass
class DistributionConfig:
    kind: str = "deterministic"
    n_polar: int = 16
    n_azimuth: int = 8
    quadrature: str = "adaptive"
    tol: float = 1e-6
    panels: int = 2
    symmetry: bool = True


@dataclass
class GeometryConfig:
    view_theta_deg: float = 90.0
    view_phi_deg: float = 0.0
    reference_direction: list = None  # unit vector of positive Q; default: azimuthal unit vector
    lines: list = field(default_factory=lambda: ["Ly_alpha"])


@dataclass
class OutputConfig:
    path: str = "-"
    precision: int = 12


@dataclass
class SolverConfig:
    residual_tol: float = 1e-10
    rcond_min: float = 1e-15
    max_dimension: int = 5000
    on_singular: str = "conserve"


@dataclass
class ParallelConfig:
    workers: int = 1


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    illumination: IlluminationConfig = field(default_factory=IlluminationConfig)
    fields: FieldsConfig = field(default_factory=FieldsConfig)
    distribution: DistributionConfig = field(default_factory=DistributionConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    parallel: ParallelConfig = field(default_factory=ParallelConfig)

    @classmethod
    def __post_init__(self):
        self.explicit = set()  # (section, key) pairs given by file or flag

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        cfg = cls()
        for section, values in data.items():
            if section not in SECTIONS:
                raise ConfigError(f"unknown configuration section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"section {section!r} must be an object")
            for key, value in values.items():
                cfg.set(section, key, value)
        return cfg

    def set(self, section: str, key: str, value):
        target = getattr(self, section)
        names = {f.name: f for f in dataclasses.fields(target)}
        if key not in names:
            raise ConfigError(f"unknown key {section}.{key}")
        default = getattr(type(target)(), key)
        setattr(target, key, _coerce(f"{section}.{key}", value, default))
        self.explicit.add((section, key))

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self):
        m, il, f, d, s = self.model, self.illumination, self.fields, self.distribution, self.solver
        if not 1 <= m.n_max <= 6:
            raise ConfigError("model.n_max must be in 1..6")
        if il.mode not in ("diluted_planck", "planck_te", "per_line"):
            raise ConfigError(f"illumination.mode {il.mode!r} is not one of diluted_planck, planck_te, per_line")
        if il.T_kelvin <= 0 or il.dilution < 0:
            raise ConfigError("illumination.T_kelvin must be positive and dilution non-negative")
        if d.kind not in ("deterministic", "random_azimuth", "isotropic"):
            raise ConfigError(f"distribution.kind {d.kind!r} is not valid")
        if d.n_polar < 1 or d.n_azimuth < 1 or d.panels < 1:
            raise ConfigError("quadrature counts must be positive")
        if d.quadrature not in ("adaptive", "gauss") or not d.tol > 0:
            raise ConfigError("distribution.quadrature must be adaptive or gauss, with tol > 0")
        if f.E_V_per_cm < 0 or f.grid_n < 1 or f.grid_lo_V_per_cm <= 0 or f.grid_hi_V_per_cm <= f.grid_lo_V_per_cm:
            raise ConfigError("field strengths and grid bounds must be positive and increasing")
        if f.grid_V_per_cm is not None:
            g = np.asarray(f.grid_V_per_cm, dtype=float)
            if g.ndim != 1 or len(g) == 0 or np.any(g < 0) or np.any(np.diff(g) <= 0):
                raise ConfigError("fields.grid_V_per_cm must be non-negative and strictly increasing")
        for name in ("E_vector_V_per_cm", "B_vector_gauss"):
            v = getattr(f, name)
            if v is not None and (len(v) != 3 or not all(math.isfinite(float(x)) for x in v)):
                raise ConfigError(f"fields.{name} must be a finite 3-vector")
        try:
            self.geometry_obj()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"geometry: {exc}") from None
        if s.on_singular not in ("conserve", "raise"):
            raise ConfigError("solver.on_singular must be 'conserve' or 'raise'")
        if not 1 <= self.output.precision <= 17:
            raise ConfigError("output.precision must be in 1..17")
        if self.parallel.workers < 1:
            raise ConfigError("parallel.workers must be positive")
        for ln in list(self.geometry.lines) + list(il.lines or []) + list(il.per_line):
            try:
                parse_line(ln)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            self.make_illumination()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # -- builders ---------------------------------------------------------

    def make_scheme(self):
        return build_levels(self.model.n_max, self.model.fine_structure, self.model.lamb_shift_hz)

    def make_illumination(self) -> Illumination:
        il = self.illumination
        if il.lines is not None:
            return Illumination.only_lines(il.lines, il.T_kelvin, il.dilution, n_max=max(6, self.model.n_max))
        if il.mode == "planck_te":
            return Illumination("planck_te", il.T_kelvin, 1.0, dict(il.per_line))
        return Illumination(il.mode, il.T_kelvin, il.dilution, dict(il.per_line))

    def grid_V_per_m(self) -> np.ndarray:
        f = self.fields
        if f.grid_V_per_cm is not None:
            return 100.0 * np.asarray(f.grid_V_per_cm, dtype=float)
        return 100.0 * np.logspace(math.log10(f.grid_lo_V_per_cm), math.log10(f.grid_hi_V_per_cm), f.grid_n)

    def geometry_obj(self) -> ViewingGeometry:
        g = self.geometry
        geom = ViewingGeometry.from_angles(math.radians(g.view_theta_deg), math.radians(g.view_phi_deg))
        if g.reference_direction is None:
            return geom
        return ViewingGeometry(geom.direction, tuple(float(x) for x in g.reference_direction))

    def field_config(self) -> FieldConfig:
        f = self.fields
        if f.E_vector_V_per_cm is not None:
            E = tuple(100.0 * float(x) for x in f.E_vector_V_per_cm)
        else:
            E = FieldConfig.polar(100.0 * f.E_V_per_cm, math.radians(f.theta_E_deg), math.radians(f.phi_E_deg)).E
        if f.B_vector_gauss is not None:
            B = tuple(1e-4 * float(x) for x in f.B_vector_gauss)
        else:
            B = (0.0, 0.0, 1e-4 * f.B_gauss)
        return FieldConfig(E, B)

    def distribution_obj(self) -> FieldDistribution:
        d, f = self.distribution, self.fields
        return FieldDistribution(
            d.kind, math.radians(f.theta_E_deg), math.radians(f.phi_E_deg), d.n_azimuth, d.n_polar,
            d.quadrature, d.tol, d.panels,
        )

    def solver_kw(self) -> dict:
        s = self.solver
        return {"on_singular": s.on_singular, "rcond_min": s.rcond_min, "residual_tol": s.residual_tol}


SECTIONS = {f.name for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value, default):
    if value is None:
        return None
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigError(f"{name} must be a boolean")
    if isinstance(default, int):
        if isinstance(value, bool) or not float(value).is_integer():
            raise ConfigError(f"{name} must be an integer")
        return int(value)
    if isinstance(default, float):
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number") from None
        if not math.isfinite(v):
            raise ConfigError(f"{name} must be finite")
        return v
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be an object")
        return {str(k): float(v) for k, v in value.items()}
    if default is None or isinstance(default, list):
        if isinstance(value, str):
            value = [x for x in value.split(",") if x]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        return list(value)
    return str(value)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x, precision: int) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return f"{x + 0.0 if x == 0 else x:.{precision}g}"


def _csv_text(header, rows, precision: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x, precision) for x in r])
    return buf.getvalue()


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_meta(path: str, meta: dict):
    text = "".join(f"{k} = {v}\n" for k, v in meta.items())
    if path == "-":
        sys.stderr.write(text)
        return
    with open(path + ".meta", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(cfg: RunConfig, args) -> tuple[str, dict]:
    scheme = cfg.make_scheme()
    if scheme.dimension() > cfg.solver.max_dimension:
        raise ConfigError(f"dimension {scheme.dimension()} exceeds solver.max_dimension")
    _check_lines(cfg, scheme)
    ill = cfg.make_illumination()
    fields = cfg.field_config()
    system = SESystem(scheme, _rates(ill, scheme), cfg.solver.max_dimension)
    op = system.operator(fields)
    if args.dump_operator:
        with open(args.dump_operator, "w", encoding="utf-8") as fh:
            op.dump(fh)
    rho = system.solve(fields, **cfg.solver_kw())
    if args.dump_density:
        with open(args.dump_density, "w", encoding="utf-8") as fh:
            fh.write(dump_density(rho))
    geom = cfg.geometry_obj()
    rows = []
    for line in cfg.geometry.lines:
        s = stokes_emissivity(rho, line, geom)
        th, ph = geom.angles
        rows.append([line_label(*parse_line(line)), math.degrees(th), math.degrees(ph), s.I, s.Q, s.U, s.V,
                     s.Q / s.I if s.I > 0 else float("nan"), s.V / s.I if s.I > 0 else float("nan")])
    ob = observables(rho)
    header = ["line", "view_theta_deg", "view_phi_deg", "I", "Q", "U", "V", "blp", "bcp"]
    meta = {
        "dimension": scheme.dimension(),
        "omega_E_rad_s": fields.omega_E,
        "omega_B_rad_s": fields.omega_B,
        "residual": rho.residual,
        "rcond": rho.rcond,
        "trace": rho.trace(),
        "a_2P": ob.a_2P,
        "c_2S2P": ob.c_2S2P,
        "a_2P_normalized": ob.a_2P / ob.imbalance if ob.imbalance else float("nan"),
    }
    for (n, L), N in sorted(ob.term_populations.items()):
        meta[f"N_{n}{'SPDFGH'[L]}"] = N
    return _csv_text(header, rows, cfg.output.precision), meta


def _check_lines(cfg: RunConfig, scheme):
    for line in cfg.geometry.lines:
        try:
            resolve_line(scheme, line)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _rates(ill, scheme):
    return rates(ill, scheme.transitions())


def cmd_sweep(cfg: RunConfig, args) -> tuple[str, dict]:
    scheme = cfg.make_scheme()
    if scheme.dimension() > cfg.solver.max_dimension:
        raise ConfigError(f"dimension {scheme.dimension()} exceeds solver.max_dimension")
    _check_lines(cfg, scheme)
    grid = cfg.grid_V_per_m()
    res = sweep(
        scheme,
        cfg.make_illumination(),
        (0.0, 0.0, cfg.fields.B_gauss * 1e-4),
        cfg.distribution_obj(),
        grid,
        lines=tuple(cfg.geometry.lines),
        geometries={"view": cfg.geometry_obj()},
        workers=cfg.parallel.workers,
        use_symmetry=cfg.distribution.symmetry,
        solver_kw=cfg.solver_kw(),
    )
    labels = [line_label(*parse_line(x)) for x in cfg.geometry.lines]
    header = ["E_V_per_cm", "omega_E", "distribution", "ok", "a_2P", "a_2P_normalized"]
    for lab in labels:
        header += [f"{lab}_{c}" for c in ("I", "Q", "U", "V", "blp", "bcp")]
    rows = []
    for r in res.rows:
        row = [r.E_V_per_cm, r.omega_E, r.label, r.ok, r.a_2P, r.normalized_alignment]
        for line in cfg.geometry.lines:
            s = r.stokes.get((line, "view"))
            if s is None:
                row += [float("nan")] * 6
            else:
                row += [s.I, s.Q, s.U, s.V, s.Q / s.I if s.I > 0 else float("nan"),
                        s.V / s.I if s.I > 0 else float("nan")]
        rows.append(row)
    failed = [r for r in res.rows if not r.ok]
    meta = {
        "dimension": scheme.dimension(),
        "points": len(res.rows),
        "failed_points": len(failed),
        "max_residual": max((r.max_residual for r in res.rows if r.ok), default=float("nan")),
    }
    for r in failed:
        meta[f"failure_E_V_per_cm_{r.E_V_per_cm:.6g}"] = r.message
    return _csv_text(header, rows, cfg.output.precision), meta


def cmd_figure(cfg: RunConfig, args) -> tuple[str, dict]:
    fc = FigureConfig(
        n_max=cfg.model.n_max,
        fine_structure=cfg.model.fine_structure,
        lamb_shift_hz=cfg.model.lamb_shift_hz,
        illumination=cfg.make_illumination(),
        E_grid=cfg.grid_V_per_m(),
        B_gauss=cfg.fields.B_gauss if ("fields", "B_gauss") in cfg.explicit else 1000.0,
        n_polar=cfg.distribution.n_polar,
        n_azimuth=cfg.distribution.n_azimuth,
        quadrature=cfg.distribution.quadrature,
        tol=cfg.distribution.tol,
        panels=cfg.distribution.panels,
        workers=cfg.parallel.workers,
        use_symmetry=cfg.distribution.symmetry,
    )
    res = reproduce_figure(args.figure_id, fc)
    labels = res.labels()
    if args.figure_id == "fig2":
        quantity, key = "normalized_alignment", None
    elif args.figure_id == "fig3":
        quantity, key = "blp", ("Ly_alpha", "perp")
    else:
        quantity, key = "bcp", ("Ly_alpha", "par")
    curves = {lab: res.curve(lab, quantity, key) for lab in labels}
    E = curves[labels[0]][0]
    header = ["E_V_per_cm", "omega_E"] + labels
    rows = []
    for i, e in enumerate(E):
        rows.append([e / 100.0, CONSTANTS.omega_E_per_V_per_m * e] + [curves[lab][1][i] for lab in labels])
    failed = [r for r in res.rows if not r.ok]
    meta = {
        "figure": args.figure_id,
        "quantity": quantity if key is None else f"{quantity} {key[0]} view={key[1]}",
        "B_gauss": fc.B_gauss if args.figure_id != "fig2" else 0.0,
        "failed_points": len(failed),
    }
    return _csv_text(header, rows, cfg.output.precision), meta


PUMPS = {"lyman-beta": ["Ly_beta"], "lyman-alpha": ["Ly_alpha"]}


def cmd_toy(cfg: RunConfig, args) -> tuple[str, dict]:
    if args.pump:
        ill = Illumination.only_lines(PUMPS[args.pump], cfg.illumination.T_kelvin, cfg.illumination.dilution)
    else:
        ill = cfg.make_illumination()
    r = ToyRates.from_illumination(ill)
    header = ["E_V_per_cm", "omega_E", "N_1S", "N_2S", "N_2P", "N_3P", "c_2S2P", "a_2P", "a_2P_normalized", "blp"]
    rows = []
    for E in cfg.grid_V_per_m():
        w = CONSTANTS.omega_E_per_V_per_m * E
        s = toy_solve(r, w)
        rows.append([E / 100.0, w, s.N_1S, s.N_2S, s.N_2P, s.N_3P, s.c_2S2P, s.a_2P, s.normalized_alignment,
                     toy_lyman_alpha_blp(s)])
    meta = {f"rate_{k}": v for k, v in r.as_dict().items()}
    meta["pump"] = args.pump or "config"
    return _csv_text(header, rows, cfg.output.precision), meta


def cmd_selftest(cfg: RunConfig, args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest(sys.stdout) else EXIT_SELFTEST


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halign", description="Electric-field induced alignment and broadband polarization of hydrogen lines.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("-o", "--output", help="CSV output path ('-' for stdout)")
    common.add_argument("--precision", type=int, help="significant digits in the CSV")
    common.add_argument("--n-max", type=int)
    fs = common.add_mutually_exclusive_group()
    fs.add_argument("--fine-structure", dest="fine_structure", action="store_true", default=None)
    fs.add_argument("--no-fine-structure", dest="fine_structure", action="store_false")
    common.add_argument("--lamb-shift-hz", type=float, help="2S1/2 offset added above 2P1/2 (Hz)")
    common.add_argument("--illumination", choices=["diluted_planck", "planck_te", "per_line"])
    common.add_argument("--T", type=float, dest="T_kelvin", help="radiation temperature (K)")
    common.add_argument("--dilution", type=float)
    common.add_argument("--pump-lines", help="comma-separated lines to illuminate; all others dark")
    common.add_argument("--E", type=float, dest="E_V_per_cm", help="field strength (V/cm)")
    common.add_argument("--theta-E", type=float, help="field inclination (deg)")
    common.add_argument("--phi-E", type=float, help="field azimuth (deg)")
    common.add_argument("--B", type=float, dest="B_gauss", help="magnetic field along z (G)")
    common.add_argument("--grid", nargs=3, type=float, metavar=("LO", "HI", "N"), help="log grid in V/cm")
    common.add_argument("--dist", choices=["deterministic", "random_azimuth", "isotropic"])
    common.add_argument("--n-polar", type=int)
    common.add_argument("--n-azimuth", type=int)
    common.add_argument("--quadrature", choices=["adaptive", "gauss"], help="isotropic polar rule")
    common.add_argument("--tol", type=float, help="adaptive quadrature relative tolerance")
    common.add_argument("--panels", type=int, help="initial adaptive panels in cos(theta)")
    common.add_argument("--no-symmetry", action="store_true", help="brute-force azimuth quadrature")
    common.add_argument("--view-theta", type=float, help="viewing inclination (deg)")
    common.add_argument("--view-phi", type=float, help="viewing azimuth (deg)")
    common.add_argument("--lines", help="comma-separated emission lines")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="one stationary solution")
    s.add_argument("--dump-operator", help="write the component-tagged operator as text")
    s.add_argument("--dump-density", help="write the density matrix as text")
    sub.add_parser("sweep", parents=[common], help="field-strength sweep over a distribution")
    f = sub.add_parser("figure", parents=[common], help="data for fig2, fig3 or fig4")
    f.add_argument("figure_id", choices=["fig2", "fig3", "fig4"])
    t = sub.add_parser("toy", parents=[common], help="restricted 1S/2S/2P/3P model")
    t.add_argument("--pump", choices=sorted(PUMPS), help="illuminate only this line")
    sub.add_parser("selftest", parents=[common], help="quick oracle and null tests")
    return p


FLAG_MAP = {
    "precision": ("output", "precision"),
    "n_max": ("model", "n_max"),
    "fine_structure": ("model", "fine_structure"),
    "lamb_shift_hz": ("model", "lamb_shift_hz"),
    "illumination": ("illumination", "mode"),
    "T_kelvin": ("illumination", "T_kelvin"),
    "dilution": ("illumination", "dilution"),
    "pump_lines": ("illumination", "lines"),
    "E_V_per_cm": ("fields", "E_V_per_cm"),
    "theta_E": ("fields", "theta_E_deg"),
    "phi_E": ("fields", "phi_E_deg"),
    "B_gauss": ("fields", "B_gauss"),
    "dist": ("distribution", "kind"),
    "n_polar": ("distribution", "n_polar"),
    "n_azimuth": ("distribution", "n_azimuth"),
    "quadrature": ("distribution", "quadrature"),
    "tol": ("distribution", "tol"),
    "panels": ("distribution", "panels"),
    "view_theta": ("geometry", "view_theta_deg"),
    "view_phi": ("geometry", "view_phi_deg"),
    "lines": ("geometry", "lines"),
    "workers": ("parallel", "workers"),
    "output": ("output", "path"),
}


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    cfg = RunConfig.from_dict(data)
    for flag, (section, key) in FLAG_MAP.items():
        v = getattr(args, flag, None)
        if v is not None:
            cfg.set(section, key, v)
    if getattr(args, "grid", None):
        lo, hi, n = args.grid
        cfg.set("fields", "grid_lo_V_per_cm", lo)
        cfg.set("fields", "grid_hi_V_per_cm", hi)
        cfg.set("fields", "grid_n", n)
        cfg.fields.grid_V_per_cm = None
    if getattr(args, "no_symmetry", False):
        cfg.distribution.symmetry = False
    cfg.validate()
    return cfg


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "figure": cmd_figure, "toy": cmd_toy}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"halign: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "selftest":
        return cmd_selftest(cfg, args)
    t0 = time.perf_counter()
    try:
        text, meta = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"halign: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"halign: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"halign: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    elapsed = time.perf_counter() - t0
    full_meta = {
        "program": "halign",
        "version": __version__,
        "command": args.command + (f" {args.figure_id}" if args.command == "figure" else ""),
        "workers": max_workers(cfg.parallel.workers),
        "elapsed_s": f"{elapsed:.3f}",
        **{k: _fmt(v, cfg.output.precision) for k, v in meta.items()},
        "config": json.dumps(cfg.as_dict(), sort_keys=True),
    }
    try:
        _write(cfg.output.path, text)
        _write_meta(cfg.output.path, full_meta)
    except OSError as exc:
        print(f"halign: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = int(meta.get("failed_points", 0) or 0)
    if failed:
        print(f"halign: {failed} grid point(s) failed; see metadata", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
