"""Quick oracle and null-theorem checks, run by ``halign selftest``.

Each check prints one ``PASS``/``FAIL`` line.  The checks are reduced
versions of the acceptance tests, sized to finish in well under a minute.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np

from .density_matrix import observables, polarization_ratio
from .emission import ViewingGeometry, stokes_emissivity
from .field_sweep import FieldDistribution, sweep
from .hydrogen_model import LAMB_SHIFT_2S_HZ, LevelScheme, build_levels, restrict_to_toy
from .radiation_field import Illumination
from .se_solver import FieldConfig, solve
from .toy_model import ToyRates, toy_closed_form, toy_solve, two_term_factor

__all__ = ["run_selftest", "CHECKS"]


PERP = ViewingGeometry.from_angles(math.pi / 2, 0.0)


def check_dimension():
    d = build_levels(4).dimension()
    return d == 1416, f"dimension {d}"


def check_toy_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        r = ToyRates(*10 ** rng.uniform(2, 9, 6))
        w = 10 ** rng.uniform(3, 13)
        s = toy_solve(r, w)
        a, c = toy_closed_form(r, s, w)
        worst = max(worst, abs(s.a_2P - a) / abs(a), abs(s.c_2S2P - c) / abs(c))
    return worst <= 1e-12, f"max relative deviation {worst:.2e}"


def check_two_term_null():
    r = ToyRates.from_illumination(Illumination()).without_3P()
    worst = abs(two_term_factor(r))
    for w in 10 ** np.linspace(3, 13, 11):
        s = toy_solve(r, w)
        worst = max(worst, abs(s.a_2P), abs(s.c_2S2P))
    rho = solve(restrict_to_toy(), Illumination.only_lines(["Ly_alpha"]), FieldConfig.polar(1e4))
    o = observables(rho)
    worst = max(worst, abs(o.a_2P), abs(o.c_2S2P))
    return worst <= 1e-12, f"max |a_2P|, |c_2S2P| {worst:.2e}"


def check_te_null():
    rho = solve(build_levels(3), Illumination.planck_te(20000.0), FieldConfig.polar(1e5, 0.7, 0.3, 0.1))
    ratio = polarization_ratio(rho)
    return ratio <= 1e-10, f"max K>0 / K=0 {ratio:.2e}"


def check_magnetic_null():
    rho = solve(build_levels(3), Illumination(), FieldConfig.polar(0.0, 0.0, 0.0, 0.1))
    ratio = polarization_ratio(rho)
    return ratio <= 1e-10, f"max K>0 / K=0 {ratio:.2e}"


def check_lyman_beta():
    ill = Illumination.only_lines(["Ly_beta"])
    strong = stokes_emissivity(solve(restrict_to_toy(), ill, FieldConfig.polar(1e8)), "Ly_alpha", PERP).blp
    terms = ((1, 0), (2, 0), (2, 1), (3, 1))
    weak_scheme = LevelScheme(3, True, LAMB_SHIFT_2S_HZ, terms=terms)
    weak = stokes_emissivity(solve(weak_scheme, ill, FieldConfig.polar(1e-2)), "Ly_alpha", PERP).blp
    ok = abs(100 * strong + 100) <= 0.1 and abs(100 * weak - 32.88) <= 0.3
    return ok, f"strong {100 * strong:+.4f}%, weak {100 * weak:+.4f}%"


def check_electric_bcp_null():
    scheme = build_levels(3)
    worst = 0.0
    for E, th in ((1e3, 0.4), (1e5, 1.3)):
        rho = solve(scheme, Illumination(), FieldConfig.polar(E, th, 0.9))
        for line in ("Ly_alpha", "Ly_beta", "H_alpha"):
            for view in ((0.3, 0.2), (1.6, 2.0)):
                worst = max(worst, abs(stokes_emissivity(rho, line, ViewingGeometry.from_angles(*view)).bcp))
    return worst <= 1e-10, f"max |bcp| {worst:.2e}"


def check_isotropic_null():
    d = FieldDistribution.isotropic(8, 4, quadrature="gauss")
    res = sweep(build_levels(2), Illumination(), (0, 0, 0), d, [1e3, 1e5], use_symmetry=False)
    worst = 0.0
    for row in res.rows:
        for s in row.stokes.values():
            worst = max(worst, abs(s.blp), abs(s.bcp))
    return worst <= 1e-8, f"max |blp|, |bcp| {worst:.2e}"


CHECKS = [
    ("SE dimension n<=4", check_dimension),
    ("toy oracle", check_toy_oracle),
    ("two-term null", check_two_term_null),
    ("TE null", check_te_null),
    ("magnetic null", check_magnetic_null),
    ("Ly-beta anchors", check_lyman_beta),
    ("electric-only BCP null", check_electric_bcp_null),
    ("isotropic null", check_isotropic_null),
]


def run_selftest(stream=None) -> bool:
    """Run every check, print one line each and a summary; True if all pass."""
    stream = stream or sys.stdout
    passed = 0
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        passed += ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - t0:.2f} s)", file=stream)
    print(f"{passed}/{len(CHECKS)} checks passed", file=stream)
    return passed == len(CHECKS)
