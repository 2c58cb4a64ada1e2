import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrogen_alignment.density_matrix import DensityMatrix
from hydrogen_alignment.emission import (
    StokesResult,
    ViewingGeometry,
    bcp,
    blp,
    csv_row,
    resolve_line,
    stokes_emissivity,
)
from hydrogen_alignment.hydrogen_model import CONSTANTS as C, bohr_frequency, einstein_A, restrict_to_toy
from hydrogen_alignment.radiation_field import Illumination
from hydrogen_alignment.se_solver import FieldConfig, solve


def orbital_state(scheme, n, L, mL):
    """Spin-unpolarized |n L mL> projector written in the |L J M> basis."""
    from sympy import Rational
    from sympy.physics.quantum.cg import CG

    st_ = scheme.shell_states(n)
    idx = {(s.L, s.J2, s.M2): k for k, s in enumerate(st_)}
    rho = DensityMatrix(scheme)
    for ms2 in (1, -1):
        v = np.zeros(len(st_))
        M2 = 2 * mL + ms2
        for J2 in (2 * L - 1, 2 * L + 1):
            if (L, J2, M2) in idx:
                v[idx[(L, J2, M2)]] = float(CG(L, mL, Rational(1, 2), Rational(ms2, 2), Rational(J2, 2), Rational(M2, 2)).doit())
        rho.blocks[n] += 0.5 * np.outer(v, v)
    return rho


def sphere_average(rho, line, n=24):
    x, w = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for xi, wi in zip(x, w):
        for k in range(2 * n):
            g = ViewingGeometry.from_angles(math.acos(xi), 2 * math.pi * k / (2 * n))
            total += wi * 0.5 / (2 * n) * stokes_emissivity(rho, line, g).I
    return total


def test_isotropic_intensity_normalization(toy_scheme):
    rho = DensityMatrix.isotropic(toy_scheme, {(2, 1): 1.0})
    nu = bohr_frequency(2, 1)
    expected = C.h * nu * einstein_A((2, 1), (1, 0)) / (4 * math.pi)
    for th in (0.0, 0.7, math.pi / 2):
        s = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(th, 0.3))
        assert s.I == pytest.approx(expected, rel=1e-12)
        assert abs(s.Q) <= 1e-15 * s.I and abs(s.U) <= 1e-15 * s.I and abs(s.V) <= 1e-15 * s.I


def test_total_power_independent_of_polarization(toy_scheme):
    rho = orbital_state(toy_scheme, 2, 1, 0)
    nu = bohr_frequency(2, 1)
    expected = C.h * nu * einstein_A((2, 1), (1, 0)) / (4 * math.pi)
    assert sphere_average(rho, "Ly_alpha") == pytest.approx(expected, rel=1e-12)


def test_pi_oscillator_signs(toy_scheme):
    rho = orbital_state(toy_scheme, 2, 1, 0)
    perp = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(math.pi / 2))
    # oscillation along z: polarization parallel to the projected z axis, i.e. Q < 0
    assert perp.blp == pytest.approx(-1.0, abs=1e-14)
    assert stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(0.0)).I <= 1e-14 * perp.I


def test_sigma_plus_helicity(toy_scheme):
    rho = orbital_state(toy_scheme, 2, 1, 1)
    up = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(0.0))
    down = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(math.pi))
    assert up.bcp == pytest.approx(1.0, abs=1e-14)
    assert down.bcp == pytest.approx(-1.0, abs=1e-14)
    side = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(math.pi / 2))
    assert side.blp == pytest.approx(1.0, abs=1e-14)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_linearity(a, b, th, ph):
    s = restrict_to_toy()
    r1 = orbital_state(s, 2, 1, 0)
    r2 = orbital_state(s, 3, 1, 1) + orbital_state(s, 2, 1, -1)
    g = ViewingGeometry.from_angles(th, ph)
    lhs = stokes_emissivity(a * r1 + b * r2, "Ly_alpha", g)
    s1, s2 = stokes_emissivity(r1, "Ly_alpha", g), stokes_emissivity(r2, "Ly_alpha", g)
    scale = (abs(a) + abs(b)) * max(s1.I, s2.I)
    for k in "IQUV":
        ref = a * getattr(s1, k) + b * getattr(s2, k)
        assert abs(getattr(lhs, k) - ref) <= 1e-13 * scale


@pytest.mark.parametrize("th", [0.2, 0.9, 1.3])
def test_front_back_symmetry(system3, th):
    rho = system3.solve(FieldConfig.polar(3e4, 0, 0, 0.1))
    for line in ("Ly_alpha", "Ly_beta", "H_alpha"):
        a = stokes_emissivity(rho, line, ViewingGeometry.from_angles(th, 0.4))
        b = stokes_emissivity(rho, line, ViewingGeometry.from_angles(math.pi - th, 0.4))
        assert a.blp == pytest.approx(b.blp, abs=1e-9)
        assert abs(a.U) <= 1e-12 * a.I  # azimuth symmetric: no U


def test_zero_field_unpolarized_every_line(scheme4):
    rho = solve(scheme4, Illumination(), FieldConfig())
    lines = {(u, l) for u in range(2, 5) for l in range(1, u)}
    for line in sorted(lines):
        s = stokes_emissivity(rho, line, ViewingGeometry.from_angles(1.1, 0.5))
        assert abs(s.blp) <= 1e-12 and abs(s.bcp) <= 1e-12


def test_resolve_line_variants(scheme3):
    nu, nl, up, lo, label = resolve_line(scheme3, "H_alpha")
    assert (nu, nl, label) == (3, 2, "H_alpha") and len(up) == 18 and len(lo) == 8
    _, _, up, lo, label = resolve_line(scheme3, ((3, 1), (2, 0)))
    assert label == "3P-2S" and len(up) == 6 and len(lo) == 2
    with pytest.raises(ValueError):
        resolve_line(scheme3, ((3, 2), (1, 0)))
    with pytest.raises(ValueError):
        resolve_line(scheme3, "Ly_gamma")
    with pytest.raises(ValueError):
        resolve_line(scheme3, (1, 2))


def test_geometry_validation_and_angles():
    with pytest.raises(ValueError):
        ViewingGeometry((0, 0, 1), (0, 0, 1))
    g = ViewingGeometry.from_angles(1.0, 2.0)
    th, ph = g.angles
    assert th == pytest.approx(1.0) and ph == pytest.approx(2.0)
    assert np.allclose(np.cross(g.reference_direction, g.second_direction), g.direction)


def test_degree_helpers():
    s = StokesResult(2.0, 1.0, 0.0, -0.5)
    assert blp(s) == 0.5 and bcp(s) == -0.25 and s.linear_degree == 0.5
    assert (s + s).I == 4.0 and s.scaled(2).V == -1.0
    with pytest.raises(ValueError):
        blp(StokesResult(0, 0, 0, 0))
    row = csv_row("Ly_alpha", ViewingGeometry.from_angles(math.pi / 2), StokesResult(0, 0, 0, 0))
    assert math.isnan(row[-1])
