import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrogen_alignment.density_matrix import observables
from hydrogen_alignment.emission import ViewingGeometry, stokes_emissivity
from hydrogen_alignment.radiation_field import Illumination
from hydrogen_alignment.se_solver import FieldConfig, solve
from hydrogen_alignment.toy_model import (
    ToyRates,
    toy_closed_form,
    toy_lyman_alpha_blp,
    toy_matrix,
    toy_residual,
    toy_solve,
    two_term_factor,
)

rate = st.floats(1e2, 1e9)
rates_st = st.builds(ToyRates, rate, rate, rate, rate, rate, rate)
omega = st.floats(1e3, 1e13)


@given(rates_st, omega)
def test_closed_form_agrees(r, w):
    s = toy_solve(r, w)
    a, c = toy_closed_form(r, s, w)
    assert s.a_2P == pytest.approx(a, rel=1e-12)
    assert s.c_2S2P == pytest.approx(c, rel=1e-12)


@given(rates_st, omega)
def test_solution_satisfies_all_equations(r, w):
    s = toy_solve(r, w)
    assert sum(s.populations) == pytest.approx(1.0, rel=1e-14)
    assert min(s.populations) > 0
    scale = np.abs(toy_matrix(r, w)).max(axis=1) * np.abs(
        [s.N_1S, s.N_2S, s.N_2P, s.N_3P, s.a_2P, s.c_2S2P]).max()
    assert np.all(np.abs(toy_residual(r, s)) <= 1e-12 * scale)


@given(rates_st)
def test_sign_of_imbalance_follows_two_term_factor(r):
    s = toy_solve(r, 0.0)
    f = two_term_factor(r)
    if abs(f) > 1e-9 * r.R12 * r.R23 * r.R31:
        assert math.copysign(1, s.imbalance) == math.copysign(1, f)


@given(rates_st)
def test_strong_field_asymptote(r):
    s = toy_solve(r, 1e6 * r.max_rate)
    if abs(s.imbalance) > 1e-6 * s.N_2P:
        assert s.normalized_alignment == pytest.approx(1 / math.sqrt(6), abs=1e-6)


def test_zero_field_is_unpolarized():
    s = toy_solve(ToyRates.from_illumination(Illumination()), 0.0)
    assert s.a_2P == 0.0 and s.c_2S2P == 0.0


@pytest.mark.parametrize("w", [1e3, 1e8, 1e13])
def test_two_term_limit(w):
    r = ToyRates.from_illumination(Illumination()).without_3P()
    assert two_term_factor(r) == 0.0
    s = toy_solve(r, w)
    assert abs(s.a_2P) <= 1e-12 and abs(s.c_2S2P) <= 1e-12
    assert s.N_3P == 0.0


def test_validation():
    with pytest.raises(ValueError):
        ToyRates(-1, 1, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        toy_solve(ToyRates(1, 1, 0, 1, 1, 1), 1.0)
    with pytest.raises(np.linalg.LinAlgError):
        toy_solve(ToyRates(0, 0, 1, 0, 1, 1), 1.0)


@pytest.mark.parametrize("E", [1e1, 1e3, 1e5, 1e7])
def test_toy_matches_full_solver_on_restricted_scheme(toy_scheme, E):
    ill = Illumination()
    rho = solve(toy_scheme, ill, FieldConfig.polar(E))
    ob = observables(rho)
    f = FieldConfig.polar(E)
    s = toy_solve(ToyRates.from_illumination(ill), f.omega_E)
    assert ob.a_2P == pytest.approx(s.a_2P, rel=1e-10)
    assert ob.c_2S2P == pytest.approx(s.c_2S2P, rel=1e-10)
    for key, N in zip([(1, 0), (2, 0), (2, 1), (3, 1)], s.populations):
        assert ob.term_populations[key] == pytest.approx(N, rel=1e-10)
    # the P -> S emission formula agrees with the Stokes calculation
    blp = stokes_emissivity(rho, "Ly_alpha", ViewingGeometry.from_angles(math.pi / 2)).blp
    assert toy_lyman_alpha_blp(s) == pytest.approx(blp, rel=1e-9, abs=1e-14)


def test_lyman_beta_only_strong_field_gives_minus_one():
    r = ToyRates.from_illumination(Illumination.only_lines(["Ly_beta"]))
    s = toy_solve(r, 1e6 * r.max_rate)
    assert toy_lyman_alpha_blp(s) == pytest.approx(-1.0, abs=1e-6)
