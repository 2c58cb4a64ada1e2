import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from hydrogen_alignment.angular_momentum import rotation_matrix
from hydrogen_alignment.density_matrix import DensityMatrix, observables, polarization_ratio, term_tensors, to_tensors
from hydrogen_alignment.radiation_field import Illumination, rates
from hydrogen_alignment.se_solver import (
    COMPONENTS,
    FieldConfig,
    SESystem,
    SingularSystemError,
    assemble,
    solve,
    stationary_solve,
)

from conftest import random_rotation

field_mag = st.one_of(st.just(0.0), st.floats(1e-1, 1e7))
b_mag = st.one_of(st.just(0.0), st.floats(1e-5, 1.0))
angle = st.floats(0, math.pi)


def shell_rotation(scheme, n, euler):
    st_ = scheme.shell_states(n)
    U = np.zeros((len(st_), len(st_)), complex)
    i = 0
    while i < len(st_):
        d = st_[i].J2 + 1
        U[i:i + d, i:i + d] = rotation_matrix(st_[i].J2 / 2, *euler)
        i += d
    return U


# -- generator structure ------------------------------------------------------------


def test_dimension_and_components(system4):
    op = system4.operator(FieldConfig.polar(1e3, 0.3, 0.1, 1e-3))
    assert op.dimension == 1416
    assert set(op.components) == set(COMPONENTS)
    assert op.matrix.shape == (1416, 1416)


@given(field_mag, angle, angle, b_mag)
@settings(max_examples=15)
def test_generator_preserves_trace_and_hermiticity(system3, E, th, ph, B):
    op = system3.operator(FieldConfig.polar(E, th, ph, B))
    M = op.matrix
    t = np.zeros(op.dimension)
    t[op.population_indices()] = 1.0
    assert np.abs(t @ M).max() <= 1e-12 * np.abs(M).max()
    rng = np.random.default_rng(0)
    blocks = {}
    for n in system3.shells:
        d = system3.sizes[n]
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        blocks[n] = a + a.conj().T
    rho = DensityMatrix(system3.scheme, blocks)
    out = DensityMatrix.from_vector(system3.scheme, M @ rho.to_vector())
    assert out.hermiticity_error() <= 1e-12 * np.abs(M).max()


def test_dimension_cap(scheme4):
    with pytest.raises(ValueError):
        SESystem(scheme4, rates(Illumination(), scheme4.transitions()), max_dimension=1000)


def test_field_config_units():
    f = FieldConfig.from_lab_units((0, 0, 1.0), (0, 0, 1000.0))
    assert f.E[2] == 100.0 and f.B[2] == pytest.approx(0.1)
    assert f.omega_E == pytest.approx(100 * 5.29177e-11 * 1.602177e-19 / 1.0545718e-34, rel=1e-5)
    with pytest.raises(ValueError):
        FieldConfig((1, 2), (0, 0, 0))
    with pytest.raises(ValueError):
        FieldConfig((math.nan, 0, 0), (0, 0, 0))


# -- stationary solutions -------------------------------------------------------------


@given(field_mag, angle, angle, b_mag)
@settings(max_examples=20)
def test_stationary_solution_is_a_density_matrix(system3, E, th, ph, B):
    rho = system3.solve(FieldConfig.polar(E, th, ph, B))
    assert rho.trace() == pytest.approx(1.0, abs=1e-12)
    assert rho.hermiticity_error() == 0.0
    assert rho.residual <= 1e-10
    for n, b in rho.blocks.items():
        ev = np.linalg.eigvalsh(b)
        assert ev.min() >= -1e-12 * max(ev.max(), 1e-300)


@given(field_mag, b_mag, st.integers(0, 2**31))
@settings(max_examples=8)
def test_rotational_covariance(system3, E, B, seed):
    rng = np.random.default_rng(seed)
    euler, R = random_rotation(rng)
    Ev = E * rng.normal(size=3) / math.sqrt(3)
    Bv = B * rng.normal(size=3) / math.sqrt(3)
    r1 = system3.solve(FieldConfig(tuple(Ev), tuple(Bv)))
    r2 = system3.solve(FieldConfig(tuple(R @ Ev), tuple(R @ Bv)))
    for n in system3.shells:
        U = shell_rotation(system3.scheme, n, euler)
        err = np.abs(U @ r1.blocks[n] @ U.conj().T - r2.blocks[n]).max()
        assert err <= 1e-9 * np.abs(r1.blocks[n]).max()


def test_zero_field_matches_term_rate_equations(scheme3):
    """Without fields, term populations solve the scalar rate equations built from the rate set."""
    ill = Illumination()
    rs = rates(ill, scheme3.transitions())
    terms = list(scheme3.terms)
    k = {t: i for i, t in enumerate(terms)}
    W = np.zeros((len(terms), len(terms)))
    for (up, lo), tr in rs.terms.items():
        W[k[up], k[lo]] += tr.R_abs
        W[k[lo], k[lo]] -= tr.R_abs
        W[k[lo], k[up]] += tr.R_down
        W[k[up], k[up]] -= tr.R_down
    N = sla.null_space(W)[:, 0]
    N /= N.sum()
    ob = observables(solve(scheme3, ill, FieldConfig()))
    for t in terms:
        assert ob.term_populations[t] == pytest.approx(N[k[t]], rel=1e-9)


def test_dark_atom_sits_in_ground_level(scheme3):
    rho = solve(scheme3, Illumination.dark(), FieldConfig())
    assert np.allclose(np.diag(rho.blocks[1]).real, 0.5, atol=1e-14)
    assert all(np.abs(rho.blocks[n]).max() <= 1e-14 for n in (2, 3))


def test_degenerate_system_modes(toy_scheme):
    """Without fine structure Ly-beta-only pumping conserves spin; pinning resolves it."""
    op = assemble(toy_scheme, rates(Illumination.only_lines(["Ly_beta"]), toy_scheme.transitions()),
                  FieldConfig.polar(1e4))
    with pytest.raises(SingularSystemError):
        stationary_solve(op, on_singular="raise")
    rho = stationary_solve(op)
    assert rho.trace() == pytest.approx(1.0)
    # the spin stays unpolarized: equal ground sublevels, no ground coherence
    g = rho.blocks[1]
    assert abs(g[0, 0] - g[1, 1]) <= 1e-12 and abs(g[0, 1]) <= 1e-12
    with pytest.raises(ValueError):
        stationary_solve(op, on_singular="bogus")


@pytest.mark.parametrize("T", [5000.0, 20000.0, 50000.0])
def test_thermodynamic_equilibrium_is_unpolarized(scheme3, T):
    rho = solve(scheme3, Illumination.planck_te(T), FieldConfig.polar(1e6, 0.4, 1.0, 0.5))
    assert polarization_ratio(rho) <= 1e-10


@pytest.mark.parametrize("B", [1e-3, 0.1, 1.0])
def test_magnetic_field_alone_does_not_polarize(system3, B):
    rho = system3.solve(FieldConfig.polar(0.0, 0.0, 0.0, B))
    assert polarization_ratio(rho) <= 1e-10


def test_alignment_to_orientation_conversion(system3):
    """E along x aligns the atom; B along z then converts part of the alignment into orientation."""
    with_b = to_tensors(system3.solve(FieldConfig((1e5, 0, 0), (0, 0, 0.1))))
    without = to_tensors(system3.solve(FieldConfig((1e5, 0, 0), (0, 0, 0))))
    assert abs(term_tensors(with_b, 2, 1, 1, 1, 0)) > 1e-9
    assert abs(term_tensors(without, 2, 1, 1, 1, 0)) <= 1e-18
    assert abs(term_tensors(without, 2, 1, 1, 2, 0)) > 1e-6


def test_electric_field_along_z_aligns_2p(system3):
    ob = observables(system3.solve(FieldConfig.polar(1e7)))
    assert ob.a_2P != 0.0
    assert ob.normalized_alignment == pytest.approx(1 / math.sqrt(6), rel=1e-3)


def test_deterministic(system3):
    f = FieldConfig.polar(3e3, 0.2, 0.3, 1e-3)
    a, b = system3.solve(f), system3.solve(f)
    assert all(np.array_equal(a.blocks[n], b.blocks[n]) for n in system3.shells)


def test_operator_dump(scheme2):
    op = assemble(scheme2, rates(Illumination(), scheme2.transitions()), FieldConfig.polar(1e2))
    text = op.dump()
    assert text.startswith("# evolution operator, dimension 68")
    assert "shell stark 68 68" in text


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_quantization_along_B_matches_lab_frame(system3, seed):
    rng = np.random.default_rng(seed)
    f = FieldConfig(tuple(3e4 * rng.normal(size=3)), tuple(0.05 * rng.normal(size=3)))
    a = system3.solve(f)
    b = system3.solve(f, quantize_along_B=False)
    for n in system3.shells:
        assert np.abs(a.blocks[n] - b.blocks[n]).max() <= 1e-9 * np.abs(a.blocks[n]).max()


def test_oblique_B_in_cold_radiation(scheme4):
    """Cold Planck radiation with B off the z axis: the lab-frame system is nearly singular."""
    system = SESystem(scheme4, rates(Illumination.planck_te(5000.0), scheme4.transitions()))
    f = FieldConfig((2e5, -1e5, 3e4), (0.3, 0.1, -0.5))
    rho = system.solve(f)
    assert rho.rcond > 1e-10
    assert polarization_ratio(rho) <= 1e-10
