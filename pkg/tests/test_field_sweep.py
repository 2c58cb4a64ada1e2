import math

import numpy as np
import pytest

from hydrogen_alignment.density_matrix import DensityMatrix
from hydrogen_alignment.emission import ViewingGeometry
from hydrogen_alignment.field_sweep import (
    FieldDistribution,
    FigureConfig,
    azimuth_average,
    default_grid,
    max_workers,
    reflection_phases,
    reproduce_figure,
    sweep,
)
from hydrogen_alignment.radiation_field import Illumination
from hydrogen_alignment.se_solver import FieldConfig

ILL = Illumination()
B1000 = (0.0, 0.0, 0.1)
VIEWS = {
    "x": ViewingGeometry((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "y": ViewingGeometry((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    "z": ViewingGeometry((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
    "perp": ViewingGeometry.from_angles(math.pi / 2, 0.0),
    "par": ViewingGeometry.from_angles(0.0, 0.0),
}


def stokes_array(res, line="Ly_alpha", views=("perp", "par")):
    return np.array([[getattr(r.stokes[(line, v)], k) for v in views for k in "IQUV"] for r in res.rows])


# -- distributions ------------------------------------------------------------------


@pytest.mark.parametrize(
    "dist",
    [
        FieldDistribution.deterministic(0.3, 0.2),
        FieldDistribution.random_azimuth(math.radians(60), 7),
        FieldDistribution.isotropic(16, 8, quadrature="gauss"),
        FieldDistribution.isotropic(5, 3, quadrature="gauss"),
        FieldDistribution.isotropic(),
    ],
)
@pytest.mark.parametrize("sym", [False, True])
def test_weights_sum_to_one(dist, sym):
    w = [n[2] for n in dist.nodes(azimuth_symmetric=sym)]
    assert abs(math.fsum(w) - 1.0) <= 1e-14
    assert all(x > 0 for x in w)


def test_distribution_validation_and_labels():
    with pytest.raises(ValueError):
        FieldDistribution("gaussian")
    with pytest.raises(ValueError):
        FieldDistribution.isotropic(quadrature="simpson")
    with pytest.raises(ValueError):
        FieldDistribution.random_azimuth(4.0)
    with pytest.raises(ValueError):
        FieldDistribution.isotropic(tol=0.0)
    assert FieldDistribution.random_azimuth(math.radians(30)).label == "random_azimuth(theta=30)"
    assert FieldDistribution.isotropic().adaptive and not FieldDistribution.isotropic(quadrature="gauss").adaptive


def test_default_grid():
    g = default_grid()
    assert len(g) == 40 and g[0] == pytest.approx(1.0) and g[-1] == pytest.approx(1e7)
    assert np.all(np.diff(g) > 0)


def test_max_workers_env_cap(monkeypatch):
    monkeypatch.setenv("HALIGN_MAX_WORKERS", "2")
    assert max_workers(8) == 2
    monkeypatch.delenv("HALIGN_MAX_WORKERS")
    assert max_workers(3) == 3


def test_sweep_validation(scheme2):
    with pytest.raises(ValueError):
        sweep(scheme2, ILL, (0, 0, 0), FieldDistribution(), [2.0, 1.0])
    with pytest.raises(ValueError):
        sweep(scheme2, ILL, (0.1, 0, 0), FieldDistribution(), [1.0])
    with pytest.raises(ValueError):
        sweep(scheme2, ILL, (0, 0, 0), FieldDistribution(), [])


# -- symmetry reductions ---------------------------------------------------------------


def test_random_azimuth_at_zero_inclination_equals_deterministic(scheme3):
    grid = [1e2, 1e4, 1e6]
    a = sweep(scheme3, ILL, B1000, FieldDistribution.random_azimuth(0.0), grid, geometries=VIEWS)
    b = sweep(scheme3, ILL, B1000, FieldDistribution.deterministic(0.0, 0.0), grid, geometries=VIEWS)
    # azimuth averaging only removes round-off M coherences of a polar field
    for ra, rb in zip(a.rows, b.rows):
        for key, s in ra.stokes.items():
            t = rb.stokes[key]
            assert all(abs(getattr(s, k) - getattr(t, k)) <= 1e-14 * s.I for k in "IQUV")
        assert ra.a_2P == pytest.approx(rb.a_2P, rel=1e-13)


@pytest.mark.parametrize("theta_deg", [30, 60, 90])
def test_azimuth_symmetry_matches_brute_force(scheme3, theta_deg):
    grid = [3e2, 3e4]
    d = FieldDistribution.random_azimuth(math.radians(theta_deg), 12)
    fast = stokes_array(sweep(scheme3, ILL, B1000, d, grid, use_symmetry=True))
    slow = stokes_array(sweep(scheme3, ILL, B1000, d, grid, use_symmetry=False))
    scale = np.abs(fast[:, [0]])
    assert np.abs(fast - slow).max() <= 1e-10 * scale.max()


def test_azimuth_average_keeps_only_diagonal_in_M(scheme2):
    rng = np.random.default_rng(0)
    blocks = {n: rng.normal(size=(len(scheme2.shell_states(n)),) * 2) + 0j for n in scheme2.shells}
    avg = azimuth_average(DensityMatrix(scheme2, blocks))
    for n in scheme2.shells:
        M2 = np.array([s.M2 for s in scheme2.shell_states(n)])
        assert np.all(avg.blocks[n][M2[:, None] != M2[None, :]] == 0)


def test_reflection_symmetry_of_solutions(system3):
    """rho at polar angle pi - theta equals P rho P at theta (E reflected through the xy plane, B along z)."""
    phase = reflection_phases(system3.scheme)
    for th in (0.3, 1.1):
        a = system3.solve(FieldConfig.polar(2e4, th, 0.0, 0.1))
        b = system3.solve(FieldConfig.polar(2e4, math.pi - th, 0.0, 0.1))
        for n in system3.shells:
            assert np.abs(phase[n] * a.blocks[n] - b.blocks[n]).max() <= 1e-12 * np.abs(a.blocks[n]).max()


# -- isotropic averages ------------------------------------------------------------------


@pytest.mark.parametrize("quadrature", ["gauss", "adaptive"])
def test_isotropic_without_magnetic_field_is_unpolarized(scheme3, quadrature):
    d = FieldDistribution.isotropic(8, 4, quadrature=quadrature)
    res = sweep(scheme3, ILL, (0, 0, 0), d, [1e2, 1e5], lines=("Ly_alpha", "H_alpha"), geometries=VIEWS)
    for row in res.rows:
        for s in row.stokes.values():
            assert abs(s.blp) <= 1e-8 and abs(s.bcp) <= 1e-8 and abs(s.U) <= 1e-8 * s.I


def test_view_averaged_intensity_independent_of_distribution(scheme3):
    """Mean of I over three orthogonal views (the solid-angle average for dipole lines)."""
    grid = [1e3, 1e5]
    dists = [
        FieldDistribution.deterministic(0.0),
        FieldDistribution.deterministic(0.7, 1.9),
        FieldDistribution.random_azimuth(math.radians(60)),
        FieldDistribution.isotropic(8, 4, quadrature="gauss"),
        FieldDistribution.isotropic(),
    ]
    means = []
    for d in dists:
        res = sweep(scheme3, ILL, (0, 0, 0), d, grid, lines=("Ly_alpha", "H_alpha"), geometries=VIEWS)
        means.append([[np.mean([r.stokes[(ln, v)].I for v in "xyz"]) for ln in ("Ly_alpha", "H_alpha")]
                      for r in res.rows])
    means = np.array(means)
    assert np.abs(means - means[0]).max() <= 1e-8 * np.abs(means).max()


def test_isotropic_with_magnetic_field_polarizes_at_intermediate_strength(scheme3):
    res = sweep(scheme3, ILL, B1000, FieldDistribution.isotropic(), [1e5])
    assert abs(res.rows[0].stokes[("Ly_alpha", "perp")].blp) > 1e-7
    assert res.rows[0].max_residual <= 1e-10


def test_adaptive_quadrature_converges(scheme3):
    """Tightening the tolerance and doubling the starting panels changes averaged Stokes by < 1e-6 of I."""
    grid = default_grid(40)[[8, 16, 22, 26, 30, 34]]
    coarse = stokes_array(sweep(scheme3, ILL, B1000, FieldDistribution.isotropic(tol=1e-6, panels=2), grid))
    fine = stokes_array(sweep(scheme3, ILL, B1000, FieldDistribution.isotropic(tol=1e-8, panels=4), grid))
    I = np.abs(coarse[:, [0, 0, 0, 0, 4, 4, 4, 4]])
    assert np.max(np.abs(coarse - fine) / I) < 1e-6


# -- determinism and parallel execution --------------------------------------------------------


def test_worker_count_does_not_change_results(scheme2):
    grid = [1e2, 1e3, 1e4, 1e5]
    d = FieldDistribution.random_azimuth(math.radians(45), 4)
    a = sweep(scheme2, ILL, B1000, d, grid, workers=1, use_symmetry=False)
    b = sweep(scheme2, ILL, B1000, d, grid, workers=2, use_symmetry=False)
    assert [r.stokes for r in a.rows] == [r.stokes for r in b.rows]
    c = sweep(scheme2, ILL, B1000, FieldDistribution.isotropic(), grid[:2], workers=2)
    e = sweep(scheme2, ILL, B1000, FieldDistribution.isotropic(), grid[:2], workers=1)
    assert [r.stokes for r in c.rows] == [r.stokes for r in e.rows]


def test_failed_points_are_flagged(scheme2):
    res = sweep(scheme2, ILL, (0, 0, 0), FieldDistribution(), [1e2], solver_kw={"residual_tol": -1.0})
    row = res.rows[0]
    assert not row.ok and "residual" in row.message and math.isnan(row.a_2P)
    E, y = res.curve(row.label, "blp", ("Ly_alpha", "perp"))
    assert math.isnan(y[0])


# -- figures ------------------------------------------------------------------------------------


def test_fig2_layout_and_limits():
    cfg = FigureConfig(n_max=3, E_grid=default_grid(12))
    res = reproduce_figure("fig2", cfg)
    assert res.labels() == ["full", "toy"]
    for label in ("full", "toy"):
        E, y = res.curve(label)
        assert len(E) == 12 and np.all(np.diff(E) > 0)
        assert abs(y[0]) < 1e-5
        assert y[-1] == pytest.approx(1 / math.sqrt(6), abs=1e-3)


def test_fig4_without_magnetic_field_vanishes():
    cfg = FigureConfig(n_max=2, E_grid=default_grid(4), B_gauss=0.0, inclinations_deg=(0.0, 60.0))
    res = reproduce_figure("fig4", cfg)
    assert res.labels() == ["theta_E=0", "theta_E=60", "isotropic"]
    for label in res.labels():
        _, v = res.curve(label, "bcp", ("Ly_alpha", "par"))
        assert np.all(np.abs(v) <= 1e-10)


def test_unknown_figure():
    with pytest.raises(ValueError):
        reproduce_figure("fig9")
