import csv
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ductbem.analytic import duct_1d_solution
from ductbem.assembly import (BoundarySystem, UnknownRole, WaveContext, assemble_surface, assemble_thin,
                              impedance_to_scaled_admittance)
from ductbem.mesh import BoundaryCondition, DuctSpec, ElementKind, Region, build_duct
from ductbem.solve import (EvaluationGrid, ImpedanceWarning, SolveError, evaluate_potential, evaluate_velocity,
                           mean_impedance, point_panel_distance, solve, solve_dense, write_grid_csv)

SPEC = DuctSpec(length=0.6, h1=(0.025,), h2=0.025, h0=0.1, hL=0.1, width=0.1)
CTX = WaveContext(200.0)


def bcs(ctx):
    return {Region.SOURCE: BoundaryCondition.velocity(0.0, 1.0),
            Region.END: BoundaryCondition.admittance(0.0, impedance_to_scaled_admittance(ctx.rho_c, ctx))}


@pytest.fixture(scope="module")
def thin():
    mesh = build_duct(SPEC, ElementKind.THIN).with_bcs(bcs(CTX))
    return mesh, solve(assemble_thin(mesh, CTX))


@pytest.fixture(scope="module")
def surface():
    mesh = build_duct(SPEC, ElementKind.SURFACE).with_bcs(bcs(CTX))
    return mesh, solve(assemble_surface(mesh, CTX))


def interior_points():
    x = np.linspace(0.1, 0.5, 5)
    return np.column_stack([x, np.full(5, 0.01), np.full(5, -0.02)])


def test_solve_dense_random_system():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40)) + 10 * np.eye(40)
    b = rng.normal(size=40) + 0j
    x, cond, _, _ = solve_dense(A, b)
    assert np.allclose(A @ x, b, atol=1e-12)
    assert cond == pytest.approx(np.linalg.cond(A, 1), rel=0.5)


def test_singular_system_raises():
    mesh = build_duct(SPEC, ElementKind.SURFACE)
    A = np.zeros((mesh.n, mesh.n), dtype=complex)
    system = BoundarySystem(A, np.ones(mesh.n, dtype=complex), [(i, UnknownRole.PHI) for i in range(mesh.n)],
                            mesh, CTX, tau=-1)
    with pytest.raises(SolveError):
        solve(system)


@pytest.mark.parametrize("which", ["thin", "surface"])
def test_interior_potential_matches_plane_wave(which, thin, surface):
    mesh, sol = thin if which == "thin" else surface
    pts = interior_points()
    phi = evaluate_potential(mesh, sol, CTX, pts)
    ref = duct_1d_solution(CTX, SPEC.length, -1.0, CTX.rho_c)
    assert np.max(np.abs(phi - ref.phi(pts[:, 0]))) < 0.1 * abs(ref.phi(0.0))


def test_thin_field_outside_is_small(thin):
    mesh, sol = thin
    pts = np.array([[0.3, 0.3, 0.0], [-0.3, 0.0, 0.0], [0.9, 0.1, 0.1]])
    inside = np.abs(evaluate_potential(mesh, sol, CTX, interior_points())).min()
    assert np.abs(evaluate_potential(mesh, sol, CTX, pts)).max() < 0.02 * inside


@pytest.mark.parametrize("which", ["thin", "surface"])
def test_velocity_matches_finite_difference(which, thin, surface):
    mesh, sol = thin if which == "thin" else surface
    rng = np.random.default_rng(7)
    pts = interior_points()
    d = rng.normal(size=(len(pts), 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    h = 1e-4
    fd = (evaluate_potential(mesh, sol, CTX, pts + h * d) - evaluate_potential(mesh, sol, CTX, pts - h * d)) / (2 * h)
    v = evaluate_velocity(mesh, sol, CTX, pts, d)
    assert np.allclose(v, fd, rtol=1e-5, atol=1e-7 * np.abs(v).max())


def test_points_on_boundary_rejected(thin):
    mesh, sol = thin
    with pytest.raises(ValueError):
        evaluate_potential(mesh, sol, CTX, mesh.centroids[:1])
    with pytest.raises(ValueError):
        evaluate_potential(mesh, sol, WaveContext(300.0), interior_points())


@settings(max_examples=30, deadline=None)
@given(p=arrays(float, (4, 3), elements=st.floats(-0.5, 1.0)))
def test_point_panel_distance_matches_sampling(p):
    mesh = build_duct(DuctSpec(length=0.4, h1=(0.1,), h2=0.1, width=0.2), ElementKind.THIN)
    d = point_panel_distance(p, mesh)
    # dense sampling of every panel gives an upper bound that is tight to the sample spacing
    s = np.linspace(0, 1, 41)
    U, V = np.meshgrid(s, s, indexing="ij")
    u, v = U.ravel()[:, None], V.ravel()[:, None]
    best = np.full(len(p), np.inf)
    for P in mesh.verts:
        y = (1 - u) * (1 - v) * P[0] + u * (1 - v) * P[1] + u * v * P[2] + (1 - u) * v * P[3]
        best = np.minimum(best, np.linalg.norm(p[:, None, :] - y[None], axis=2).min(axis=1))
    assert np.all(d <= best + 1e-12)
    assert np.all(best - d <= 0.1 * np.sqrt(2) / 40 + 1e-12)


def test_mean_impedance():
    p = np.array([2.0, 4.0 + 2j])
    v = np.array([1.0, 2.0])
    assert mean_impedance(p, v) == pytest.approx(2.0 + 0.5j)
    assert mean_impedance(p, v, rho_c=2.0) == pytest.approx(1.0 + 0.25j)
    with pytest.warns(ImpedanceWarning):
        z = mean_impedance([1.0, 3.0], [1.0, 0.0])
    assert z == 1.0
    with pytest.raises(ValueError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mean_impedance([1.0], [0.0])


def test_grid_csv(tmp_path, thin):
    mesh, sol = thin
    grid = EvaluationGrid(interior_points()).evaluate(mesh, sol, CTX, direction=[1, 0, 0])
    path = tmp_path / "grid.csv"
    write_grid_csv(grid, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "y", "z", "re_phi", "im_phi", "re_p", "im_p", "re_v", "im_v"]
    back = np.array(rows[1:], dtype=float)
    assert np.array_equal(back[:, 3] + 1j * back[:, 4], grid.phi)
    assert np.array_equal(back[:, 5] + 1j * back[:, 6], grid.p)
    assert np.array_equal(back[:, 7] + 1j * back[:, 8], grid.v)
