import math

import numpy as np
import pytest

from ductbem.analytic import duct_1d_solution
from ductbem.assembly import (UnknownRole, WaveContext, assemble_surface, assemble_thin,
                              impedance_to_scaled_admittance, recover_phi_bar, write_system)
from ductbem.mesh import BoundaryCondition, DuctSpec, ElementKind, Region, build_duct
from ductbem.solve import solve

SPEC = DuctSpec(length=0.6, h1=(0.025,), h2=0.025, h0=0.025, hL=0.025, width=0.1)


def closed_duct(kind, ctx, spec=SPEC):
    alpha = impedance_to_scaled_admittance(ctx.rho_c, ctx)
    return build_duct(spec, kind).with_bcs({
        Region.SOURCE: BoundaryCondition.velocity(0.0, 1.0),
        Region.END: BoundaryCondition.admittance(0.0, alpha),
    })


@pytest.fixture(scope="module")
def ctx():
    return WaveContext(200.0)


@pytest.fixture(scope="module")
def thin(ctx):
    mesh = closed_duct(ElementKind.THIN, ctx)
    system = assemble_thin(mesh, ctx)
    return mesh, system, solve(system)


@pytest.fixture(scope="module")
def surface(ctx):
    mesh = closed_duct(ElementKind.SURFACE, ctx)
    system = assemble_surface(mesh, ctx)
    return mesh, system, solve(system)


def test_wave_context_conventions():
    ctx = WaveContext(800.0)
    assert ctx.k == pytest.approx(2 * math.pi * 800 / 340)
    assert ctx.green_k == -ctx.k
    assert ctx.pressure(1.0) == pytest.approx(-1j * ctx.omega * 1.3)
    with pytest.raises(ValueError):
        WaveContext(0.0)


def test_admittance_conversion(ctx):
    # matched impedance: alpha = -i k
    assert impedance_to_scaled_admittance(ctx.rho_c, ctx) == pytest.approx(-1j * ctx.k)
    assert impedance_to_scaled_admittance(math.inf, ctx) == 0
    with pytest.raises(ZeroDivisionError):
        impedance_to_scaled_admittance(0.0, ctx)


def test_thin_layout(thin):
    mesh, system, _ = thin
    n_adm = len(mesh.indices(Region.END))
    assert system.size == mesh.n + n_adm
    e, c = system.columns(UnknownRole.PHIBAR)
    assert sorted(e) == sorted(mesh.indices(Region.END))
    assert np.all(c >= mesh.n)


def thin_wall_error(mesh, sol, ctx):
    ref = duct_1d_solution(ctx, mesh.spec.length, -1.0, ctx.rho_c)
    wall = mesh.indices(Region.WALL)
    recover_phi_bar(mesh, ctx, sol)
    phi = sol.phi_minus[wall]
    return np.abs(phi - ref.phi(mesh.centroids[wall, 0])) / np.abs(ref.phi(0.0))


def test_thin_interior_matches_plane_wave(thin, ctx):
    mesh, _, sol = thin
    # thin elements with closures as fine as the walls carry an O(h/w) error
    assert thin_wall_error(mesh, sol, ctx).max() < 0.15
    # the field outside a closed duct stays small
    wall = mesh.indices(Region.WALL)
    assert np.abs(sol.phi_plus[wall]).max() < 0.01 * np.abs(sol.phi_minus[wall]).max()


def test_thin_error_drops_under_refinement(thin, ctx):
    mesh, _, sol = thin
    coarse = thin_wall_error(mesh, sol, ctx).max()
    fine_spec = DuctSpec(length=0.6, h1=(0.0125,), h2=0.0125, h0=0.0125, hL=0.0125, width=0.1)
    fine = closed_duct(ElementKind.THIN, ctx, fine_spec)
    assert thin_wall_error(fine, solve(assemble_thin(fine, ctx)), ctx).max() < 0.6 * coarse


def test_surface_interior_matches_plane_wave(surface, ctx):
    mesh, system, sol = surface
    assert system.size == mesh.n
    ref = duct_1d_solution(ctx, SPEC.length, -1.0, ctx.rho_c)
    wall = mesh.indices(Region.WALL)
    err = np.abs(sol.phi[wall] - ref.phi(mesh.centroids[wall, 0])) / np.abs(ref.phi(0.0))
    assert err.max() < 0.05


def test_thin_and_surface_agree(thin, surface, ctx):
    tm, _, ts = thin
    sm, _, ss = surface
    recover_phi_bar(tm, ctx, ts)
    wall = tm.indices(Region.WALL)
    assert np.allclose(tm.centroids[wall], sm.centroids[wall])
    diff = np.abs(ts.phi_minus[wall] - ss.phi[wall]) / np.abs(ss.phi[wall])
    assert diff.max() < 0.15


def test_recovery_reproduces_solved_phibar(thin, ctx):
    mesh, _, sol = thin
    end = mesh.indices(Region.END)
    solved = sol.phibar[end].copy()
    recovered = recover_phi_bar(mesh, ctx, sol, end)
    assert np.allclose(recovered, solved, rtol=1e-8, atol=1e-12)


def test_surface_plane_wave_reproduction(ctx):
    # interior Neumann data of an exact plane wave; the solve must return its trace
    mesh = build_duct(SPEC, ElementKind.SURFACE)
    k = ctx.k
    phi_exact = lambda x: np.exp(-1j * k * x[:, 0])
    grad = lambda x: np.stack([-1j * k * phi_exact(x), 0 * x[:, 0], 0 * x[:, 0]], axis=1)
    vn = np.einsum("ij,ij->i", grad(mesh.centroids), mesh.normals)
    mesh = mesh.with_bcs([BoundaryCondition.velocity(0.0, v) for v in vn])
    sol = solve(assemble_surface(mesh, ctx))
    err = np.abs(sol.phi - phi_exact(mesh.centroids))
    assert err.max() < 0.05


def test_write_system(tmp_path, thin):
    _, system, _ = thin
    matrix, sidecar = write_system(system, tmp_path / "sys")
    data = np.fromfile(matrix, dtype=np.complex128)
    n = system.size
    assert np.array_equal(data[: n * n].reshape(n, n), system.A)
    assert np.array_equal(data[n * n:], system.b)
    lines = sidecar.read_text().splitlines()
    assert len(lines) == n + 2
