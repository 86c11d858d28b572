import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ductbem.mesh import (BCKind, BoundaryCondition, Closure, DuctSpec, ElementKind, Region, build_duct,
                          read_mesh, validate_mesh, wall_line, write_mesh)


def square_spec(**kw):
    base = dict(length=3.4, h1=(0.04,), h2=0.04, h0=0.04, hL=0.04, width=0.2)
    base.update(kw)
    return DuctSpec(**base)


def test_square_duct_counts():
    mesh = build_duct(square_spec())
    counts = {r: len(mesh.indices(r)) for r in Region}
    assert counts[Region.WALL] == 85 * 20
    assert counts[Region.SOURCE] == counts[Region.END] == 25
    assert np.allclose(mesh.areas, 0.0016)


def test_single_element_closures():
    mesh = build_duct(square_spec(h0=0.2, hL=0.2))
    assert len(mesh.indices(Region.SOURCE)) == len(mesh.indices(Region.END)) == 1


def test_fine_closures():
    mesh = build_duct(square_spec(h0=0.008, hL=0.008))
    assert len(mesh.indices(Region.SOURCE)) == len(mesh.indices(Region.END)) == 625


def test_zoned_widths():
    mesh = build_duct(square_spec(h1=(0.04, 0.02, 0.04)))
    wall = mesh.indices(Region.WALL)
    widths = np.ptp(mesh.verts[wall][:, :, 0], axis=1)
    zones = mesh.zones[wall]
    assert np.all(np.abs(widths[zones == 1] - 0.02) < 1e-3)
    assert np.all(np.abs(widths[zones == 0] - 0.04) < 3e-3)
    # zones are contiguous thirds
    x = mesh.centroids[wall, 0]
    assert x[zones == 1].min() > 3.4 / 3 and x[zones == 1].max() < 2 * 3.4 / 3


def test_circular_duct_counts():
    r = 0.2 / math.sqrt(math.pi)
    spec = DuctSpec(length=3.4, h1=(0.04,), h2=2 * math.pi * r / 20, h0=0.035, hL=0.035,
                    cross_section="circle", radius=r, disc_rings=(8, 14, 20))
    mesh = build_duct(spec, ElementKind.SURFACE)
    assert len(mesh.indices(Region.WALL)) == 1700
    assert len(mesh.indices(Region.SOURCE)) == 64
    assert np.all(mesh.nverts[mesh.indices(Region.SOURCE)] == 3)
    assert validate_mesh(mesh).ok
    # closure triangles tile the inscribed polygon
    area = 0.5 * 20 * r * r * math.sin(2 * math.pi / 20)
    assert mesh.areas[mesh.indices(Region.END)].sum() == pytest.approx(area, rel=1e-12)


def test_open_ends_have_no_closure():
    mesh = build_duct(square_spec(closure_end=Closure.OPEN))
    assert len(mesh.indices(Region.END)) == 0
    assert len(mesh.indices(Region.SOURCE)) == 25


@settings(max_examples=25, deadline=None)
@given(length=st.floats(0.2, 2.0), h1=st.floats(0.05, 0.3), h2=st.sampled_from([0.05, 0.1, 0.2]),
       kind=st.sampled_from(list(ElementKind)))
def test_square_mesh_invariants(length, h1, h2, kind):
    mesh = build_duct(square_spec(length=length, h1=(h1,), h2=h2, h0=h2, hL=h2), kind)
    report = validate_mesh(mesh)
    assert report.ok, report.violations
    # the closed surface has total area 4 w L + 2 w^2 and zero vector area
    assert mesh.areas.sum() == pytest.approx(4 * 0.2 * length + 2 * 0.04, rel=1e-12)
    assert np.allclose((mesh.areas[:, None] * mesh.normals).sum(axis=0), 0.0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(n_c=st.integers(8, 24), n_ax=st.integers(3, 12))
def test_circular_mesh_invariants(n_c, n_ax):
    r = 0.05
    spec = DuctSpec(length=0.5, h1=(0.5 / n_ax,), h2=2 * math.pi * r / n_c, cross_section="circle", radius=r)
    mesh = build_duct(spec, ElementKind.THIN)
    assert validate_mesh(mesh).ok
    assert len(mesh.indices(Region.WALL)) == n_c * n_ax
    assert np.allclose((mesh.areas[:, None] * mesh.normals).sum(axis=0), 0.0, atol=1e-12)


def test_validate_flags_flipped_normal():
    mesh = build_duct(square_spec(length=0.4, h1=(0.1,), h2=0.1, h0=0.1, hL=0.1))
    verts = mesh.verts.copy()
    verts[0] = verts[0, ::-1]
    from ductbem.mesh import DuctMesh
    bad = DuctMesh(verts=verts, nverts=mesh.nverts, regions=mesh.regions, kind=mesh.kind, spec=mesh.spec)
    report = validate_mesh(bad)
    assert 0 in report.orientation_violations and not report.ok


def test_mesh_roundtrip(tmp_path):
    mesh = build_duct(square_spec(length=0.4, h1=(0.1,), h2=0.1, h0=0.1, hL=0.1))
    mesh = mesh.with_bcs({Region.SOURCE: BoundaryCondition.velocity(0.0, 1.0 + 0.5j),
                          Region.END: BoundaryCondition.admittance(0.0, -2.5j)})
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.n == mesh.n
    assert np.array_equal(back.verts, mesh.verts)
    assert list(back.regions) == list(mesh.regions)
    assert back.bcs == mesh.bcs


def test_read_mesh_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("hello\n")
    with pytest.raises(ValueError):
        read_mesh(path)


def test_boundary_condition_rules():
    with pytest.raises(ValueError):
        BoundaryCondition(BCKind.VELOCITY, v0_plus=1.0, alpha_plus=1.0)
    with pytest.raises(ValueError):
        BoundaryCondition(BCKind.ADMITTANCE, v0_plus=1.0)
    assert BoundaryCondition.admittance(0, 1j).has_admittance
    assert not BoundaryCondition.velocity(1, 1).has_admittance


def test_wall_line_is_one_sorted_column():
    mesh = build_duct(square_spec())
    line = wall_line(mesh)
    c = mesh.centroids[line]
    assert len(line) == 85
    assert np.all(np.diff(c[:, 0]) > 0)
    assert np.allclose(c[:, 1], -0.1) and np.allclose(c[:, 2], 0.0, atol=0.021)


def test_spec_validation():
    with pytest.raises(ValueError):
        square_spec(length=-1.0)
    with pytest.raises(ValueError):
        DuctSpec(length=1.0, h1=(0.1,), h2=0.1, cross_section="circle")
