"""Parametric duct meshes of flat constant boundary elements.

The duct axis is the x axis, the cross-section is centred on y = z = 0 and
the duct occupies 0 <= x <= L.  Every normal points away from the duct
interior, so the positive side of a thin element is the outside.

Elements are stored as arrays.  Quadrilaterals keep their four corners,
triangles repeat the last corner (``verts[:, 3] == verts[:, 2]``) so both
shapes share one bilinear parametrisation in the quadrature code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

# ---------------------------------------------------------------------------
# Tags and boundary conditions
# ---------------------------------------------------------------------------


class Region(str, enum.Enum):
    WALL = "wall"              # side walls
    SOURCE = "source"          # closure at x = 0
    END = "end"                # closure at x = L (real or virtual)
    ADMITTANCE = "admittance"  # free-standing admittance patch


class ElementKind(str, enum.Enum):
    THIN = "thin"
    SURFACE = "surface"


class Closure(str, enum.Enum):
    CLOSED = "closed"
    OPEN = "open"
    SINGLE = "single"


class BCKind(str, enum.Enum):
    SOUND_HARD = "sound_hard"
    VELOCITY = "velocity"
    ADMITTANCE = "admittance"


@dataclass(frozen=True)
class BoundaryCondition:
    """Robin data ``v = v0 + alpha * phi`` on each side of an element.

    ``v`` is the derivative of the potential along the element normal.  The
    ``plus`` side is the side the normal points into.  Surface elements only
    read the side facing the computational domain.
    """

    kind: BCKind = BCKind.SOUND_HARD
    v0_plus: complex = 0.0
    v0_minus: complex = 0.0
    alpha_plus: complex = 0.0
    alpha_minus: complex = 0.0

    def __post_init__(self):
        if self.kind is BCKind.SOUND_HARD:
            if any(self.canonical()):
                raise ValueError("sound-hard condition carries no data")
        elif self.kind is BCKind.VELOCITY:
            if self.alpha_plus or self.alpha_minus:
                raise ValueError("velocity condition cannot carry an admittance")
        elif self.kind is BCKind.ADMITTANCE:
            if self.v0_plus or self.v0_minus:
                raise ValueError("admittance condition cannot carry a velocity")

    @classmethod
    def sound_hard(cls) -> "BoundaryCondition":
        return cls()

    @classmethod
    def velocity(cls, v_plus: complex = 0.0, v_minus: complex = 0.0) -> "BoundaryCondition":
        return cls(BCKind.VELOCITY, v0_plus=v_plus, v0_minus=v_minus)

    @classmethod
    def admittance(cls, alpha_plus: complex = 0.0, alpha_minus: complex = 0.0) -> "BoundaryCondition":
        return cls(BCKind.ADMITTANCE, alpha_plus=alpha_plus, alpha_minus=alpha_minus)

    def canonical(self) -> tuple[complex, complex, complex, complex]:
        """Return ``(v0+, v0-, alpha+, alpha-)``."""
        return (complex(self.v0_plus), complex(self.v0_minus),
                complex(self.alpha_plus), complex(self.alpha_minus))

    @property
    def has_admittance(self) -> bool:
        return self.alpha_plus != 0 or self.alpha_minus != 0


SOUND_HARD = BoundaryCondition()

# ---------------------------------------------------------------------------
# Element, spec and mesh containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Element:
    vertices: np.ndarray
    centroid: np.ndarray
    normal: np.ndarray
    area: float
    shape: str
    kind: ElementKind
    region: Region


@dataclass(frozen=True)
class DuctSpec:
    """Geometry of a straight duct.

    ``h1`` holds one axial element width per longitudinal zone (the zones
    have equal length).  ``h2`` is the circumferential element size, ``h0``
    and ``hL`` the closure element sizes.  For a circle ``width`` is ignored
    and ``radius`` is used.
    """

    length: float
    h1: tuple[float, ...]
    h2: float
    h0: float | None = None
    hL: float | None = None
    cross_section: str = "square"
    width: float = 0.2
    radius: float | None = None
    closure_start: Closure = Closure.CLOSED
    closure_end: Closure = Closure.CLOSED
    disc_rings: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "h1", tuple(float(h) for h in np.atleast_1d(self.h1)))
        object.__setattr__(self, "closure_start", Closure(self.closure_start))
        object.__setattr__(self, "closure_end", Closure(self.closure_end))
        if not self.h1:
            raise ValueError("h1 must have at least one zone")
        sizes = [self.length, self.h2, *self.h1]
        if self.cross_section == "square":
            sizes.append(self.width)
        elif self.cross_section == "circle":
            if self.radius is None:
                raise ValueError("circular duct needs a radius")
            sizes.append(self.radius)
        else:
            raise ValueError(f"unknown cross-section {self.cross_section!r}")
        for h in (self.h0, self.hL):
            if h is not None:
                sizes.append(h)
        if any(not (s > 0) for s in sizes):
            raise ValueError("all duct dimensions must be positive")

    @property
    def closure_sizes(self) -> tuple[float, float]:
        default = self.h2
        return (self.h0 or default, self.hL or default)


@dataclass
class DuctMesh:
    verts: np.ndarray          # (N, 4, 3)
    nverts: np.ndarray         # (N,) 3 or 4
    regions: np.ndarray        # (N,) Region values as str
    kind: ElementKind
    bcs: list[BoundaryCondition] = field(default_factory=list)
    spec: DuctSpec | None = None
    zones: np.ndarray | None = None  # axial zone index of wall elements, -1 otherwise

    def __post_init__(self):
        self.verts = np.asarray(self.verts, dtype=float)
        self.nverts = np.asarray(self.nverts, dtype=int)
        self.regions = np.asarray([Region(r).value for r in self.regions], dtype=object)
        self.kind = ElementKind(self.kind)
        if not self.bcs:
            self.bcs = [SOUND_HARD] * len(self.verts)
        if len(self.bcs) != len(self.verts):
            raise ValueError("one boundary condition per element required")
        self._geometry()

    def _geometry(self):
        v = self.verts
        tri = (self.nverts == 3)[:, None]
        # quads: cross product of the diagonals; triangles: of two edges
        a = np.where(tri, v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        b = np.where(tri, v[:, 2] - v[:, 0], v[:, 3] - v[:, 1])
        c = np.cross(a, b)
        norm = np.linalg.norm(c, axis=1)
        self.areas = 0.5 * norm
        self.normals = c / norm[:, None]
        self.centroids = np.where(tri, v[:, :3].mean(axis=1), _quad_centroid(v))
        corners = v
        diam = np.zeros(len(v))
        for a in range(4):
            for b in range(a + 1, 4):
                diam = np.maximum(diam, np.linalg.norm(corners[:, a] - corners[:, b], axis=1))
        self.diameters = diam

    # -- conveniences -----------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.verts)

    def __len__(self):
        return self.n

    @property
    def region_index(self) -> dict[Region, np.ndarray]:
        return {r: np.flatnonzero(self.regions == r.value) for r in Region}

    def indices(self, region: Region | str) -> np.ndarray:
        return np.flatnonzero(self.regions == Region(region).value)

    @property
    def elements(self) -> list[Element]:
        return [self.element(i) for i in range(self.n)]

    def element(self, i: int) -> Element:
        nv = int(self.nverts[i])
        return Element(
            vertices=self.verts[i, :nv].copy(),
            centroid=self.centroids[i].copy(),
            normal=self.normals[i].copy(),
            area=float(self.areas[i]),
            shape="triangle" if nv == 3 else "quadrilateral",
            kind=self.kind,
            region=Region(self.regions[i]),
        )

    def with_bcs(self, bcs: Mapping[Region | str, BoundaryCondition] | Sequence[BoundaryCondition]) -> "DuctMesh":
        """Return a mesh sharing this geometry with new boundary conditions.

        ``bcs`` is either one condition per element or a mapping from region
        to condition (regions not mentioned become sound hard).
        """
        if isinstance(bcs, Mapping):
            lookup = {Region(k).value: v for k, v in bcs.items()}
            new = [lookup.get(r, SOUND_HARD) for r in self.regions]
        else:
            new = list(bcs)
        out = replace(self, bcs=new)
        return out

    def subset_bc_arrays(self) -> tuple[np.ndarray, ...]:
        """Canonical (v0+, v0-, alpha+, alpha-) as four complex arrays."""
        arr = np.array([bc.canonical() for bc in self.bcs], dtype=complex).reshape(-1, 4)
        return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def _quad_centroid(v):
    # area centroid of a planar quadrilateral: split along a diagonal
    a1 = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
    a2 = 0.5 * np.linalg.norm(np.cross(v[:, 2] - v[:, 0], v[:, 3] - v[:, 0]), axis=1)
    c1 = (v[:, 0] + v[:, 1] + v[:, 2]) / 3.0
    c2 = (v[:, 0] + v[:, 2] + v[:, 3]) / 3.0
    return (a1[:, None] * c1 + a2[:, None] * c2) / (a1 + a2)[:, None]


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _counts(total: float, h: float) -> int:
    return max(1, int(round(total / h)))


def _axial_breaks(spec: DuctSpec) -> tuple[np.ndarray, np.ndarray]:
    """Axial element boundaries and the zone of each axial slice."""
    nz = len(spec.h1)
    zlen = spec.length / nz
    xs = [0.0]
    zone_of = []
    for z, h in enumerate(spec.h1):
        m = _counts(zlen, h)
        edges = z * zlen + zlen * np.arange(1, m + 1) / m
        xs.extend(edges.tolist())
        zone_of.extend([z] * m)
    xs[-1] = spec.length
    return np.array(xs), np.array(zone_of)


def _oriented(quad: np.ndarray, outward: np.ndarray) -> np.ndarray:
    """Reverse the vertex order if the normal disagrees with ``outward``."""
    n = np.cross(quad[2] - quad[0], quad[3] - quad[1]) if len(quad) == 4 else \
        np.cross(quad[1] - quad[0], quad[2] - quad[0])
    if np.dot(n, outward) < 0:
        quad = quad[::-1].copy()
    return quad


def _pad(poly: np.ndarray) -> np.ndarray:
    if len(poly) == 3:
        return np.vstack([poly, poly[2:3]])
    return poly


def _square_grid(x: float, w: float, m: int, outward: np.ndarray) -> list[np.ndarray]:
    s = np.linspace(-w / 2, w / 2, m + 1)
    quads = []
    for i in range(m):
        for j in range(m):
            q = np.array([
                [x, s[i], s[j]], [x, s[i + 1], s[j]],
                [x, s[i + 1], s[j + 1]], [x, s[i], s[j + 1]],
            ])
            quads.append(_oriented(q, outward))
    return quads


def _assemble(polys, regions, zones, kind, spec, bcs) -> DuctMesh:
    verts = np.array([_pad(p) for p in polys]) if polys else np.zeros((0, 4, 3))
    nverts = np.array([len(p) for p in polys], dtype=int)
    mesh = DuctMesh(verts=verts, nverts=nverts, regions=regions,
                    kind=ElementKind(kind), spec=spec, zones=np.array(zones, dtype=int))
    if bcs is not None:
        mesh = mesh.with_bcs(bcs)
    return mesh


def build_square_duct(spec: DuctSpec, kind: ElementKind | str = ElementKind.THIN,
                      bcs: Mapping[Region | str, BoundaryCondition] | None = None) -> DuctMesh:
    """Tile a square duct with rectangular side-wall and closure elements."""
    if spec.cross_section != "square":
        raise ValueError("build_square_duct needs a square cross-section")
    w, L = spec.width, spec.length
    h0, hL = spec.closure_sizes
    for mode, h in ((spec.closure_start, h0), (spec.closure_end, hL)):
        if mode is Closure.CLOSED and h > w + 1e-12:
            raise ValueError("closure element size exceeds the duct width")
    xs, zone_of = _axial_breaks(spec)
    m = _counts(w, spec.h2)
    s = np.linspace(-w / 2, w / 2, m + 1)
    polys, regions, zones = [], [], []

    faces = [  # (fixed axis, fixed value, outward normal)
        (1, -w / 2, np.array([0.0, -1.0, 0.0])),
        (2, -w / 2, np.array([0.0, 0.0, -1.0])),
        (1, w / 2, np.array([0.0, 1.0, 0.0])),
        (2, w / 2, np.array([0.0, 0.0, 1.0])),
    ]
    for axis, value, outward in faces:
        other = 3 - axis
        for ix in range(len(xs) - 1):
            for j in range(m):
                q = np.zeros((4, 3))
                q[:, 0] = [xs[ix], xs[ix + 1], xs[ix + 1], xs[ix]]
                q[:, axis] = value
                q[:, other] = [s[j], s[j], s[j + 1], s[j + 1]]
                polys.append(_oriented(q, outward))
                regions.append(Region.WALL)
                zones.append(zone_of[ix])

    for x0, mode, h, region, outward in (
        (0.0, spec.closure_start, h0, Region.SOURCE, np.array([-1.0, 0, 0])),
        (L, spec.closure_end, hL, Region.END, np.array([1.0, 0, 0])),
    ):
        if mode is Closure.OPEN:
            continue
        mc = 1 if mode is Closure.SINGLE else _counts(w, h)
        for q in _square_grid(x0, w, mc, outward):
            polys.append(q)
            regions.append(region)
            zones.append(-1)
    return _assemble(polys, regions, zones, kind, spec, bcs)


def _ring_counts(radius: float, n_c: int, h: float) -> list[int]:
    n_rings = max(1, int(round(radius / h)))
    counts = []
    for i in range(1, n_rings):
        ri = radius * i / n_rings
        counts.append(max(3, int(round(2 * np.pi * ri / h))))
    counts.append(n_c)
    return counts


def _disc(x: float, radius: float, ring_nodes: Sequence[int], outward: np.ndarray) -> list[np.ndarray]:
    """Structured polar triangulation: centre fan plus zipped ring strips."""
    n_r = len(ring_nodes)
    rings = []
    for i, m in enumerate(ring_nodes, start=1):
        ri = radius * i / n_r
        # the outer ring shares the wall's angles; inner rings are staggered
        offset = 0.0 if i == n_r else (0.5 if i % 2 else 0.0)
        ang = 2 * np.pi * (np.arange(m) + offset) / m
        rings.append((ang, np.column_stack([np.full(m, x), ri * np.cos(ang), ri * np.sin(ang)])))
    tris = []
    centre = np.array([x, 0.0, 0.0])
    ang, pts = rings[0]
    for j in range(len(ang)):
        tris.append(_oriented(np.array([centre, pts[j], pts[(j + 1) % len(ang)]]), outward))
    for (a_in, p_in), (a_out, p_out) in zip(rings[:-1], rings[1:]):
        i = j = 0
        m_in, m_out = len(a_in), len(a_out)
        # unwrap angles so that both sequences start near zero
        ai = np.append(a_in, a_in[0] + 2 * np.pi)
        ao = np.append(a_out, a_out[0] + 2 * np.pi)
        while i < m_in or j < m_out:
            if j >= m_out or (i < m_in and ai[i + 1] < ao[j + 1]):
                t = [p_in[i % m_in], p_in[(i + 1) % m_in], p_out[j % m_out]]
                i += 1
            else:
                t = [p_in[i % m_in], p_out[(j + 1) % m_out], p_out[j % m_out]]
                j += 1
            tris.append(_oriented(np.array(t), outward))
    return tris


def build_circular_duct(spec: DuctSpec, kind: ElementKind | str = ElementKind.THIN,
                        bcs: Mapping[Region | str, BoundaryCondition] | None = None) -> DuctMesh:
    """Facet a circular duct with flat rectangles and triangulated end discs."""
    if spec.cross_section != "circle":
        raise ValueError("build_circular_duct needs a circular cross-section")
    r, L = spec.radius, spec.length
    n_c = int(round(2 * np.pi * r / spec.h2))
    if n_c < 3:
        raise ValueError(f"need at least 3 circumferential divisions, got {n_c}")
    xs, zone_of = _axial_breaks(spec)
    ang = 2 * np.pi * np.arange(n_c + 1) / n_c
    ring = np.column_stack([np.cos(ang), np.sin(ang)]) * r
    polys, regions, zones = [], [], []
    for j in range(n_c):
        mid = 0.5 * (ring[j] + ring[j + 1])
        outward = np.array([0.0, mid[0], mid[1]])
        for ix in range(len(xs) - 1):
            q = np.array([
                [xs[ix], *ring[j]], [xs[ix + 1], *ring[j]],
                [xs[ix + 1], *ring[j + 1]], [xs[ix], *ring[j + 1]],
            ])
            polys.append(_oriented(q, outward))
            regions.append(Region.WALL)
            zones.append(zone_of[ix])
    h0, hL = spec.closure_sizes
    for x0, mode, h, region, outward in (
        (0.0, spec.closure_start, h0, Region.SOURCE, np.array([-1.0, 0, 0])),
        (L, spec.closure_end, hL, Region.END, np.array([1.0, 0, 0])),
    ):
        if mode is Closure.OPEN:
            continue
        if mode is Closure.SINGLE:
            raise ValueError("a circular closure cannot be a single flat element")
        rings = list(spec.disc_rings) if spec.disc_rings else _ring_counts(r, n_c, h)
        for t in _disc(x0, r, rings, outward):
            polys.append(t)
            regions.append(region)
            zones.append(-1)
    return _assemble(polys, regions, zones, kind, spec, bcs)


def build_duct(spec: DuctSpec, kind: ElementKind | str = ElementKind.THIN, bcs=None) -> DuctMesh:
    if spec.cross_section == "square":
        return build_square_duct(spec, kind, bcs)
    return build_circular_duct(spec, kind, bcs)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass
class MeshReport:
    n_elements: int
    orientation_violations: list[int]
    duplicate_collocation: list[tuple[int, int]]
    unnormalised: list[int]
    nonplanar: list[int]
    degenerate: list[int]
    unpartitioned: list[int]
    min_aspect: float
    max_aspect: float

    @property
    def violations(self) -> list[str]:
        out = []
        for i in self.orientation_violations:
            out.append(f"element {i}: normal points into the duct")
        for i, j in self.duplicate_collocation:
            out.append(f"elements {i} and {j}: coincident collocation points")
        for i in self.unnormalised:
            out.append(f"element {i}: normal not unit length")
        for i in self.nonplanar:
            out.append(f"element {i}: not planar")
        for i in self.degenerate:
            out.append(f"element {i}: zero area or centroid outside")
        for i in self.unpartitioned:
            out.append(f"element {i}: not covered by exactly one region")
        return out

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_mesh(mesh: DuctMesh, tol: float = 1e-9) -> MeshReport:
    """Check a duct mesh against the geometric invariants. Never raises."""
    n = mesh.n
    c, nrm = mesh.centroids, mesh.normals
    length = mesh.spec.length if mesh.spec is not None else (c[:, 0].max() if n else 0.0)

    orient = []
    for i in range(n):
        region = mesh.regions[i]
        if region == Region.WALL.value:
            radial = np.array([0.0, c[i, 1], c[i, 2]])
            bad = np.dot(radial, nrm[i]) <= 0
        elif region == Region.SOURCE.value:
            bad = nrm[i, 0] >= 0
        elif region == Region.END.value:
            bad = nrm[i, 0] <= 0
        else:
            bad = False
        if bad:
            orient.append(i)

    dup = sorted(cKDTree(c).query_pairs(tol * max(1.0, length))) if n > 1 else []

    unnorm = np.flatnonzero(np.abs(np.linalg.norm(nrm, axis=1) - 1.0) > 1e-12).tolist()

    nonplanar = []
    quads = np.flatnonzero(mesh.nverts == 4)
    if len(quads):
        v = mesh.verts[quads]
        off = np.abs(np.einsum("ij,ij->i", v[:, 3] - v[:, 0],
                               np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])))
        edge = np.linalg.norm(v[:, 1] - v[:, 0], axis=1)
        scale = np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
        nonplanar = quads[off / np.maximum(scale, 1e-300) > 1e-10 * np.maximum(edge, 1.0)].tolist()

    degenerate = []
    for i in range(n):
        if not mesh.areas[i] > 0 or not _inside(mesh, i, c[i]):
            degenerate.append(i)

    valid = {r.value for r in Region}
    unpart = [i for i in range(n) if mesh.regions[i] not in valid]

    edges = np.linalg.norm(np.roll(mesh.verts, -1, axis=1) - mesh.verts, axis=2)
    edges = np.where(edges > 0, edges, np.nan)
    aspect = np.nanmax(edges, axis=1) / np.nanmin(edges, axis=1) if n else np.array([1.0])
    return MeshReport(
        n_elements=n,
        orientation_violations=orient,
        duplicate_collocation=[tuple(p) for p in dup],
        unnormalised=unnorm,
        nonplanar=nonplanar,
        degenerate=degenerate,
        unpartitioned=unpart,
        min_aspect=float(np.min(aspect)),
        max_aspect=float(np.max(aspect)),
    )


def _inside(mesh: DuctMesh, i: int, p: np.ndarray) -> bool:
    nv = mesh.nverts[i]
    v = mesh.verts[i, :nv]
    n = mesh.normals[i]
    for a in range(nv):
        e = v[(a + 1) % nv] - v[a]
        if np.dot(np.cross(e, p - v[a]), n) < -1e-12 * np.dot(e, e):
            return False
    return True


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

MESH_HEADER = "ductbem-mesh v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_mesh(mesh: DuctMesh, path) -> None:
    """Write the line-oriented mesh format (0-based vertex/element ids)."""
    flat = np.concatenate([mesh.verts[i, :mesh.nverts[i]] for i in range(mesh.n)]) if mesh.n else np.zeros((0, 3))
    uniq, inverse = np.unique(np.round(flat, 12), axis=0, return_inverse=True)
    # keep exact coordinates of the first occurrence
    first = np.zeros(len(uniq), dtype=int)
    first[inverse[::-1]] = np.arange(len(flat))[::-1]
    coords = flat[first]
    lines = [MESH_HEADER]
    for p in coords:
        lines.append("v " + " ".join(_fmt(t) for t in p))
    pos = 0
    for i in range(mesh.n):
        nv = int(mesh.nverts[i])
        ids = inverse[pos:pos + nv]
        pos += nv
        lines.append(f"e {mesh.kind.value} {mesh.regions[i]} " + " ".join(str(int(t)) for t in ids))
    for i, bc in enumerate(mesh.bcs):
        if bc.kind is BCKind.SOUND_HARD:
            continue
        if bc.kind is BCKind.VELOCITY:
            vals = (bc.v0_plus, bc.v0_minus)
        else:
            vals = (bc.alpha_plus, bc.alpha_minus)
        parts = []
        for z in vals:
            z = complex(z)
            parts += [_fmt(z.real), _fmt(z.imag)]
        lines.append(f"bc {i} {bc.kind.value} " + " ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> DuctMesh:
    coords, polys, regions, kinds, bc_lines = [], [], [], set(), []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != MESH_HEADER:
            raise ValueError(f"not a ductbem mesh file: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                coords.append([float(t) for t in parts[1:4]])
            elif tag == "e":
                kinds.add(parts[1])
                regions.append(parts[2])
                polys.append([int(t) for t in parts[3:]])
            elif tag == "bc":
                bc_lines.append(parts[1:])
            else:
                raise ValueError(f"line {lineno}: unknown record {tag!r}")
    if len(kinds) > 1:
        raise ValueError("mixed element kinds in one mesh")
    coords = np.array(coords)
    verts = np.array([_pad(coords[p]) for p in polys])
    bcs = [SOUND_HARD] * len(polys)
    for rec in bc_lines:
        i, kind, vals = int(rec[0]), BCKind(rec[1]), [float(t) for t in rec[2:]]
        plus, minus = complex(vals[0], vals[1]), complex(vals[2], vals[3])
        if kind is BCKind.VELOCITY:
            bcs[i] = BoundaryCondition.velocity(plus, minus)
        elif kind is BCKind.ADMITTANCE:
            bcs[i] = BoundaryCondition.admittance(plus, minus)
    return DuctMesh(verts=verts, nverts=np.array([len(p) for p in polys]),
                    regions=regions, kind=ElementKind(kinds.pop() if kinds else "thin"), bcs=bcs)


# ---------------------------------------------------------------------------
# Lines of collocation points used by the experiment drivers
# ---------------------------------------------------------------------------


def wall_line(mesh: DuctMesh, azimuth: float = np.pi) -> np.ndarray:
    """Wall elements along the line of the given azimuth, sorted by x.

    Azimuth is measured in the y-z plane from +y towards +z; the default
    picks the mid-line of the ``y = -w/2`` face of a square duct.
    """
    idx = mesh.indices(Region.WALL)
    c = mesh.centroids[idx]
    phi = np.arctan2(c[:, 2], c[:, 1])
    dphi = np.abs(np.angle(np.exp(1j * (phi - azimuth))))
    # one column only: ties (azimuth on a facet edge) go to the first element
    column = phi[np.argmin(dphi)]
    sel = idx[np.abs(np.angle(np.exp(1j * (phi - column)))) <= 1e-9]
    return sel[np.argsort(mesh.centroids[sel, 0], kind="stable")]
