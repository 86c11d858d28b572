"""Element integrals of the Helmholtz kernels against a constant basis.

Regular and near-singular pairs use tensor Gauss-Legendre rules on the
bilinear parametrisation of each panel.  The order comes from an a priori
estimate in the spirit of Lachat and Watson: a Bernstein-ellipse bound for
the geometric singularity plus a bound for the oscillation of exp(ikr).
When the estimate exceeds the maximum order the panel is split into four
and each child is estimated again.

Self panels (collocation point at the element centroid) are integrated in
polar coordinates around the centroid, which cancels the 1/r singularity.
The hypersingular self term subtracts the static kernel, whose Hadamard
finite part over a flat polygon reduces to a sum over its edges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .kernels import FOUR_PI, kernel_values

SUBDIVIDE = 0
KERNELS = ("G", "H", "Hp", "E")


class QuadratureAccuracyWarning(RuntimeWarning):
    """Subdivision depth exhausted before the order estimate was met."""


class NonPlanarElementError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureBudget:
    max_order: int = 12
    max_depth: int = 6
    tol: float = 1e-8

    def __post_init__(self):
        if self.max_order < 2:
            raise ValueError("max_order must be at least 2")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")


DEFAULT_BUDGET = QuadratureBudget()


@lru_cache(maxsize=None)
def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _tensor01(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s, w = gauss01(n)
    u, v = np.meshgrid(s, s, indexing="ij")
    return u.ravel(), v.ravel(), np.outer(w, w).ravel()


# ---------------------------------------------------------------------------
# Order estimate
# ---------------------------------------------------------------------------

# safety factor on the geometric error bound, covers the 1/r^3 kernel
_GEOM_CONST = 1e3


def _oscillation_bound(a: np.ndarray, n: int) -> np.ndarray:
    # error of n-point Gauss-Legendre for exp(i a t) on [0, 1]
    logb = (2 * n) * np.log(np.maximum(a, 1e-300)) + 4 * math.lgamma(n + 1) \
        - math.log(2 * n + 1) - 3 * math.lgamma(2 * n + 1)
    return logb


def estimate_orders(distance, diameter, budget: QuadratureBudget = DEFAULT_BUDGET, k: float = 0.0):
    """Vectorised order estimate; 0 (``SUBDIVIDE``) where the order is too high."""
    d = np.asarray(distance, dtype=float)
    D = np.asarray(diameter, dtype=float)
    delta = 2.0 * d / D
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = delta + np.sqrt(np.maximum(delta * delta - 1.0, 0.0))
        n_geo = np.ceil(np.log(_GEOM_CONST / budget.tol) / (2.0 * np.log(rho)))
    n_geo = np.where(delta > 1.0, n_geo, np.inf)
    a = abs(k) * D
    log_tol = math.log(budget.tol)
    n_osc = np.full(np.shape(a), np.inf)
    for n in range(budget.max_order, 0, -1):
        n_osc = np.where(_oscillation_bound(a, n) <= log_tol, n, n_osc)
    n = np.maximum(np.maximum(n_geo, n_osc), 1.0)
    return np.where(n > budget.max_order, SUBDIVIDE, n).astype(int)


def select_order(distance: float, diameter: float, budget: QuadratureBudget = DEFAULT_BUDGET,
                 k: float = 0.0) -> int:
    """Gauss order per direction for a panel of ``diameter`` seen from ``distance``.

    Returns ``SUBDIVIDE`` when the estimate exceeds ``budget.max_order``.
    """
    return int(estimate_orders(distance, diameter, budget, k))


# ---------------------------------------------------------------------------
# Bilinear panel maps
# ---------------------------------------------------------------------------


def _map(P, u, v):
    """Points and area Jacobians of the bilinear map at parameters (u, v).

    ``P`` has shape (m, 4, 3); ``u``, ``v`` have shape (m, q).
    """
    u = u[..., None]
    v = v[..., None]
    P0, P1, P2, P3 = (P[:, i][:, None, :] for i in range(4))
    y = (1 - u) * (1 - v) * P0 + u * (1 - v) * P1 + u * v * P2 + (1 - u) * v * P3
    du = (1 - v) * (P1 - P0) + v * (P2 - P3)
    dv = (1 - u) * (P3 - P0) + u * (P2 - P1)
    jac = np.linalg.norm(np.cross(du, dv), axis=-1)
    return y, jac


def _box_geometry(panels, c, box):
    """Midpoints and diameters of parameter boxes on panels ``c``."""
    u0, u1, v0, v1 = box
    p0, a, b, cc = panels.p0[c], panels.a[c], panels.b[c], panels.c[c]

    def at(u, v):
        return p0 + u[:, None] * a + v[:, None] * b + (u * v)[:, None] * cc

    corners = [at(u0, v0), at(u1, v0), at(u1, v1), at(u0, v1)]
    mid = at(0.5 * (u0 + u1), 0.5 * (v0 + v1))
    diam = np.zeros(len(c))
    for i in range(4):
        for j in range(i + 1, 4):
            d = corners[i] - corners[j]
            diam = np.maximum(diam, np.sqrt(np.einsum("mi,mi->m", d, d)))
    return mid, diam


def integrate_pairs(targets, target_normals, verts, normals, rows, cols, k, which=KERNELS,
                    budget: QuadratureBudget = DEFAULT_BUDGET):
    """Integrate kernels over panels ``cols`` seen from points ``targets[rows]``.

    ``verts`` holds panel corners (N, 4, 3) in bilinear order, ``normals`` the
    unit panel normals.  ``target_normals`` supplies ``n_x`` for the H' and E
    kernels and may be ``None`` otherwise.  Returns ``(values, n_unconverged)``
    where ``values`` maps kernel name to a complex array over the pairs.
    """
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    npair = len(rows)
    out = {name: np.zeros(npair, dtype=complex) for name in which}
    if npair == 0:
        return out, 0
    need_nx = ("Hp" in which) or ("E" in which)
    if need_nx and target_normals is None:
        raise ValueError("H' and E kernels need normals at the target points")

    panels = _Panels.from_verts(verts)
    item = np.arange(npair)
    box = (np.zeros(npair), np.ones(npair), np.zeros(npair), np.ones(npair))
    unconverged = 0
    for depth in range(budget.max_depth + 1):
        mid, diam = _box_geometry(panels, cols[item], box)
        d = targets[rows[item]] - mid
        dist = np.sqrt(np.einsum("mi,mi->m", d, d))
        order = estimate_orders(dist, diam, budget, k)
        if depth == budget.max_depth:
            stuck = order == SUBDIVIDE
            unconverged += int(np.count_nonzero(stuck))
            order = np.where(stuck, budget.max_order, order)
        for n in np.unique(order[order > 0]):
            sel = np.flatnonzero(order == n)
            _accumulate(out, which, k, targets, target_normals, panels, normals,
                        rows, cols, item[sel], tuple(b[sel] for b in box), int(n))
        split = np.flatnonzero(order == SUBDIVIDE)
        if len(split) == 0:
            break
        u0, u1, v0, v1 = (b[split] for b in box)
        um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
        item = np.repeat(item[split], 4)
        box = (
            np.stack([u0, um, um, u0], axis=1).ravel(),
            np.stack([um, u1, u1, um], axis=1).ravel(),
            np.stack([v0, v0, vm, vm], axis=1).ravel(),
            np.stack([vm, vm, v1, v1], axis=1).ravel(),
        )
    if unconverged:
        warnings.warn(f"{unconverged} sub-panels hit the subdivision limit",
                      QuadratureAccuracyWarning, stacklevel=2)
    return out, unconverged


_CHUNK_POINTS = 400_000

# compiled inner loop; the numpy path is kept as a cross-check
USE_COMPILED = True


@dataclass
class _Panels:
    """Bilinear coefficients y = p0 + u a + v b + u v c and Jacobian terms."""

    p0: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    n2: np.ndarray

    @classmethod
    def from_verts(cls, verts):
        p0 = verts[:, 0]
        a = verts[:, 1] - p0
        b = verts[:, 3] - p0
        c = verts[:, 2] - verts[:, 3] - a
        # du x dv = a x b + u (a x c) + v (c x b)
        return cls(p0, a, b, c, np.cross(a, b), np.cross(a, c), np.cross(c, b))


def _accumulate_numpy(out, which, k, targets, target_normals, panels, normals, rows, cols, items, box, n):
    su, sv, sw = _tensor01(n)
    q = len(sw)
    step = max(1, _CHUNK_POINTS // q)
    for s in range(0, len(items), step):
        it = items[s:s + step]
        u0, u1, v0, v1 = (b[s:s + step] for b in box)
        du, dv = u1 - u0, v1 - v0
        u = (u0[:, None] + du[:, None] * su[None, :])[..., None]
        v = (v0[:, None] + dv[:, None] * sv[None, :])[..., None]
        c = cols[it]
        uc = u * panels.c[c][:, None, :]
        x = targets[rows[it]]
        # R = x - y
        R = (x - panels.p0[c])[:, None, :] - u * panels.a[c][:, None, :] - v * panels.b[c][:, None, :] - v * uc
        J = panels.n0[c][:, None, :] + u * panels.n1[c][:, None, :] + v * panels.n2[c][:, None, :]
        jac = np.sqrt(np.einsum("mqi,mqi->mq", J, J))
        w = jac * sw[None, :] * (du * dv)[:, None]
        r = np.sqrt(np.einsum("mqi,mqi->mq", R, R))
        ny = normals[c]
        rny = np.einsum("mqi,mi->mq", R, ny)
        if target_normals is not None:
            nx = target_normals[rows[it]]
            rnx = np.einsum("mqi,mi->mq", R, nx)
            nxny = np.einsum("mi,mi->m", nx, ny)[:, None]
        else:
            rnx = nxny = None
        kv = kernel_values(k, r, rnx, rny, nxny, which)
        if "one" in which:
            kv["one"] = np.ones_like(r)
        for name in which:
            contrib = np.einsum("mq,mq->m", kv[name], w)
            if len(it) == len(np.unique(it)):
                out[name][it] += contrib
            else:
                np.add.at(out[name], it, contrib)


_KERNEL_SLOTS = {"G": 0, "H": 1, "Hp": 2, "E": 3, "one": 4}


@njit(cache=True)
def _accumulate_compiled(out, flags, k, targets, tnormals, p0, pa, pb, pc, n0, n1, n2, normals,
                         rows, cols, items, u0, u1, v0, v1, su, sv, sw):  # pragma: no cover
    q = sw.shape[0]
    for m in range(items.shape[0]):
        it = items[m]
        c = cols[it]
        x = targets[rows[it]]
        ny = normals[c]
        nx0 = nx1 = nx2 = 0.0
        if flags[2] or flags[3]:
            nxv = tnormals[rows[it]]
            nx0, nx1, nx2 = nxv[0], nxv[1], nxv[2]
        nxny = nx0 * ny[0] + nx1 * ny[1] + nx2 * ny[2]
        du = u1[m] - u0[m]
        dv = v1[m] - v0[m]
        aG = 0j
        aH = 0j
        aHp = 0j
        aE = 0j
        aOne = 0.0
        for j in range(q):
            u = u0[m] + du * su[j]
            v = v0[m] + dv * sv[j]
            uv = u * v
            R0 = x[0] - (p0[c, 0] + u * pa[c, 0] + v * pb[c, 0] + uv * pc[c, 0])
            R1 = x[1] - (p0[c, 1] + u * pa[c, 1] + v * pb[c, 1] + uv * pc[c, 1])
            R2 = x[2] - (p0[c, 2] + u * pa[c, 2] + v * pb[c, 2] + uv * pc[c, 2])
            J0 = n0[c, 0] + u * n1[c, 0] + v * n2[c, 0]
            J1 = n0[c, 1] + u * n1[c, 1] + v * n2[c, 1]
            J2 = n0[c, 2] + u * n1[c, 2] + v * n2[c, 2]
            w = math.sqrt(J0 * J0 + J1 * J1 + J2 * J2) * sw[j] * du * dv
            r2 = R0 * R0 + R1 * R1 + R2 * R2
            r = math.sqrt(r2)
            kr = k * r
            g = complex(math.cos(kr), math.sin(kr)) / (4.0 * math.pi * r)
            ikr1 = complex(-1.0, kr)
            if flags[0]:
                aG += g * w
            if flags[1] or flags[2] or flags[3]:
                gp_r = g * ikr1 / r2
                rny = R0 * ny[0] + R1 * ny[1] + R2 * ny[2]
                rnx = R0 * nx0 + R1 * nx1 + R2 * nx2
                if flags[1]:
                    aH -= gp_r * rny * w
                if flags[2]:
                    aHp += gp_r * rnx * w
                if flags[3]:
                    t2 = g * complex(3.0 - kr * kr, -3.0 * kr) / (r2 * r2)
                    aE -= (gp_r * nxny + t2 * rnx * rny) * w
            if flags[4]:
                aOne += w
        out[0, it] += aG
        out[1, it] += aH
        out[2, it] += aHp
        out[3, it] += aE
        out[4, it] += aOne


def _accumulate(out, which, k, targets, target_normals, panels, normals, rows, cols, items, box, n):
    if not USE_COMPILED:
        return _accumulate_numpy(out, which, k, targets, target_normals, panels, normals,
                                 rows, cols, items, box, n)
    su, sv, sw = _tensor01(n)
    flags = np.zeros(5, dtype=np.bool_)
    for name in which:
        flags[_KERNEL_SLOTS[name]] = True
    acc = np.zeros((5, len(out[which[0]])), dtype=complex)
    tn = targets if target_normals is None else target_normals
    u0, u1, v0, v1 = (np.ascontiguousarray(b, dtype=float) for b in box)
    _accumulate_compiled(acc, flags, float(k), targets, tn, panels.p0, panels.a, panels.b, panels.c,
                         panels.n0, panels.n1, panels.n2, normals, rows, cols,
                         np.ascontiguousarray(items, dtype=np.intp), u0, u1, v0, v1, su, sv, sw)
    for name in which:
        out[name] += acc[_KERNEL_SLOTS[name]]


def integrate_panel(kernel: str, k: float, x, verts, normal, budget: QuadratureBudget = DEFAULT_BUDGET,
                    n_x=None) -> complex:
    """Integrate one kernel (``"G"``, ``"H"``, ``"Hp"``, ``"E"`` or ``"one"``) over one panel."""
    verts = np.asarray(verts, dtype=float)
    if len(verts) == 3:
        verts = np.vstack([verts, verts[2:3]])
    x = np.asarray(x, dtype=float)[None, :]
    nx = None if n_x is None else np.asarray(n_x, dtype=float)[None, :]
    vals, _ = integrate_pairs(x, nx, verts[None], np.asarray(normal, dtype=float)[None],
                              [0], [0], k, (kernel,), budget)
    return complex(vals[kernel][0])


# ---------------------------------------------------------------------------
# Self panels
# ---------------------------------------------------------------------------


def _planar_polygon(verts, nverts):
    poly = np.asarray(verts, dtype=float)[:nverts]
    c = np.cross(poly[1] - poly[0], poly[2] - poly[0])
    n = c / np.linalg.norm(c)
    if nverts == 4:
        scale = max(np.linalg.norm(poly[1] - poly[0]), np.linalg.norm(poly[3] - poly[0]))
        if abs(np.dot(poly[3] - poly[0], n)) > 1e-10 * scale:
            raise NonPlanarElementError("self-panel integration needs a flat element")
    return poly, n


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    if len(poly) == 3:
        return poly.mean(axis=0)
    a1 = np.linalg.norm(np.cross(poly[1] - poly[0], poly[2] - poly[0]))
    a2 = np.linalg.norm(np.cross(poly[2] - poly[0], poly[3] - poly[0]))
    return (a1 * (poly[0] + poly[1] + poly[2]) + a2 * (poly[0] + poly[2] + poly[3])) / (3 * (a1 + a2))


def _g_dynamic(z):
    """(exp(iz)(1 - iz) - 1) / z**2, stable near z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 0.2
    zs = z[small]
    acc = np.zeros(zs.shape, dtype=complex)
    term_i = 1.0 + 0j
    for m in range(2, 16):
        # coefficient (1 - m)/m! * i**m * z**(m-2)
        acc += (1 - m) / math.factorial(m) * (1j ** m) * zs ** (m - 2)
    out[small] = acc
    zl = z[~small]
    out[~small] = (np.exp(1j * zl) * (1 - 1j * zl) - 1.0) / zl ** 2
    return out


def _polar_rule(poly, x, k, tol):
    """Polar nodes around ``x``: returns rho(v), u-nodes, weights, triangle areas."""
    pieces = []
    nv = len(poly)
    for a_i in range(nv):
        a, b = poly[a_i], poly[(a_i + 1) % nv]
        edge = b - a
        ell = np.linalg.norm(edge)
        if ell == 0:
            continue
        p = np.linalg.norm(np.cross(a - x, edge)) / ell
        m = max(1, math.ceil(ell / (2.0 * p)))
        beta = 2.0 * m * p / ell
        rho_b = beta + math.sqrt(beta * beta + 1.0)
        n_v = max(4, math.ceil(math.log(1e3 / tol) / (2.0 * math.log(rho_b))))
        for j in range(m):
            pa = a + edge * (j / m)
            pb = a + edge * ((j + 1) / m)
            pieces.append((pa, pb, n_v))
    return pieces


def _self_integral(poly, x, k, tol, F):
    """(1/4pi) * sum over fan triangles of 2A * int int F(k u rho) / rho du dv."""
    diam = max(np.linalg.norm(p - q) for p in poly for q in poly)
    n_u = 6
    while n_u < 40 and np.exp(_oscillation_bound(np.array(abs(k) * diam), n_u)) > tol * 1e-2:
        n_u += 1
    su, wu = gauss01(n_u)
    total = 0j
    for pa, pb, n_v in _polar_rule(poly, x, k, tol):
        sv, wv = gauss01(n_v)
        two_area = np.linalg.norm(np.cross(pa - x, pb - pa))
        pts = (pa - x)[None, :] + sv[:, None] * (pb - pa)[None, :]
        rho = np.linalg.norm(pts, axis=1)
        z = k * np.outer(su, rho)
        vals = F(z) / rho[None, :]
        total += two_area * np.sum(wu[:, None] * wv[None, :] * vals)
    return total / FOUR_PI


def integrate_selfpanel_weak(k: float, verts, nverts: int | None = None,
                             budget: QuadratureBudget = DEFAULT_BUDGET) -> complex:
    """Integral of G over a flat element from its own centroid."""
    verts = np.asarray(verts, dtype=float)
    nverts = len(verts) if nverts is None else nverts
    poly, _ = _planar_polygon(verts, nverts)
    x = polygon_centroid(poly)
    return _self_integral(poly, x, k, budget.tol, lambda z: np.exp(1j * z))


def static_hyper_finite_part(verts, nverts: int | None = None, x=None) -> float:
    """Hadamard finite part of the integral of 1/(4 pi r^3) over a flat polygon.

    In polar coordinates around ``x`` the finite part equals
    -(1/4pi) * integral of dtheta / R(theta), which for a straight edge at
    distance p integrates to (sin theta_b - sin theta_a) / p.
    """
    verts = np.asarray(verts, dtype=float)
    nverts = len(verts) if nverts is None else nverts
    poly, _ = _planar_polygon(verts, nverts)
    x = polygon_centroid(poly) if x is None else np.asarray(x, dtype=float)
    acc = 0.0
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        edge = b - a
        ell = np.linalg.norm(edge)
        if ell == 0:
            continue
        t_hat = edge / ell
        ta = np.dot(a - x, t_hat)
        tb = np.dot(b - x, t_hat)
        p = np.linalg.norm((a - x) - ta * t_hat)
        acc += (tb / np.linalg.norm(b - x) - ta / np.linalg.norm(a - x)) / p
    return -acc / FOUR_PI


def integrate_selfpanel_hyper(k: float, verts, nverts: int | None = None,
                              budget: QuadratureBudget = DEFAULT_BUDGET) -> complex:
    """Finite-part integral of E over a flat element from its own centroid."""
    verts = np.asarray(verts, dtype=float)
    nverts = len(verts) if nverts is None else nverts
    poly, _ = _planar_polygon(verts, nverts)
    x = polygon_centroid(poly)
    static = static_hyper_finite_part(poly, len(poly), x)
    if k == 0:
        return complex(static)
    dynamic = _self_integral(poly, x, k, budget.tol, lambda z: k * k * _g_dynamic(z))
    return complex(static) + dynamic


def self_panel_values(k: float, verts, nverts, which=("G", "E"),
                      budget: QuadratureBudget = DEFAULT_BUDGET) -> dict[str, np.ndarray]:
    """Self-panel integrals for many elements, cached on element shape.

    H and H' vanish identically on flat elements and are returned as zeros.
    """
    n = len(verts)
    out = {name: np.zeros(n, dtype=complex) for name in which}
    cache: dict[tuple, dict[str, complex]] = {}
    for i in range(n):
        nv = int(nverts[i])
        poly = verts[i, :nv]
        key = (nv,) + tuple(np.round([np.linalg.norm(poly[a] - poly[b])
                                      for a in range(nv) for b in range(a + 1, nv)], 13))
        vals = cache.get(key)
        if vals is None:
            vals = {}
            if "G" in which:
                vals["G"] = integrate_selfpanel_weak(k, poly, nv, budget)
            if "E" in which:
                vals["E"] = integrate_selfpanel_hyper(k, poly, nv, budget)
            cache[key] = vals
        for name in which:
            if name in vals:
                out[name][i] = vals[name]
    return out
