"""Dense solve and field evaluation by the representation formula."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import lapack
from scipy.spatial import cKDTree

from .assembly import BoundarySystem, SolutionField, UnknownRole, WaveContext
from .mesh import DuctMesh
from .quadrature import DEFAULT_BUDGET, QuadratureBudget, integrate_pairs

MIN_DISTANCE = 1e-6
RESIDUAL_TOL = 1e-10
BLOCK_PAIRS = 200_000


class SolveError(RuntimeError):
    def __init__(self, message: str, condition: float = float("nan")):
        super().__init__(message)
        self.condition = condition


class ImpedanceWarning(RuntimeWarning):
    pass


def solve_dense(A: np.ndarray, b: np.ndarray):
    """LU solve returning ``(x, 1-norm condition estimate, lu, piv)``; ``A`` is kept."""
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = lapack.zgetrf(np.asarray(A, dtype=complex))
    if info > 0:
        raise SolveError("matrix is exactly singular", float("inf"))
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else float("inf")
    x = linalg.lu_solve((lu, piv), b)
    return x, cond, lu, piv


def solve(system: BoundarySystem) -> SolutionField:
    """Factor and solve; the relative residual is checked against 1e-10."""
    A, b = system.A, system.b
    if A.shape != (len(b), len(b)):
        raise ValueError("system matrix must be square and match the right-hand side")
    x, cond, _, _ = solve_dense(A, b)
    bnorm = np.linalg.norm(b)
    residual = float(np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0))
    if not np.all(np.isfinite(x)):
        raise SolveError("solution is not finite", cond)
    if residual > RESIDUAL_TOL:
        raise SolveError(f"relative residual {residual:.2e} exceeds {RESIDUAL_TOL:g}", cond)

    mesh = system.mesh
    sol = SolutionField(mesh, system.ctx, residual=residual, condition=cond, tau=system.tau)
    roles = [r for _, r in system.layout]
    if UnknownRole.PHI in roles:
        sol.phi = np.asarray(x[: mesh.n])
        vp, vm, ap, am = mesh.subset_bc_arrays()
        v0, alpha = (vm, am) if system.tau == -1 else (vp, ap)
        sol.v = v0 + alpha * sol.phi
    else:
        e_d, c_d = system.columns(UnknownRole.DPHI)
        e_b, c_b = system.columns(UnknownRole.PHIBAR)
        sol.dphi = np.zeros(mesh.n, dtype=complex)
        sol.dphi[e_d] = x[c_d]
        sol.phibar = np.full(mesh.n, np.nan + 0j)
        sol.phibar[e_b] = x[c_b]
    return sol


# ---------------------------------------------------------------------------
# Representation formula
# ---------------------------------------------------------------------------


def point_panel_distance(points: np.ndarray, mesh: DuctMesh, cutoff: float = np.inf) -> np.ndarray:
    """Distance from each point to the nearest element (flat panels).

    Only panels whose centroid lies within ``cutoff`` plus the panel diameter
    are examined; farther points report ``inf``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full(len(points), np.inf)
    if np.isfinite(cutoff):
        tree = cKDTree(mesh.centroids)
        near = tree.query_ball_point(points, cutoff + mesh.diameters.max())
        candidates = sorted({j for js in near for j in js})
    else:
        candidates = range(mesh.n)
    for i in candidates:
        nv = int(mesh.nverts[i])
        tris = [(0, 1, 2)] if nv == 3 else [(0, 1, 2), (0, 2, 3)]
        for t in tris:
            d = _point_triangle_distance(points, *(mesh.verts[i, j] for j in t))
            out = np.minimum(out, d)
    return out


def _point_triangle_distance(p, a, b, c):
    # Ericson, Real-Time Collision Detection, closest point on triangle
    ab, ac = b - a, c - a
    ap = p - a
    d1, d2 = ap @ ab, ap @ ac
    bp = p - b
    d3, d4 = bp @ ab, bp @ ac
    cp = p - c
    d5, d6 = cp @ ab, cp @ ac
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        q = a + v[:, None] * ab + w[:, None] * ac
        # region tests, last assignment wins so order from general to specific
        t_ab = d1 / (d1 - d3)
        q = np.where(((vc <= 0) & (d1 >= 0) & (d3 <= 0))[:, None], a + t_ab[:, None] * ab, q)
        t_ac = d2 / (d2 - d6)
        q = np.where(((vb <= 0) & (d2 >= 0) & (d6 <= 0))[:, None], a + t_ac[:, None] * ac, q)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        q = np.where(((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0))[:, None],
                     b + t_bc[:, None] * (c - b), q)
    q = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, q)
    q = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, q)
    q = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, q)
    return np.linalg.norm(p - q, axis=1)


def _check_points(points, mesh, min_distance):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = point_panel_distance(points, mesh, cutoff=min_distance)
    if np.any(d < min_distance):
        bad = int(np.argmin(d))
        raise ValueError(f"evaluation point {points[bad]} lies {d[bad]:.2e} m from the boundary")
    return points


def _densities(solution: SolutionField):
    """(double-layer density, single-layer density, sign) for the representation formula."""
    if solution.is_thin:
        return solution.dphi, solution.dv(), 1.0
    if solution.tau is None:
        raise ValueError("surface solution lacks its tau")
    return solution.phi, solution.v, float(solution.tau)


def _field(solution: SolutionField, points, directions, budget, min_distance):
    mesh = solution.mesh
    points = _check_points(points, mesh, min_distance)
    mu, sigma, sign = _densities(solution)
    if directions is None:
        dl, sl, nx = "H", "G", None
    else:
        dl, sl = "E", "Hp"
        nx = np.broadcast_to(np.asarray(directions, dtype=float), points.shape).copy()
        nx /= np.linalg.norm(nx, axis=1, keepdims=True)
    k = solution.ctx.green_k
    cols_mu = np.flatnonzero(mu != 0)
    cols_sigma = np.flatnonzero(sigma != 0)
    out = np.zeros(len(points), dtype=complex)
    step = max(1, BLOCK_PAIRS // max(mesh.n, 1))
    for s in range(0, len(points), step):
        pts = np.arange(s, min(s + step, len(points)))
        for cols, name, dens, sgn in ((cols_mu, dl, mu, 1.0), (cols_sigma, sl, sigma, -1.0)):
            if len(cols) == 0:
                continue
            R = np.repeat(pts, len(cols))
            C = np.tile(cols, len(pts))
            vals, _ = integrate_pairs(points, nx, mesh.verts, mesh.normals, R, C, k, (name,), budget)
            out[pts] += sgn * (vals[name].reshape(len(pts), len(cols)) @ dens[cols])
    return sign * out


def evaluate_potential(mesh: DuctMesh, solution: SolutionField, ctx: WaveContext, points,
                       budget: QuadratureBudget = DEFAULT_BUDGET,
                       min_distance: float = MIN_DISTANCE) -> np.ndarray:
    """phi = int H mu - int G sigma, with (mu, sigma) = (dphi, dv) for thin elements.

    Surface solutions use (phi, v) and the factor tau of the solved problem.
    """
    _check_same(mesh, solution, ctx)
    return _field(solution, points, None, budget, min_distance)


def evaluate_velocity(mesh: DuctMesh, solution: SolutionField, ctx: WaveContext, points, direction,
                      budget: QuadratureBudget = DEFAULT_BUDGET,
                      min_distance: float = MIN_DISTANCE) -> np.ndarray:
    """Directional derivative of the potential along ``direction`` (one or per point)."""
    _check_same(mesh, solution, ctx)
    return _field(solution, points, direction, budget, min_distance)


def _check_same(mesh, solution, ctx):
    if solution.mesh is not mesh and solution.mesh.n != mesh.n:
        raise ValueError("solution belongs to a different mesh")
    if solution.ctx != ctx:
        raise ValueError("solution was computed for a different wave context")


def mean_impedance(pressures, velocities, rho_c: float | None = None, min_velocity: float = 1e-12):
    """Mean of the pointwise ratios p/v; scaled by 1/(rho c) when ``rho_c`` is given.

    Points with |v| below ``min_velocity`` are dropped with a warning.
    """
    p = np.atleast_1d(np.asarray(pressures, dtype=complex))
    v = np.atleast_1d(np.asarray(velocities, dtype=complex))
    if p.shape != v.shape or p.size == 0:
        raise ValueError("need matching, non-empty pressure and velocity arrays")
    keep = np.abs(v) >= min_velocity
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        warnings.warn(f"{dropped} points with near-zero velocity excluded", ImpedanceWarning, stacklevel=2)
    if not np.any(keep):
        raise ValueError("every velocity is below the threshold")
    Z = complex(np.mean(p[keep] / v[keep]))
    return Z / rho_c if rho_c else Z


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass
class EvaluationGrid:
    points: np.ndarray
    phi: np.ndarray | None = None
    p: np.ndarray | None = None
    v: np.ndarray | None = None
    direction: np.ndarray | None = None

    def evaluate(self, mesh: DuctMesh, solution: SolutionField, ctx: WaveContext,
                 direction=None, budget: QuadratureBudget = DEFAULT_BUDGET) -> "EvaluationGrid":
        self.phi = evaluate_potential(mesh, solution, ctx, self.points, budget)
        self.p = ctx.pressure(self.phi)
        if direction is not None:
            self.direction = np.asarray(direction, dtype=float)
            self.v = evaluate_velocity(mesh, solution, ctx, self.points, direction, budget)
        return self


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_grid_csv(grid: EvaluationGrid, path) -> None:
    n = len(grid.points)
    nan = np.full(n, np.nan + 0j)
    phi = grid.phi if grid.phi is not None else nan
    p = grid.p if grid.p is not None else nan
    v = grid.v if grid.v is not None else nan
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "re_phi", "im_phi", "re_p", "im_p", "re_v", "im_v"])
        for i in range(n):
            w.writerow([_g17(c) for c in grid.points[i]] + [
                _g17(phi[i].real), _g17(phi[i].imag), _g17(p[i].real), _g17(p[i].imag),
                _g17(v[i].real), _g17(v[i].imag)])
