"""Dense collocation systems for surface and thin (mid-face) elements.

Time dependence is exp(+i omega t): pressure is p = -i omega rho phi and a
wave travelling towards +x reads exp(-ikx).  The matching outgoing Green's
function is exp(-ikr)/(4 pi r), so the kernels are evaluated with the
wavenumber ``-k`` (see ``WaveContext.green_k``).

Thin elements carry one shared normal n pointing to the positive side.
With v = dphi/dn on each side and Robin data v = v0 + alpha phi,

    dphi = phi+ - phi-,  phibar = phi+ + phi-,
    dv   = dv0 + (dalpha phibar + abar dphi) / 2,
    vbar = vbar0 + (abar phibar + dalpha dphi) / 2,

the value equation (rows on admittance elements only) is

    phibar/2 - int H dphi + int G dv = 0

and the normal-derivative equation (rows on every element) is

    vbar/2 - int E dphi + int H' dv = 0.

Unknowns are dphi on every element followed by phibar on the admittance
elements.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import DuctMesh, ElementKind
from .quadrature import DEFAULT_BUDGET, QuadratureBudget, integrate_pairs, self_panel_values

# pairs handed to the quadrature per call; bounds peak memory
BLOCK_PAIRS = 200_000


@dataclass(frozen=True)
class WaveContext:
    f: float
    c: float = 340.0
    rho: float = 1.3

    def __post_init__(self):
        if not (self.f > 0 and self.c > 0 and self.rho > 0):
            raise ValueError("frequency, sound speed and density must be positive")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f

    @property
    def k(self) -> float:
        return self.omega / self.c

    @property
    def green_k(self) -> float:
        """Wavenumber passed to the kernels: outgoing waves under exp(+i omega t)."""
        return -self.k

    @property
    def rho_c(self) -> float:
        return self.rho * self.c

    def pressure(self, phi):
        return -1j * self.omega * self.rho * np.asarray(phi)


def impedance_to_scaled_admittance(Z: complex, ctx: WaveContext) -> complex:
    """Scaled admittance alpha with v = alpha phi for a surface impedance Z = p/v."""
    if Z == 0:
        raise ZeroDivisionError("zero impedance has no finite admittance")
    if isinstance(Z, (int, float)) and math.isinf(Z):
        return 0j
    return -1j * ctx.omega * ctx.rho / complex(Z)


class UnknownRole(str, enum.Enum):
    DPHI = "dphi"
    PHIBAR = "phibar"
    PHI = "phi"


@dataclass
class BoundarySystem:
    A: np.ndarray
    b: np.ndarray
    layout: list[tuple[int, UnknownRole]]
    mesh: DuctMesh
    ctx: WaveContext
    tau: int | None = None          # surface systems only
    unconverged: int = 0            # sub-panels that hit the subdivision limit

    @property
    def size(self) -> int:
        return len(self.b)

    def columns(self, role: UnknownRole) -> tuple[np.ndarray, np.ndarray]:
        """Element ids and column indices of one unknown role."""
        ids = [(e, c) for c, (e, r) in enumerate(self.layout) if r is role]
        if not ids:
            return np.zeros(0, int), np.zeros(0, int)
        e, c = zip(*ids)
        return np.array(e), np.array(c)


@dataclass
class SolutionField:
    """Boundary unknowns after a solve.

    Thin meshes fill ``dphi`` and, where known, ``phibar`` (NaN elsewhere
    until ``recover_phi_bar`` is called).  Surface meshes fill ``phi`` and
    ``v`` on the side facing the domain.
    """

    mesh: DuctMesh
    ctx: WaveContext
    dphi: np.ndarray | None = None
    phibar: np.ndarray | None = None
    phi: np.ndarray | None = None
    v: np.ndarray | None = None
    tau: int | None = None
    residual: float = float("nan")
    condition: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def is_thin(self) -> bool:
        return self.dphi is not None

    @property
    def phi_plus(self) -> np.ndarray:
        return 0.5 * (self.phibar + self.dphi)

    @property
    def phi_minus(self) -> np.ndarray:
        return 0.5 * (self.phibar - self.dphi)

    def side_velocity(self, side: str) -> np.ndarray:
        vp, vm, ap, am = self.mesh.subset_bc_arrays()
        if side == "+":
            return vp + ap * np.nan_to_num(self.phi_plus)
        return vm + am * np.nan_to_num(self.phi_minus)

    def dv(self) -> np.ndarray:
        """Velocity jump; needs phibar only where an admittance is present."""
        vp, vm, ap, am = self.mesh.subset_bc_arrays()
        abar, dal = ap + am, ap - am
        pb = np.where(dal != 0, self.phibar, 0.0)
        return (vp - vm) + 0.5 * (dal * pb + abar * self.dphi)


# ---------------------------------------------------------------------------
# Operator blocks
# ---------------------------------------------------------------------------


def _operator_block(mesh: DuctMesh, k: float, rows, cols, which, budget, self_vals):
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    R = np.repeat(rows, len(cols))
    C = np.tile(cols, len(rows))
    off = R != C
    vals, bad = integrate_pairs(mesh.centroids, mesh.normals, mesh.verts, mesh.normals,
                                R[off], C[off], k, which, budget)
    out = {}
    for name in which:
        blk = np.zeros(R.size, dtype=complex)
        blk[off] = vals[name]
        if name in self_vals:
            blk[~off] = self_vals[name][R[~off]]
        out[name] = blk.reshape(len(rows), len(cols))
    return out, bad


def _row_blocks(rows: np.ndarray, ncols: int):
    step = max(1, BLOCK_PAIRS // max(ncols, 1))
    for s in range(0, len(rows), step):
        yield rows[s:s + step]


def operator_rows(mesh: DuctMesh, ctx: WaveContext, rows, cols, which,
                  budget: QuadratureBudget = DEFAULT_BUDGET) -> dict[str, np.ndarray]:
    """Dense kernel integrals K[rows, cols], self panels included."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    k = ctx.green_k
    need_self = np.intersect1d(rows, cols)
    self_vals = _self_terms(mesh, k, need_self, which, budget)
    out = {name: np.zeros((len(rows), len(cols)), dtype=complex) for name in which}
    s = 0
    for blk_rows in _row_blocks(rows, len(cols)):
        blk, _ = _operator_block(mesh, k, blk_rows, cols, which, budget, self_vals)
        for name in which:
            out[name][s:s + len(blk_rows)] = blk[name]
        s += len(blk_rows)
    return out


def _self_terms(mesh, k, ids, which, budget):
    full = {name: np.zeros(mesh.n, dtype=complex) for name in which}
    want = tuple(name for name in which if name in ("G", "E"))
    ids = np.asarray(ids, dtype=np.intp)
    if want and len(ids):
        vals = self_panel_values(k, mesh.verts[ids], mesh.nverts[ids], want, budget)
        for name in want:
            full[name][ids] = vals[name]
    return full


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------


def assemble_surface(mesh: DuctMesh, ctx: WaveContext, tau: int = -1,
                     budget: QuadratureBudget = DEFAULT_BUDGET) -> BoundarySystem:
    """Collocation system for phi on surface elements, v = v0 + alpha phi eliminated.

    Row i reads  phi_i/2 - tau sum_j (H_ij - G_ij alpha_j) phi_j = -tau sum_j G_ij v0_j.
    ``tau = -1`` solves the interior problem using the minus-side data.
    """
    if mesh.kind is not ElementKind.SURFACE:
        raise ValueError("assemble_surface needs a mesh of surface elements")
    if tau not in (-1, 1):
        raise ValueError("tau must be +1 or -1")
    n = mesh.n
    if n == 0:
        raise ValueError("empty mesh")
    vp, vm, ap, am = mesh.subset_bc_arrays()
    v0, alpha = (vm, am) if tau == -1 else (vp, ap)
    src = np.flatnonzero((v0 != 0) | (alpha != 0))
    k = ctx.green_k
    self_vals = _self_terms(mesh, k, np.arange(n), ("G",), budget)
    A = np.zeros((n, n), dtype=complex)
    b = np.zeros(n, dtype=complex)
    allc = np.arange(n)
    bad = 0
    for rows in _row_blocks(allc, n):
        blk, nb = _operator_block(mesh, k, rows, allc, ("H",), budget, self_vals)
        bad += nb
        A[rows] = -tau * blk["H"]
        if len(src):
            g, nb = _operator_block(mesh, k, rows, src, ("G",), budget, self_vals)
            bad += nb
            A[rows[:, None], src] += tau * g["G"] * alpha[src]
            b[rows] = -tau * (g["G"] @ v0[src])
    A[allc, allc] += 0.5
    layout = [(i, UnknownRole.PHI) for i in range(n)]
    return BoundarySystem(A, b, layout, mesh, ctx, tau=tau, unconverged=bad)


def _thin_bc(mesh: DuctMesh):
    vp, vm, ap, am = mesh.subset_bc_arrays()
    return vp - vm, vp + vm, ap - am, ap + am


def assemble_thin(mesh: DuctMesh, ctx: WaveContext,
                  budget: QuadratureBudget = DEFAULT_BUDGET) -> BoundarySystem:
    """Block system in (dphi on all elements, phibar on admittance elements)."""
    if mesh.kind is not ElementKind.THIN:
        raise ValueError("assemble_thin needs a mesh of thin elements")
    n = mesh.n
    if n == 0:
        raise ValueError("empty mesh")
    dv0, vbar0, dal, abar = _thin_bc(mesh)
    adm = np.flatnonzero((dal != 0) | (abar != 0))
    na = len(adm)
    nu = n + na
    col_pb = np.full(n, -1)
    col_pb[adm] = n + np.arange(na)
    # columns whose velocity jump is non-zero: they need G and H'
    src = np.flatnonzero((dv0 != 0) | (dal != 0) | (abar != 0))
    src_adm = np.flatnonzero(col_pb[src] >= 0)
    k = ctx.green_k
    self_vals = _self_terms(mesh, k, np.arange(n), ("G", "E"), budget)
    self_vals["Hp"] = np.zeros(n, dtype=complex)
    self_vals["H"] = np.zeros(n, dtype=complex)

    A = np.zeros((nu, nu), dtype=complex)
    b = np.zeros(nu, dtype=complex)
    allc = np.arange(n)
    bad = 0

    def velocity_jump_terms(op, rows_out, rows_b):
        # op: kernel integrals over src columns, coupling to dv
        A[rows_out[:, None], src] += 0.5 * op * abar[src]
        if len(src_adm):
            A[rows_out[:, None], col_pb[src[src_adm]]] += 0.5 * op[:, src_adm] * dal[src[src_adm]]
        b[rows_b] -= op @ dv0[src]

    # normal-derivative rows
    for rows in _row_blocks(allc, n):
        blk, nb = _operator_block(mesh, k, rows, allc, ("E",), budget, self_vals)
        bad += nb
        A[rows, :n] = -blk["E"]
        b[rows] = -0.5 * vbar0[rows]
        if len(src):
            hp, nb = _operator_block(mesh, k, rows, src, ("Hp",), budget, self_vals)
            bad += nb
            velocity_jump_terms(hp["Hp"], rows, rows)
    A[allc, allc] += 0.25 * dal
    A[adm, col_pb[adm]] += 0.25 * abar[adm]

    # value rows on admittance elements
    for rows in _row_blocks(adm, n):
        out = col_pb[rows]
        blk, nb = _operator_block(mesh, k, rows, allc, ("H",), budget, self_vals)
        bad += nb
        A[out, :n] = -blk["H"]
        g, nb = _operator_block(mesh, k, rows, src, ("G",), budget, self_vals)
        bad += nb
        velocity_jump_terms(g["G"], out, out)
        A[out, out] += 0.5

    layout = [(i, UnknownRole.DPHI) for i in range(n)] + [(int(i), UnknownRole.PHIBAR) for i in adm]
    assert len(layout) == nu == A.shape[0]
    return BoundarySystem(A, b, layout, mesh, ctx, unconverged=bad)


def recover_phi_bar(mesh: DuctMesh, ctx: WaveContext, solution: SolutionField, elements=None,
                    budget: QuadratureBudget = DEFAULT_BUDGET) -> np.ndarray:
    """phibar = 2 (int H dphi - int G dv) at the collocation points of ``elements``.

    Defaults to every element without a solved phibar.  The values are also
    stored in ``solution.phibar``.
    """
    if solution.dphi is None or solution.phibar is None:
        raise ValueError("recovery needs a thin-element solution")
    dv0, _, dal, abar = _thin_bc(mesh)
    adm = (dal != 0) | (abar != 0)
    if np.any(np.isnan(solution.phibar[adm])):
        raise ValueError("phibar on the admittance elements is missing")
    if elements is None:
        elements = np.flatnonzero(np.isnan(solution.phibar))
    elements = np.asarray(elements, dtype=np.intp)
    dv = solution.dv()
    src = np.flatnonzero(dv != 0)
    ops = operator_rows(mesh, ctx, elements, np.arange(mesh.n), ("H",), budget)
    val = 2.0 * (ops["H"] @ solution.dphi)
    if len(src):
        g = operator_rows(mesh, ctx, elements, src, ("G",), budget)["G"]
        val -= 2.0 * (g @ dv[src])
    solution.phibar[elements] = val
    return val


def write_system(system: BoundarySystem, path) -> tuple[Path, Path]:
    """Dump A (row-major complex128) and b, with a text sidecar describing the layout."""
    path = Path(path)
    matrix = path.with_suffix(".bin")
    sidecar = path.with_suffix(".layout.txt")
    with open(matrix, "wb") as fh:
        np.ascontiguousarray(system.A, dtype=np.complex128).tofile(fh)
        np.ascontiguousarray(system.b, dtype=np.complex128).tofile(fh)
    with open(sidecar, "w") as fh:
        fh.write(f"# size {system.size} complex128 row-major, matrix then rhs\n")
        fh.write("column,element,role\n")
        for c, (e, role) in enumerate(system.layout):
            fh.write(f"{c},{e},{role.value}\n")
    return matrix, sidecar
