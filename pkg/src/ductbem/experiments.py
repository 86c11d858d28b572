"""Drivers for the closed-duct benchmark, the radiation-impedance sweep and
the resonance search of an open tube.

Each driver takes an ``ExperimentConfig``, returns its results in memory
and, given an output directory, writes CSV files plus a ``summary.json``.
Frequencies are independent and can be spread over worker processes
(``DUCTBEM_THREADS``).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import ErrorSeries, duct_1d_solution, error_series, unflanged_radiation_impedance
from .assembly import (SolutionField, WaveContext, assemble_surface, assemble_thin,
                       impedance_to_scaled_admittance, recover_phi_bar)
from .config import ConfigError, ExperimentConfig
from .mesh import BoundaryCondition, Closure, DuctMesh, ElementKind, Region, build_duct, wall_line
from .solve import (EvaluationGrid, evaluate_potential, evaluate_velocity, mean_impedance, point_panel_distance,
                    solve, write_grid_csv)

P_REF = 2e-5


def worker_count() -> int:
    try:
        n = int(os.environ.get("DUCTBEM_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, min(n, os.cpu_count() or 1))


def _map_frequencies(func, cfg, freqs):
    workers = min(worker_count(), len(freqs))
    if workers <= 1:
        return [func(cfg, f) for f in freqs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, [cfg] * len(freqs), freqs))


def wave_context(cfg: ExperimentConfig, f: float) -> WaveContext:
    return WaveContext(float(f), c=cfg.c, rho=cfg.rho)


def build_geometry(cfg: ExperimentConfig) -> DuctMesh:
    return build_duct(cfg.duct, cfg.element_kind)


def solve_mesh(mesh: DuctMesh, ctx: WaveContext) -> SolutionField:
    if mesh.kind is ElementKind.THIN:
        return solve(assemble_thin(mesh, ctx))
    return solve(assemble_surface(mesh, ctx, tau=-1))


def _tag(f: float) -> str:
    return f"{f:g}hz"


def _g(x) -> str:
    return format(float(x), ".17g")


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) for v in row])


def _write_summary(outdir: Path, payload: dict):
    with open(outdir / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Closed duct
# ---------------------------------------------------------------------------


def closed_duct_bcs(cfg: ExperimentConfig, ctx: WaveContext):
    """Inflow v0 on the interior side of the source closure, Z on the end closure.

    Normals point out of the duct, so the interior is the minus side and an
    inflow along +x is dphi/dn = +v0 on the source closure.
    """
    alpha = impedance_to_scaled_admittance(cfg.end_impedance * ctx.rho_c, ctx)
    return {
        Region.SOURCE: BoundaryCondition.velocity(0.0, cfg.v0),
        Region.END: BoundaryCondition.admittance(0.0, alpha),
    }


def analytic_reference(cfg: ExperimentConfig, ctx: WaveContext):
    # the 1D velocity is dphi/dx = -dphi/dn on the source closure
    return duct_1d_solution(ctx, cfg.duct.length, -cfg.v0, cfg.end_impedance * ctx.rho_c)


def interior_values(mesh: DuctMesh, sol: SolutionField, ids, ctx: WaveContext):
    """(interior phi, exterior phi or None) at the collocation points ``ids``."""
    ids = np.asarray(ids, dtype=np.intp)
    if sol.is_thin:
        missing = ids[np.isnan(sol.phibar[ids])]
        if len(missing):
            recover_phi_bar(mesh, ctx, sol, missing)
        return sol.phi_minus[ids], sol.phi_plus[ids]
    return sol.phi[ids], None


def _half_extent(cfg: ExperimentConfig) -> float:
    d = cfg.duct
    return d.width / 2 if d.cross_section == "square" else d.radius


def closed_duct_grids(cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """Interior mid-plane, cross-plane and exterior evaluation points."""
    L, a = cfg.duct.length, _half_extent(cfg)
    out = {}
    for name in cfg.grids:
        if name == "midplane":
            x = np.linspace(0.05 * L, 0.95 * L, 86)
            y = np.linspace(-0.75 * a, 0.75 * a, 7)
            X, Y = np.meshgrid(x, y, indexing="ij")
            out[name] = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
        elif name == "cross":
            s = np.linspace(-0.9 * a, 0.9 * a, 16)
            Y, Z = np.meshgrid(s, s, indexing="ij")
            yz = np.column_stack([Y.ravel(), Z.ravel()])
            if cfg.duct.cross_section == "circle":
                yz = yz[np.hypot(yz[:, 0], yz[:, 1]) <= 0.9 * a]
            for frac, label in ((1 / 3, "cross_l3"), (1 / 2, "cross_l2"), (2 / 3, "cross_2l3")):
                out[label] = np.column_stack([np.full(len(yz), frac * L), yz])
        elif name == "exterior":
            x = np.linspace(0.0, L, 35)
            out[name] = np.column_stack([x, np.full(x.size, -(a + 0.2)), np.zeros(x.size)])
        else:
            raise ConfigError(f"unknown evaluation grid {name!r}")
    return out


@dataclass
class ClosedDuctFrequency:
    f: float
    k: float
    x: np.ndarray                 # wall-line collocation x
    phi: np.ndarray               # interior side
    phi_plus: np.ndarray | None   # exterior side (thin elements)
    phi_a: np.ndarray
    errors: ErrorSeries
    end_points: np.ndarray
    end_phi: np.ndarray
    n_unknowns: int
    residual: float
    condition: float
    grids: dict[str, EvaluationGrid] = field(default_factory=dict)


def closed_duct_frequency(cfg: ExperimentConfig, f: float) -> ClosedDuctFrequency:
    ctx = wave_context(cfg, f)
    mesh = build_geometry(cfg).with_bcs(closed_duct_bcs(cfg, ctx))
    sol = solve_mesh(mesh, ctx)
    line = wall_line(mesh, cfg.wall_azimuth)
    phi, phi_plus = interior_values(mesh, sol, line, ctx)
    end = mesh.indices(Region.END)
    end_phi, _ = interior_values(mesh, sol, end, ctx)
    x = mesh.centroids[line, 0]
    phi_a = analytic_reference(cfg, ctx).phi(x)
    grids = {}
    for name, pts in closed_duct_grids(cfg).items():
        grids[name] = EvaluationGrid(pts).evaluate(mesh, sol, ctx, direction=[1.0, 0.0, 0.0])
    n_u = mesh.n + (len(end) if mesh.kind is ElementKind.THIN else 0)
    return ClosedDuctFrequency(
        f=float(f), k=ctx.k, x=x, phi=phi, phi_plus=phi_plus, phi_a=phi_a,
        errors=error_series(phi, phi_a), end_points=mesh.centroids[end], end_phi=end_phi,
        n_unknowns=n_u, residual=sol.residual, condition=sol.condition, grids=grids,
    )


def run_closed_duct(cfg: ExperimentConfig, outdir=None) -> list[ClosedDuctFrequency]:
    if cfg.kind != "closed-duct":
        raise ConfigError("config is not a closed-duct experiment")
    if Closure.OPEN in (cfg.duct.closure_start, cfg.duct.closure_end):
        raise ConfigError("a closed-duct experiment needs both closures")
    results = _map_frequencies(closed_duct_frequency, cfg, cfg.frequencies.frequencies())
    if outdir is not None:
        write_closed_duct(cfg, results, Path(outdir))
    return results


def write_closed_duct(cfg: ExperimentConfig, results, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"experiment": cfg.name, "kind": cfg.kind, "element_kind": cfg.element_kind.value,
               "frequencies": []}
    for r in results:
        tag = _tag(r.f)
        plus = r.phi_plus if r.phi_plus is not None else np.full(len(r.x), np.nan + 0j)
        _write_rows(outdir / f"wall_{tag}.csv",
                    ["x", "re_phi", "im_phi", "abs_phi", "arg_phi", "re_phi_plus", "im_phi_plus",
                     "re_phi_a", "im_phi_a", "eps_r", "abs_diff", "angle_diff"],
                    zip(r.x, r.phi.real, r.phi.imag, np.abs(r.phi), np.angle(r.phi), plus.real, plus.imag,
                        r.phi_a.real, r.phi_a.imag, r.errors.relative, r.errors.magnitude, r.errors.angle))
        _write_rows(outdir / f"end_{tag}.csv", ["x", "y", "z", "re_phi", "im_phi", "abs_phi"],
                    zip(*r.end_points.T, r.end_phi.real, r.end_phi.imag, np.abs(r.end_phi)))
        for name, grid in r.grids.items():
            write_grid_csv(grid, outdir / f"{name}_{tag}.csv")
        entry = {
            "f_hz": r.f, "k": r.k, "n_unknowns": r.n_unknowns, "residual": r.residual,
            "end_abs_phi_min": float(np.abs(r.end_phi).min()),
            "end_abs_phi_max": float(np.abs(r.end_phi).max()),
            "end_abs_phi_mean": float(np.abs(r.end_phi).mean()),
            "max_eps_r": float(r.errors.relative.max()),
            "eps_r_at_end": float(r.errors.relative[-1]),
        }
        if r.phi_plus is not None:
            entry["max_abs_phi_plus"] = float(np.abs(r.phi_plus).max())
        summary["frequencies"].append(entry)
    _write_summary(outdir, summary)


# ---------------------------------------------------------------------------
# Radiation impedance of a half-open duct
# ---------------------------------------------------------------------------


def opening_grid(cfg: ExperimentConfig) -> np.ndarray:
    """n x n points in the opening plane, kept at least h1/2 away from the rim."""
    d = cfg.duct
    min_inset = 0.5 * max(d.h1)
    inset = min_inset if cfg.grid_inset is None else cfg.grid_inset
    if inset < min_inset - 1e-12:
        raise ConfigError(f"opening grid inset {inset} is closer to the rim than h1/2 = {min_inset}")
    a = _half_extent(cfg)
    half = a - inset if d.cross_section == "square" else (a - inset) / math.sqrt(2.0)
    if half <= 0:
        raise ConfigError("opening grid inset leaves no room for points")
    s = np.linspace(-half, half, cfg.grid_n) if cfg.grid_n > 1 else np.zeros(1)
    Y, Z = np.meshgrid(s, s, indexing="ij")
    x = d.length if cfg.grid_x is None else cfg.grid_x
    return np.column_stack([np.full(Y.size, x), Y.ravel(), Z.ravel()])


def snapshot_grid(cfg: ExperimentConfig, mesh: DuctMesh, n: int = 41) -> np.ndarray:
    """Points in the plane z = 0 around the open end, away from the walls."""
    L, a = cfg.duct.length, _half_extent(cfg)
    x = np.linspace(L - 0.5, L + 1.0, n)
    y = np.linspace(-0.75, 0.75, n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    keep = point_panel_distance(pts, mesh, cutoff=0.01) > 0.01
    return pts[keep]


def half_open_bcs(cfg: ExperimentConfig):
    return {Region.SOURCE: BoundaryCondition.velocity(0.0, cfg.v0)}


@dataclass
class ImpedancePoint:
    f: float
    z: complex
    z_ref: complex
    snapshot: EvaluationGrid | None = None


def impedance_frequency(cfg: ExperimentConfig, f: float) -> ImpedancePoint:
    ctx = wave_context(cfg, f)
    mesh = build_geometry(cfg).with_bcs(half_open_bcs(cfg))
    sol = solve_mesh(mesh, ctx)
    pts = opening_grid(cfg)
    phi = evaluate_potential(mesh, sol, ctx, pts)
    v = evaluate_velocity(mesh, sol, ctx, pts, [1.0, 0.0, 0.0])
    z = mean_impedance(ctx.pressure(phi), v, ctx.rho_c)
    a = cfg.duct.width / math.sqrt(math.pi) if cfg.duct.cross_section == "square" else cfg.duct.radius
    snap = None
    if any(abs(f - s) < 1e-9 for s in cfg.snapshots):
        snap = EvaluationGrid(snapshot_grid(cfg, mesh)).evaluate(mesh, sol, ctx)
    return ImpedancePoint(float(f), z, unflanged_radiation_impedance(ctx.k, a), snap)


def spl_db(p) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(np.abs(p), 1e-300) / P_REF)


def run_impedance_sweep(cfg: ExperimentConfig, outdir=None) -> list[ImpedancePoint]:
    if cfg.kind != "impedance-sweep":
        raise ConfigError("config is not an impedance sweep")
    if cfg.duct.closure_end is not Closure.OPEN or cfg.duct.closure_start is Closure.OPEN:
        raise ConfigError("the impedance sweep needs a duct closed at x = 0 and open at x = L")
    opening_grid(cfg)  # validate before any solve
    freqs = sorted(set(cfg.frequencies.frequencies()) | set(cfg.snapshots))
    results = _map_frequencies(impedance_frequency, cfg, freqs)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_rows(outdir / "impedance.csv", ["f_hz", "re_z", "im_z", "ref_re_z", "ref_im_z"],
                    [(r.f, r.z.real, r.z.imag, r.z_ref.real, r.z_ref.imag) for r in results])
        for r in results:
            if r.snapshot is not None:
                write_grid_csv(r.snapshot, outdir / f"snapshot_{_tag(r.f)}.csv")
                _write_rows(outdir / f"spl_{_tag(r.f)}.csv", ["x", "y", "z", "spl_db"],
                            zip(*r.snapshot.points.T, spl_db(r.snapshot.p)))
        _write_summary(outdir, {"experiment": cfg.name, "kind": cfg.kind, "n_frequencies": len(results)})
    return results


# ---------------------------------------------------------------------------
# Resonances of an open tube
# ---------------------------------------------------------------------------


def strike_element(cfg: ExperimentConfig, mesh: DuctMesh) -> int:
    """Wall element nearest to (strike_x, strike_azimuth)."""
    column = wall_line(mesh, cfg.strike_azimuth)
    return int(column[np.argmin(np.abs(mesh.centroids[column, 0] - cfg.strike_x))])


def struck_mesh(cfg: ExperimentConfig) -> DuctMesh:
    mesh = build_geometry(cfg)
    bcs = list(mesh.bcs)
    # a vibrating wall patch moves the fluid on both sides alike
    bcs[strike_element(cfg, mesh)] = BoundaryCondition.velocity(cfg.v0, cfg.v0)
    return mesh.with_bcs(bcs)


def resonance_grid(cfg: ExperimentConfig) -> np.ndarray:
    half = (0.5 if cfg.grid_half_width is None else cfg.grid_half_width) * _half_extent(cfg)
    n = cfg.grid_n
    s = np.linspace(-half, half, n) if n > 1 else np.zeros(1)
    Y, Z = np.meshgrid(s, s, indexing="ij")
    x = cfg.duct.length if cfg.grid_x is None else cfg.grid_x
    return np.column_stack([np.full(Y.size, x), Y.ravel(), Z.ravel()])


def mean_pressure_level(cfg: ExperimentConfig, f: float, mesh: DuctMesh | None = None) -> float:
    mesh = struck_mesh(cfg) if mesh is None else mesh
    ctx = wave_context(cfg, f)
    sol = solve_mesh(mesh, ctx)
    p = ctx.pressure(evaluate_potential(mesh, sol, ctx, resonance_grid(cfg)))
    return float(spl_db(np.mean(np.abs(p))))


@dataclass
class ResonanceReport:
    peaks: list[float]
    levels: list[float]
    trace: list[tuple[float, float]]

    def harmonic_ratios(self) -> list[float]:
        return [p / self.peaks[0] for p in self.peaks[1:]] if self.peaks else []


def _refine_peak(level, a: float, b: float, floor: float) -> float:
    """Golden-section search for the maximum on [a, b] on a lattice of spacing ``floor``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = round(a / floor), round(b / floor)

    def at(i):
        return level(i * floor)

    while hi - lo > 3:
        c = hi - int(round(invphi * (hi - lo)))
        d = lo + int(round(invphi * (hi - lo)))
        if c == d:
            d = c + 1
        if at(c) >= at(d):
            hi = d
        else:
            lo = c
    best = max(range(lo, hi + 1), key=lambda i: (at(i), -i))
    return best * floor


def run_resonance_search(cfg: ExperimentConfig, outdir=None) -> ResonanceReport:
    if cfg.kind != "resonance-search":
        raise ConfigError("config is not a resonance search")
    coarse = cfg.frequencies.frequencies()
    floor = cfg.frequencies.refine_step or (cfg.frequencies.step or 1.0)
    cache: dict[float, float] = {}
    values = _map_frequencies(mean_pressure_level, cfg, coarse)
    cache.update({round(f, 9): lv for f, lv in zip(coarse, values)})
    mesh = struck_mesh(cfg)

    def level(f):
        key = round(f, 9)
        if key not in cache:
            cache[key] = mean_pressure_level(cfg, f, mesh)
        return cache[key]

    peaks = []
    for i in range(1, len(coarse) - 1):
        if values[i] > values[i - 1] and values[i] >= values[i + 1]:
            peaks.append(_refine_peak(level, coarse[i - 1], coarse[i + 1], floor))
    report = ResonanceReport(peaks=peaks, levels=[level(p) for p in peaks],
                             trace=sorted(cache.items()))
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_rows(outdir / "resonance.csv", ["f_hz", "level_db"], report.trace)
        _write_rows(outdir / "peaks.csv", ["peak", "f_hz", "level_db"],
                    [(i + 1, f, lv) for i, (f, lv) in enumerate(zip(report.peaks, report.levels))])
        _write_summary(outdir, {"experiment": cfg.name, "kind": cfg.kind,
                                "peaks_hz": report.peaks, "levels_db": report.levels,
                                "harmonic_ratios": report.harmonic_ratios()})
    return report


RUNNERS = {
    "closed-duct": run_closed_duct,
    "impedance-sweep": run_impedance_sweep,
    "resonance-search": run_resonance_search,
}


def run_experiment(cfg: ExperimentConfig, outdir=None):
    return RUNNERS[cfg.kind](cfg, outdir)
