"""Acceptance criteria for the solver, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Criterion 8 runs its smoke variant (every 25 Hz up to ka = 1) unless
DUCTBEM_FULL_SWEEP=1 is set; the BEM80 extension of criterion 9 runs only
with DUCTBEM_EXTENDED=1.
"""

import filecmp
import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE
from ductbem.analytic import duct_1d_solution
from ductbem.assembly import WaveContext
from ductbem.config import FrequencyPlan, load_preset, with_frequencies
from ductbem.experiments import (closed_duct_frequency, run_closed_duct, run_experiment, run_impedance_sweep,
                                 run_resonance_search)
from ductbem.kernels import green, grad_green_nx, grad_green_ny, hyper_kernel
from ductbem.quadrature import static_hyper_finite_part
from oracles import richardson_offset_limit
from test_kernels import fd_derivatives, kernel_scales, random_configs


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def bare(name, **changes):
    """Preset without evaluation grids, with optional duct changes."""
    cfg = load_preset(name)
    return replace(cfg, grids=(), duct=replace(cfg.duct, **changes) if changes else cfg.duct)


# 1 -------------------------------------------------------------------------

def test_criterion_01_kernel_oracles():
    t = time.perf_counter()
    k, x, y, nx, ny = random_configs(1000, seed=11)
    H, Hp, E = fd_derivatives(k, x, y, nx, ny)
    s1, s2 = kernel_scales(k, x, y)
    eH = np.max(np.abs(grad_green_ny(k, x, y, ny) - H) / np.maximum(np.abs(H), s1))
    eHp = np.max(np.abs(grad_green_nx(k, x, y, nx) - Hp) / np.maximum(np.abs(Hp), s1))
    eE = np.max(np.abs(hyper_kernel(k, x, y, nx, ny) - E) / np.maximum(np.abs(E), s2))
    green(k, x, y)
    dt = time.perf_counter() - t
    record(1, eH < 1e-6 and eHp < 1e-6 and eE < 1e-5 and dt < 1.0,
           f"max rel H {eH:.1e}, H' {eHp:.1e}, E {eE:.1e} over 1000 configs in {dt:.2f} s")


# 2 -------------------------------------------------------------------------

def test_criterion_02_hypersingular_self_panel():
    t = time.perf_counter()
    square = np.array([[-0.02, -0.02, 0.0], [0.02, -0.02, 0.0], [0.02, 0.02, 0.0], [-0.02, 0.02, 0.0]])
    oracle = richardson_offset_limit(0.02)
    value = static_hyper_finite_part(square)
    dt = time.perf_counter() - t
    rel = abs(value - oracle) / abs(oracle)
    record(2, rel < 1e-6 and dt < 1.0, f"finite part {value:.10f}, offset limit {oracle:.10f}, rel {rel:.1e}, {dt:.2f} s")


# 3 -------------------------------------------------------------------------

def test_criterion_03_thin1_end_value():
    r = closed_duct_frequency(bare("thin1-h04"), 800.0)
    phi_L = np.abs(r.end_phi)
    diff = float(np.max(np.abs(phi_L - 1 / r.k)))
    record(3, diff < 1e-4 and r.n_unknowns <= 1710,
           f"|phi-(L)| = {phi_L.max():.8f}, 1/k = {1 / r.k:.8f}, diff {diff:.2e}, {r.n_unknowns} unknowns")


# 4 -------------------------------------------------------------------------

def test_criterion_04_fine_closure_range():
    r = closed_duct_frequency(bare("thin5-fineclosure"), 800.0)
    a = np.abs(r.end_phi)
    ok = a.min() >= 0.0655 and a.max() <= 0.0708 and len(a) == 625
    record(4, ok, f"|phi| on the end closure in [{a.min():.6f}, {a.max():.6f}] over {len(a)} elements")


# 5 -------------------------------------------------------------------------

def window_maxima(x, values, start, stop, width):
    edges = np.arange(start, stop + 1e-9, width)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (x >= a) & (x < b)
        if np.any(sel):
            out.append(values[sel].max())
    return np.array(out)


def test_criterion_05_damping_contrast():
    f = 1200.0
    thin = closed_duct_frequency(bare("duct10-thin1-h04"), f)
    surf = closed_duct_frequency(bare("duct10-surf-h04"), f)
    k = thin.k
    ratio = surf.errors.relative[-1] / thin.errors.relative[-1]
    env = window_maxima(surf.x, np.abs(surf.phi), 5.0, 10.0, 2 * math.pi / k)
    monotone = bool(np.all(np.diff(env) <= 0))
    back = thin.x >= 5.0
    mean_dev = abs(np.mean(np.abs(thin.phi[back])) * k - 1)
    ok = ratio >= 3 and monotone and mean_dev <= 0.02
    record(5, ok, f"eps_r(10 m) surface {surf.errors.relative[-1]:.3f} / thin {thin.errors.relative[-1]:.3f}"
                  f" = {ratio:.2f} (need >= 3); surface envelope monotone {monotone};"
                  f" thin mean |phi| k - 1 over [5, 10] m = {mean_dev:.4f}")


# 6 -------------------------------------------------------------------------

def test_criterion_06_width_convergence():
    errs = []
    for name in ("thin-inside-h04", "thin-inside-h02", "thin-inside-h01"):
        r = closed_duct_frequency(bare(name), 800.0)
        errs.append(float(r.errors.relative.max()))
    ok = errs[0] > errs[1] > errs[2]
    record(6, ok, "max eps_r for h1 = 0.04, 0.02, 0.01: " + ", ".join(f"{e:.4f}" for e in errs))


# 7 -------------------------------------------------------------------------

def test_criterion_07_exterior_silence():
    coarse = run_closed_duct(replace(bare("outside-h04"), frequencies=FrequencyPlan(values=(400.0, 800.0, 1200.0))))
    fine = run_closed_duct(replace(bare("outside-h02"), frequencies=FrequencyPlan(values=(400.0, 800.0, 1200.0))))
    pairs = [(c.f, np.abs(c.phi_plus).max(), np.abs(g.phi_plus).max()) for c, g in zip(coarse, fine)]
    ok = all(b < a for _, a, b in pairs)
    record(7, ok, "; ".join(f"{f:g} Hz: {a:.2e} -> {b:.2e}" for f, a, b in pairs))


# 8 -------------------------------------------------------------------------

def test_criterion_08_radiation_impedance():
    cfg = load_preset("impedance-sweep")
    a = cfg.duct.width / math.sqrt(math.pi)
    full = os.environ.get("DUCTBEM_FULL_SWEEP") == "1"
    freqs = cfg.frequencies.frequencies() if full else list(np.arange(5.0, 481.0, 25.0))
    cfg = replace(with_frequencies(cfg, freqs), snapshots=())
    res = run_impedance_sweep(cfg)
    worst_re = worst_im = 0.0
    for r in res:
        ka = WaveContext(r.f).k * a
        if ka > 1:
            continue
        worst_re = max(worst_re, abs(r.z.real / r.z_ref.real - 1))
        worst_im = max(worst_im, abs(r.z.imag / r.z_ref.imag - 1))
    ok = worst_re <= 0.25 and worst_im <= 0.25
    variant = "full sweep" if full else "smoke sweep every 25 Hz"
    record(8, ok, f"{variant}, ka <= 1: worst rel error Re z {worst_re:.3f}, Im z {worst_im:.3f} (limit 0.25)")


# 9, 10 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def bem30_report():
    return run_resonance_search(load_preset("bem30"))


def test_criterion_09_resonances(bem30_report):
    expected = [253, 506, 760, 1013]
    peaks = bem30_report.peaks
    ok = len(peaks) >= 4 and all(abs(p - e) <= 2 for p, e in zip(peaks[:4], expected))
    record(9, ok, f"BEM30 peaks {[int(p) for p in peaks]} Hz, expected {expected} +- 2 Hz")


def test_criterion_10_harmonicity(bem30_report):
    peaks = bem30_report.peaks
    ratios = [peaks[n - 1] / peaks[0] for n in (2, 3, 4)] if len(peaks) >= 4 else []
    ok = len(ratios) == 3 and all(abs(r / n - 1) <= 0.01 for r, n in zip(ratios, (2, 3, 4)))
    record(10, ok, "F_n / F_1 = " + ", ".join(f"{r:.4f}" for r in ratios))


@pytest.mark.skipif(os.environ.get("DUCTBEM_EXTENDED") != "1", reason="extended criterion, set DUCTBEM_EXTENDED=1")
def test_criterion_09_extended_bem80():
    expected = [259, 518, 777, 1036]
    peaks = run_resonance_search(load_preset("bem80")).peaks
    assert len(peaks) >= 4 and all(abs(p - e) <= 2 for p, e in zip(peaks[:4], expected)), peaks


# 11 ------------------------------------------------------------------------

@settings(max_examples=100, deadline=None, derandomize=True)
@given(f=st.floats(1.0, 5000.0))
def matched_end_property(f):
    ctx = WaveContext(f)
    sol = duct_1d_solution(ctx, 3.4, -1.0, ctx.rho_c)
    assert abs(sol.A) / abs(sol.B) <= 1e-14
    x = np.linspace(0.0, 3.4, 35)
    assert np.max(np.abs(np.abs(sol.phi(x)) - 1 / ctx.k)) <= 1e-12


def test_criterion_11_analytic_module():
    try:
        matched_end_property()
        ok, detail = True, "|A|/|B| <= 1e-14 and |phi| = 1/k to 1e-12 at 100 frequencies"
    except AssertionError as exc:
        ok, detail = False, f"counterexample: {exc}"
    record(11, ok, detail)


# 12 ------------------------------------------------------------------------

def determinism_cases():
    bem = replace(load_preset("bem30"), frequencies=FrequencyPlan(start=245, stop=260, step=5, refine_step=1))
    return {
        "bem30": bem,
        "thin1-h04": with_frequencies(load_preset("thin1-h04"), [800.0]),
        "impedance-sweep": replace(with_frequencies(load_preset("impedance-sweep"), [100.0, 300.0]), snapshots=()),
    }


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    names = sorted(cmp.common_files)
    return (not cmp.left_only and not cmp.right_only and names
            and filecmp.cmpfiles(a, b, names, shallow=False)[0] == names)


def test_criterion_12_determinism(tmp_path_factory):
    cases = determinism_cases()
    checked = []

    @settings(max_examples=len(cases), deadline=None, database=None)
    @given(name=st.sampled_from(sorted(cases)))
    def prop(name):
        root = tmp_path_factory.mktemp(name)
        run_experiment(cases[name], root / "a")
        run_experiment(cases[name], root / "b")
        assert same_tree(root / "a", root / "b"), name
        checked.append(name)

    try:
        prop()
        ok, detail = True, f"byte-identical CSV for {sorted(set(checked))}"
    except AssertionError as exc:
        ok, detail = False, f"outputs differ: {exc}"
    record(12, ok, detail)
