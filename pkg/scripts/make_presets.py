"""Regenerate the shipped preset files under src/ductbem/presets/.

Each mesh table of the benchmark study maps to one or more presets.  Run
from the repository root::

    python scripts/make_presets.py
"""

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "ductbem" / "presets"

SQUARE = dict(cross_section="square", width="0.2", h2="0.04")
CLOSED = dict(closure_start="closed", closure_end="closed")
BENCH_FREQS = "400 800 1200"


def closed_duct(name, description, element_kind="thin", length="3.4", h1="0.04", h0="0.04", hL="0.04",
                freqs=BENCH_FREQS, grids="", duct=None, evaluation=None):
    d = dict(SQUARE, length=length, h1=h1, h0=h0, hL=hL, element_kind=element_kind, **CLOSED)
    d.update(duct or {})
    ev = {"grids": grids} if grids else {}
    ev.update(evaluation or {})
    return name, {
        "experiment": {"kind": "closed-duct", "name": name, "description": description},
        "duct": d,
        "frequencies": {"list": freqs},
        "medium": {"rho": "1.3", "c": "340"},
        "boundary": {"v0": "1.0", "end_impedance": "1.0"},
        "evaluation": ev,
    }


def bem(n_axial):
    name = f"bem{n_axial + 1}"
    return name, {
        "experiment": {"kind": "resonance-search", "name": name,
                       "description": f"open tube struck near one end, {n_axial} axial elements"},
        "duct": {"cross_section": "circle", "radius": "0.016", "length": "0.633",
                 "axial_elements": str(n_axial), "circumferential": "16",
                 "closure_start": "open", "closure_end": "open", "element_kind": "thin"},
        "frequencies": {"start": "100", "stop": "1100", "step": "5", "refine_step": "1"},
        "medium": {"rho": "1.3", "c": "340"},
        # struck element 3 cm from x = 0 at azimuth 0, 1 m/s on both faces
        "boundary": {"v0": "1.0", "strike_x": "0.03", "strike_azimuth": "0"},
        # 10 x 10 points in the opening plane x = L, half-width r/2
        "evaluation": {"grid_n": "10", "grid_half_width": "0.5"},
    }


def presets():
    # side-wall surface elements, square and circular cross-section
    yield closed_duct("surf5-h04", "surface elements, square duct, h = 0.04", "surface", freqs="400 800")
    yield closed_duct("surf-circle-h04", "surface elements, circular duct of equal area, 20 around",
                      "surface", freqs="400 800",
                      duct={"cross_section": "circle", "circumferential": "20", "h2": "",
                            "h0": "0.035", "hL": "0.035", "disc_rings": "8 14 20"},
                      evaluation={"wall_azimuth": "0.15707963267948966"})
    # local refinement with surface elements
    yield closed_duct("surf-h02", "surface elements, h1 = 0.02", "surface", h1="0.02", freqs="400 800")
    yield closed_duct("surf-zoned-fine-middle", "surface elements, h1 = 0.04/0.02/0.04 by thirds", "surface",
                      h1="0.04 0.02 0.04", freqs="400 800")
    yield closed_duct("surf-zoned-fine-ends", "surface elements, h1 = 0.02/0.04/0.02 by thirds", "surface",
                      h1="0.02 0.04 0.02", freqs="400 800")
    # interior field, surface elements
    for h in ("0.04", "0.02", "0.01"):
        yield closed_duct(f"surf-inside-h{h[2:]}", f"surface elements, interior grids, h1 = {h}", "surface",
                          h1=h, freqs="400 800", grids="midplane,cross")
    # thin elements along the wall
    # Thin1 / Thin5: closures of 1 x 1 and 5 x 5 thin elements
    yield closed_duct("thin1-h04", "thin elements, h1 = 0.04, single-element closures", h0="0.2", hL="0.2",
                      grids="midplane,cross,exterior")
    yield closed_duct("thin5-h04", "thin elements, h = 0.04 everywhere", grids="midplane,cross,exterior")
    yield closed_duct("thin-h02", "thin elements, h1 = 0.02", h1="0.02")
    yield closed_duct("thin-zoned-fine-middle", "thin elements, h1 = 0.04/0.02/0.04 by thirds",
                      h1="0.04 0.02 0.04")
    yield closed_duct("thin-zoned-fine-ends", "thin elements, h1 = 0.02/0.04/0.02 by thirds",
                      h1="0.02 0.04 0.02")
    # closure sizes
    for h in ("0.05", "0.066", "0.1", "0.2"):
        tag = h[2:].ljust(2, "0")
        yield closed_duct(f"thin-h0-{tag}", f"thin elements, source closure h0 = {h}", h0=h, freqs="800")
        yield closed_duct(f"thin-hL-{tag}", f"thin elements, end closure hL = {h}", hL=h, freqs="800")
    yield closed_duct("thin5-fineclosure", "thin elements, 25 x 25 closures of h = 0.008",
                      h0="0.008", hL="0.008", freqs="800")
    # interior field, thin elements
    for h in ("0.04", "0.02", "0.01"):
        yield closed_duct(f"thin-inside-h{h[2:]}", f"thin elements, interior grids, h1 = {h}", h1=h,
                          freqs="800", grids="midplane,cross")
    # error along a 10 m duct
    for h in ("0.04", "0.02", "0.01"):
        t = h[2:]
        yield closed_duct(f"duct10-thin1-h{t}", f"10 m duct, thin elements, closures 0.2, h1 = {h}",
                          length="10", h1=h, h0="0.2", hL="0.2")
        yield closed_duct(f"duct10-thin5-h{t}", f"10 m duct, thin elements, closures 0.04, h1 = {h}",
                          length="10", h1=h)
        yield closed_duct(f"duct10-surf-h{t}", f"10 m duct, surface elements, closures 0.04, h1 = {h}",
                          "surface", length="10", h1=h)
    # exterior side of the wall
    yield closed_duct("outside-h04", "thin elements, exterior wall potential, h1 = 0.04")
    yield closed_duct("outside-h02", "thin elements, exterior wall potential, h1 = 0.02", h1="0.02")
    # radiation impedance of the half-open duct
    yield "impedance-sweep", {
        "experiment": {"kind": "impedance-sweep", "name": "impedance-sweep",
                       "description": "duct closed at x = 0, open at x = L; mean p/v over the opening"},
        "duct": dict(SQUARE, length="3.4", h1="0.04", h0="0.04", element_kind="thin",
                     closure_start="closed", closure_end="open"),
        "frequencies": {"start": "5", "stop": "1415", "step": "5"},
        "medium": {"rho": "1.3", "c": "340"},
        "boundary": {"v0": "1.0"},
        # 8 x 8 centred grid in x = L, inset h1/2 from the rim
        "evaluation": {"grid_n": "8", "grid_inset": "0.02", "snapshots": "835 840 845 850 855 860"},
    }
    for n in (29, 79, 119, 159):
        yield bem(n)


def render(sections) -> str:
    lines = []
    for sec, items in sections.items():
        items = {k: v for k, v in items.items() if v != ""}
        if not items:
            continue
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in items.items()]
        lines.append("")
    return "\n".join(lines)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.ini"):
        old.unlink()
    for name, sections in presets():
        (OUT / f"{name}.ini").write_text(render(sections))
    print(f"wrote {len(list(OUT.glob('*.ini')))} presets to {OUT}")


if __name__ == "__main__":
    main()
