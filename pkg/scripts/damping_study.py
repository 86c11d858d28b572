"""Thin versus surface elements along the 10 m duct.

Prints eps_r, the amplitude and the phase error at a few stations for the
Thin1, Thin5 and surface meshes.

    python scripts/damping_study.py --freq 1200 --h1 04
"""

import argparse
from dataclasses import replace

import numpy as np

from ductbem.config import load_preset
from ductbem.experiments import closed_duct_frequency


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--freq", type=float, default=1200.0)
    ap.add_argument("--h1", default="04", choices=["04", "02", "01"])
    args = ap.parse_args()
    stations = [1.0, 2.5, 5.0, 7.5, 10.0]
    for mesh in ("thin1", "thin5", "surf"):
        cfg = replace(load_preset(f"duct10-{mesh}-h{args.h1}"), grids=())
        r = closed_duct_frequency(cfg, args.freq)
        print(f"{mesh:6s} {r.n_unknowns} unknowns")
        for xs in stations:
            i = int(np.argmin(np.abs(r.x - xs)))
            print(f"   x = {r.x[i]:5.2f}  eps_r = {r.errors.relative[i]:.4f}"
                  f"  |phi| k = {abs(r.phi[i]) * r.k:.4f}  angle diff = {r.errors.angle[i]:+.4f} rad")


if __name__ == "__main__":
    main()
