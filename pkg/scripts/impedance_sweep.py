"""Radiation impedance of the half-open duct against 0.25 (ka)^2 + 0.6 i ka.

    python scripts/impedance_sweep.py --step 25 --stop 480 -o out/impedance
"""

import argparse
from dataclasses import replace

import numpy as np

from ductbem.config import load_config, with_frequencies
from ductbem.experiments import run_impedance_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default="impedance-sweep")
    ap.add_argument("--start", type=float, default=5.0)
    ap.add_argument("--stop", type=float, default=1415.0)
    ap.add_argument("--step", type=float, default=5.0)
    ap.add_argument("--no-snapshots", action="store_true")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    cfg = with_frequencies(load_config(args.config), np.arange(args.start, args.stop + 1e-9, args.step))
    if args.no_snapshots:
        cfg = replace(cfg, snapshots=())
    print(" f_hz     re_z      im_z    ref_re    ref_im")
    for r in run_impedance_sweep(cfg, args.output):
        print(f"{r.f:6.0f} {r.z.real:9.5f} {r.z.imag:9.5f} {r.z_ref.real:9.5f} {r.z_ref.imag:9.5f}")


if __name__ == "__main__":
    main()
