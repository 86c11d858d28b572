"""Closed-duct benchmark: wall-line potential against the plane wave.

    python scripts/closed_duct.py thin1-h04 --freq 800 -o out/thin1
"""

import argparse

import numpy as np

from ductbem.config import load_config, with_frequencies
from ductbem.experiments import run_closed_duct


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", help="preset name or config file")
    ap.add_argument("--freq", type=float, nargs="*", help="override the frequency list (Hz)")
    ap.add_argument("-o", "--output", help="directory for the CSV bundle")
    args = ap.parse_args()
    cfg = load_config(args.config)
    if args.freq:
        cfg = with_frequencies(cfg, args.freq)
    for r in run_closed_duct(cfg, args.output):
        end = np.abs(r.end_phi)
        line = (f"{r.f:7.1f} Hz  {r.n_unknowns:5d} unknowns  |phi(L)| in [{end.min():.6f}, {end.max():.6f}]"
                f"  1/k = {1 / r.k:.6f}  max eps_r = {r.errors.relative.max():.4f}")
        if r.phi_plus is not None:
            line += f"  max |phi+| = {np.abs(r.phi_plus).max():.2e}"
        print(line)


if __name__ == "__main__":
    main()
