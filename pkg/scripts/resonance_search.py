"""Resonance peaks of the struck open tube.

    python scripts/resonance_search.py bem30 -o out/bem30
"""

import argparse

from ductbem.config import load_config
from ductbem.experiments import run_resonance_search


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default="bem30")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    report = run_resonance_search(load_config(args.config), args.output)
    for n, (f, level) in enumerate(zip(report.peaks, report.levels), start=1):
        print(f"F{n} = {f:6.0f} Hz  {level:6.1f} dB  F{n}/F1 = {f / report.peaks[0]:.4f}")


if __name__ == "__main__":
    main()
