"""Command-line entry point.

    ductbem mesh <config> -o mesh.txt
    ductbem run <config> -o outdir/
    ductbem presets

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import ConfigError, load_config, load_preset, preset_names
from .experiments import build_geometry, run_experiment
from .mesh import validate_mesh, write_mesh
from .solve import SolveError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("ductbem")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ductbem", description="Boundary element solver for thin-walled ducts")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    m = sub.add_parser("mesh", help="write the mesh of a config or preset")
    m.add_argument("config", help="config file or preset name")
    m.add_argument("-o", "--output", required=True)
    r = sub.add_parser("run", help="run the experiment of a config or preset")
    r.add_argument("config", help="config file or preset name")
    r.add_argument("-o", "--output", required=True, help="output directory")
    sub.add_parser("presets", help="list the shipped presets")
    return p


def _cmd_mesh(args) -> int:
    cfg = load_config(args.config)
    mesh = build_geometry(cfg)
    report = validate_mesh(mesh)
    if not report.ok:
        raise ConfigError("mesh is inconsistent: " + "; ".join(report.violations[:5]))
    write_mesh(mesh, args.output)
    log.info("%d elements written to %s", mesh.n, args.output)
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    log.info("running %s (%s)", cfg.name, cfg.kind)
    run_experiment(cfg, args.output)
    log.info("results written to %s", args.output)
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in preset_names():
        cfg = load_preset(name)
        print(f"{name:26s} {cfg.kind:17s} {cfg.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handler = {"mesh": _cmd_mesh, "run": _cmd_run, "presets": _cmd_presets}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveError, ZeroDivisionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
