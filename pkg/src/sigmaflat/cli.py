"""Command-line front end.

    sigmaflat run <config> [--report PATH] [--csv-dir DIR]
    sigmaflat verify <config> --check LABEL [--check LABEL ...]
    sigmaflat solve <config> [--out PATH]
    sigmaflat list-surfaces

Exit status is 0 iff every check passes, 1 if any fails and 2 for an invalid
config.  ``SIGMAFLAT_THREADS`` sets the number of worker threads used for
point-wise evaluation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline, surfaces
from .errors import ConfigInvalid, SigmaflatError
from .grid import write_grid_csv


def _outputs(args, cfg):
    out = cfg.output
    report = args.report or out.get("report")
    if report is None:
        report = Path(args.config).with_suffix(".report.json")
    csv_dir = args.csv_dir or out.get("csv_dir")
    if csv_dir is not None and not Path(csv_dir).is_absolute() and args.csv_dir is None:
        csv_dir = cfg.path(csv_dir)
    if args.report is None and "report" in out:
        report = cfg.path(report)
    return report, csv_dir


def _summary(report: pipeline.Report, stream):
    for r in report.ordered():
        mx = f"{r.entry.max:.3e}" if r.entry is not None else "-"
        tol = f"{r.tolerance:.1e}" if r.tolerance is not None else "-"
        line = f"{r.status.upper():7s} {r.label:20s} max={mx:>10s} tol={tol}"
        if r.message:
            line += f"  ({r.message})"
        print(line, file=stream)


def cmd_run(args, checks=None) -> int:
    cfg = pipeline.RunConfig.load(args.config)
    if checks:
        cfg.checks = list(checks)
        cfg.validate()
    report = pipeline.run_pipeline(cfg)
    path, csv_dir = _outputs(args, cfg)
    status = pipeline.emit_outputs(report, path, csv_dir)
    _summary(report, sys.stdout)
    return status


def cmd_solve(args) -> int:
    cfg = pipeline.RunConfig.load(args.config)
    if "solve" not in cfg.surface:
        raise ConfigInvalid("solve needs a [surface.solve] table")
    sol = pipeline.solve_from_config(cfg)
    if args.out:
        out = args.out
    elif "grid" in cfg.output:
        out = cfg.path(cfg.output["grid"])
    else:
        out = Path(args.config).with_suffix(".grid.csv")
    write_grid_csv(sol.phi, out)
    info = sol.params["info"]
    print(f"converged in {info.iterations} Newton steps, scaled residual {info.residual:.3e}; wrote {out}")
    return 0


def cmd_list(args) -> int:
    for name, (_, desc) in surfaces.CATALOG.items():
        print(f"{name:10s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigmaflat", description="Minimal surfaces, sigma models and Ricci-flat metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every configured check")
    run.add_argument("config")
    run.add_argument("--report", help="JSON report path (default: <config>.report.json)")
    run.add_argument("--csv-dir", help="directory for per-check residual CSVs")

    ver = sub.add_parser("verify", help="run only the named checks")
    ver.add_argument("config")
    ver.add_argument("--check", action="append", required=True, choices=list(pipeline.CHECKS))
    ver.add_argument("--report")
    ver.add_argument("--csv-dir")

    sol = sub.add_parser("solve", help="solve the minimal-surface equation and export the grid")
    sol.add_argument("config")
    sol.add_argument("--out")

    sub.add_parser("list-surfaces", help="list catalog surfaces")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "verify":
            return cmd_run(args, checks=args.check)
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_list(args)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except SigmaflatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
