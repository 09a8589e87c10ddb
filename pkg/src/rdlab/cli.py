"""Experiment runner: dispatch verification suites, write reports and plots.

Usage:

    rdlab <suite> --config cfg.ini [--out DIR] [--seed N] [--threads N] [--quiet]
    rdlab all --config cfg.ini ...
    rdlab emit-plots report.json [--out DIR]

Each run writes report.json (full payloads + PASS/FAIL checks), the suite's
CSV sweeps, two-column plot-data files with a rendered PNG per suite, and
a timings.json sidecar.  Reports are byte-deterministic for a fixed
(config, seed); wall-clock timings therefore live in the sidecar, never in
the report.

Exit codes: 0 all checks pass; 1 at least one check failed; 2 config schema
violation (diagnostics on stderr with file:line); 3 numerical blow-up (the
witness time on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import scipy.fft

from rdlab import __version__
from rdlab.config import ConfigError, load_config
from rdlab.figures import emit_plots
from rdlab.reporting import ensure_dir, jsonable, summarize, write_csv, write_json
from rdlab.solver import BlowUpError
from rdlab.suites import SUITE_ORDER, SUITE_RUNNERS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdlab",
        description="Numerical verification suites for a dissipative "
        "reaction-diffusion solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in list(SUITE_ORDER) + ["all"]:
        sp = sub.add_parser(name, help=f"run the {name} suite" if name != "all"
                            else "run every suite configured in the file")
        sp.add_argument("--config", required=True, help="experiment config (INI)")
        sp.add_argument("--out", default=None, help="output directory (default: reports/<subcommand>)")
        sp.add_argument("--seed", type=int, default=None, help="override [run] rng_seed")
        sp.add_argument("--threads", type=int, default=1, help="FFT worker threads")
        sp.add_argument("--quiet", action="store_true", help="suppress per-check lines")
    ep = sub.add_parser("emit-plots", help="regenerate plot data and figures from a report")
    ep.add_argument("report", help="path to a report.json")
    ep.add_argument("--out", default=None, help="output directory (default: alongside the report)")
    ep.add_argument("--quiet", action="store_true", help="suppress the file list")
    return parser


def _run_emit_plots(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
        suites = report["suites"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"malformed report {args.report}: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or (os.path.dirname(os.path.abspath(args.report)) or ".")
    files = emit_plots(suites, out_dir)
    if not args.quiet:
        for f in files:
            print(os.path.join(out_dir, f))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "emit-plots":
        return _run_emit_plots(args)

    try:
        cfg = load_config(args.config, args.command, seed_override=args.seed)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    out_dir = args.out or os.path.join("reports", args.command)
    ensure_dir(out_dir)
    if args.command == "all":
        names = [s for s in SUITE_ORDER if s in cfg.suites]
    else:
        names = [args.command]

    results = {}
    timings = {}
    t_start = time.perf_counter()
    try:
        with scipy.fft.set_workers(max(1, args.threads)):
            for name in names:
                t0 = time.perf_counter()
                results[name] = SUITE_RUNNERS[name](cfg, out_dir)
                timings[name] = time.perf_counter() - t0
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return 3
    total = time.perf_counter() - t_start

    suites_obj = {}
    all_checks = []
    for name in names:
        res = results[name]
        suites_obj[name] = {
            "payload": jsonable(res.payload),
            "checks": jsonable(res.checks),
            "summary": summarize(res.checks),
        }
        all_checks.extend(res.checks)
        for fname, (header, rows) in res.csvs.items():
            write_csv(os.path.join(out_dir, fname), header, rows)

    overall = summarize(all_checks)
    report = {
        "subcommand": args.command,
        "config": cfg.echo,
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "package_version": __version__,
        "suites": suites_obj,
        "summary": overall,
    }
    write_json(os.path.join(out_dir, "report.json"), report)
    emit_plots(suites_obj, out_dir)
    write_json(
        os.path.join(out_dir, "timings.json"),
        {"suites": timings, "total_seconds": total},
    )

    if not args.quiet:
        for name in names:
            for c in results[name].checks:
                status = "PASS" if c["passed"] else "FAIL"
                print(f"[{status}] {name}/{c['name']}")
        print(
            f"{overall['n_checks'] - overall['n_failed']}/{overall['n_checks']} checks passed"
            f" -> {os.path.join(out_dir, 'report.json')}"
        )
    return 0 if overall["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
