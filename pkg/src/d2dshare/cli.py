"""Command-line entry point: ``d2dshare run | plot | verify | config``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ConfigError, RunSpec, apply_override, load_config, preset, template
from .experiment import (METHODS, SweepPoint, SweepResult, run_trials, runtime_table, sinr_csv,
                         summarize, sweep, sweep_csv, trial_log_csv)
from .heuristics import inter_tenant_heuristic, intra_tenant_heuristic, intra_tenant_optimal
from .ilp import (ORACLE_MAX_LINKS, ORACLE_MAX_RBS, REL_TOL, ProblemFormatError, read_problem,
                  solve_exact, solve_oracle, verify)

log = logging.getLogger("d2dshare")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FAST_TRIALS = 200

OUTPUT_FILES = {"trials": "trials.csv", "sweep": "sweep.csv", "sinr": "sinr.csv", "manifest": "manifest.json"}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def execute(spec: RunSpec) -> SweepResult:
    """Run the experiment described by ``spec``."""
    if spec.axis == "trial":
        results = run_trials(spec.scenario, spec.trials, spec.workers, drop_links=spec.drop_links)
        point = SweepPoint(value=0, trials=results, summary={m: summarize(results, m) for m in METHODS})
        return SweepResult(axis="trial", config=spec.scenario, points=[point])
    return sweep(spec.scenario, spec.axis, spec.sweep_values, spec.trials, spec.workers,
                 drop_links=spec.drop_links)


def write_outputs(result: SweepResult, spec: RunSpec, out_dir, started: str) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {k: out_dir / v for k, v in OUTPUT_FILES.items()}
    paths["trials"].write_text(trial_log_csv(result))
    paths["sweep"].write_text(sweep_csv(result))
    paths["sinr"].write_text(sinr_csv(result))
    manifest = {
        "tool": "d2dshare",
        "version": __version__,
        "seed": spec.scenario.rng_seed,
        "started": started,
        "finished": _now(),
        "config": spec.to_dict(),
        "sweep_values": list(result.values),
        "outputs": {k: str(p) for k, p in paths.items() if k != "manifest"},
        "mean_runtime_s": runtime_table(result),
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2) + "\n")
    return paths


def cmd_run(args) -> int:
    try:
        if args.config:
            spec = load_config(args.config)
            if args.experiment:
                spec = dataclasses.replace(spec, experiment=args.experiment)
        else:
            spec = preset(args.experiment or "sweep-links")
        if args.fast:
            spec = dataclasses.replace(spec, trials=FAST_TRIALS)
        if args.trials is not None:
            spec = dataclasses.replace(spec, trials=args.trials)
        if args.seed is not None:
            spec = apply_override(spec, f"rng_seed={args.seed}")
        if args.workers is not None:
            spec = dataclasses.replace(spec, workers=args.workers)
        for assignment in args.set or ():
            spec = apply_override(spec, assignment)
        if spec.trials < 1:
            raise ConfigError("trials must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    started = _now()
    log.info("running %s: %d trials per point, seed %d", spec.experiment, spec.trials, spec.scenario.rng_seed)
    result = execute(spec)
    paths = write_outputs(result, spec, args.out_dir, started)
    for pt in result.points:
        line = "  ".join(f"{m}={pt.mean(m) / 1e6:.3f}" for m in METHODS)
        print(f"{result.axis}={pt.value}: {line} (Mbit/s)")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")

    if all(not t.methods[m].feasible for pt in result.points for t in pt.trials for m in METHODS):
        print("error: no method found a feasible allocation in any trial; "
              "check thresholds (gamma_th_db, gamma_tilde_th_db, r_th_bps) and pool sizes",
              file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import SchemaError, plot_file
    try:
        written = plot_file(args.csv, args.out_dir, args.value)
    except (SchemaError, OSError, KeyError, ValueError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        p = read_problem(args.instance)
    except (ProblemFormatError, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    n, m = p.shape
    print(f"instance: {n} links x {m} RBs, l_max={p.l_max}, r_th={p.r_th:g}")
    rc = EXIT_OK

    def report(name, alloc):
        violations = verify(alloc, p)
        print(f"{name:16s} status={alloc.status.value:16s} objective={alloc.objective_bps!r} "
              f"violations={len(violations)}")
        for v in violations:
            print(f"    {v}")

    exact, stats = solve_exact(p)
    report("exact", exact)
    print(f"    nodes={stats.nodes_explored} time={stats.wall_time_s:.4f}s")
    if n <= ORACLE_MAX_LINKS and m <= ORACLE_MAX_RBS:
        oracle = solve_oracle(p)
        report("oracle", oracle)
        same = oracle.status == exact.status and abs(oracle.objective_bps - exact.objective_bps) <= \
            REL_TOL * max(1.0, abs(oracle.objective_bps))
        print("oracle match" if same else "ORACLE MISMATCH")
        if not same:
            rc = EXIT_FAIL
    else:
        print(f"oracle skipped: instance exceeds {ORACLE_MAX_LINKS} links x {ORACLE_MAX_RBS} RBs")

    report("inter_heuristic", inter_tenant_heuristic(p)[0])
    if p.rb_tenant is not None and p.initiator_tenant is not None:
        report("intra_optimal", intra_tenant_optimal(p))
        report("intra_heuristic", intra_tenant_heuristic(p))
    else:
        print("intra-tenant methods skipped: instance has no rb_tenant/initiator_tenant records")
    return rc


def cmd_config(args) -> int:
    sys.stdout.write(template(args.experiment))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dshare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a trial batch or a sweep and write CSV + manifest")
    run.add_argument("--config", help="YAML run configuration")
    run.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    run.add_argument("--out-dir", default="results")
    run.add_argument("--fast", action="store_true", help=f"use {FAST_TRIALS} trials per point")
    run.add_argument("--workers", type=int, help="parallel trial processes")
    run.set_defaults(func=cmd_run)

    plot = sub.add_parser("plot", help="render sweep.csv or sinr.csv as SVG")
    plot.add_argument("csv")
    plot.add_argument("--out-dir")
    plot.add_argument("--value", help="sweep point to draw (SINR CSV only)")
    plot.set_defaults(func=cmd_plot)

    ver = sub.add_parser("verify", help="solve a plain-text instance with every method")
    ver.add_argument("instance")
    ver.set_defaults(func=cmd_verify)

    cfg = sub.add_parser("config", help="print a complete config file for an experiment")
    cfg.add_argument("--experiment", choices=sorted(EXPERIMENTS), default="sweep-links")
    cfg.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception:  # noqa: BLE001
        log.exception("unexpected failure")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
