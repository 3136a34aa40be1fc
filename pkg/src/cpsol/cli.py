"""Command line entry point: ``cpsol run|sweep|report``."""

from __future__ import annotations

import argparse
import itertools
import os
import sys

from .harness import ConfigError, collect_summaries, load_config, run_experiment


def _load(path):
    try:
        with open(path) as fh:
            return load_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.runs is not None:
        cfg.runs = args.runs
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    return cfg


def _parse_grid(specs):
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"bad grid axis {spec!r}; expected key=v1,v2,...")
        key, values = spec.split("=", 1)
        axes.append((key.strip(), [v.strip() for v in values.split(",") if v.strip()]))
    return axes


def cmd_run(args):
    cfg = _apply_overrides(_load(args.config), args)
    out = args.out or cfg.out_dir or "results"
    only = [args.run_index] if args.run_index is not None else None
    report = run_experiment(cfg, out, only=only)
    for row in report.rows():
        print(f"{row[3]}: mean={row[4]:.6f} stddev={row[5]:.6f} stderr={row[6]:.6f}")
    print(f"best final over runs: {report.best_final():.6f}")
    return 0


def cmd_sweep(args):
    with open(args.config) as fh:
        base_text = fh.read()
    axes = _parse_grid(args.grid)
    out_root = args.out or "sweep"
    for combo in itertools.product(*(values for _, values in axes)):
        lines = [base_text]
        parts = []
        for (key, _), value in zip(axes, combo):
            lines.append(f"{key} = {value}")
            parts.append(f"{key}={value}")
        cfg = _apply_overrides(load_config("\n".join(lines)), args)
        sub = os.path.join(out_root, "_".join(parts).replace("/", "-"))
        run_experiment(cfg, sub)
        print(f"{sub}: done")
    return 0


def cmd_report(args):
    rows = collect_summaries(args.dir)
    if not rows:
        print(f"no summary.csv below {args.dir}", file=sys.stderr)
        return 1
    print("dir,algorithm,problem,runs,metric,mean,stddev,stderr")
    for r in rows:
        print(f"{r['dir']},{r['algorithm']},{r['problem']},{r['runs']},{r['metric']},"
              f"{r['mean']:.6f},{r['stddev']:.6f},{r['stderr']:.6f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="cpsol", description="Cellular multi-swarm PSO experiments")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, help="override run.base_seed")
    run.add_argument("--runs", type=int, help="override run.runs")
    run.add_argument("--out", help="output directory")
    run.add_argument("--workers", type=int)
    run.add_argument("--run-index", type=int, help="execute only this run index")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="Cartesian grid of experiments")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--grid", action="append", required=True, metavar="KEY=V1,V2")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--runs", type=int)
    sweep.add_argument("--out")
    sweep.add_argument("--workers", type=int)
    sweep.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="collect summaries into one table")
    rep.add_argument("--dir", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
