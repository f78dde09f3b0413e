"""`bench` command line: run scenario configs, re-render plots, presets."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import bench


def _load_config(path: str) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = [data]
    return [bench.ScenarioSpec.from_dict(d) for d in data]


def _cmd_run(args) -> int:
    specs = _load_config(args.config)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in bench.METHODS:
            raise SystemExit(f"unknown method {m!r}; "
                             f"expected from {','.join(bench.METHODS)}")
    if args.trials is not None:
        specs = [dataclasses.replace(s, trials=args.trials) for s in specs]
    if args.seed is not None:
        specs = [dataclasses.replace(s, seed=args.seed) for s in specs]
    records = bench.run_scenarios(specs, methods, threads=args.threads)
    written = bench.emit_report(records, args.out)
    for rec in records:
        stats = rec.stats
        gt = ("-" if stats.mean_goal_time is None
              else f"{stats.mean_goal_time:.2f}s")
        print(f"{rec.spec.name:18s} {rec.method:9s} "
              f"success={stats.success_rate:.2f} mean_goal_time={gt}")
    print(f"wrote {len(written)} files to {Path(args.out).resolve()}")
    return 0


def _cmd_plot(args) -> int:
    for path in bench.render_report_dir(args.indir):
        print(f"rendered {path}")
    return 0


def _cmd_presets(args) -> int:
    table = bench.presets()
    if args.dump:
        docs = [s.to_dict() for specs in table.values() for s in specs]
        print(json.dumps(docs, indent=2))
    else:
        for name, specs in table.items():
            kinds = {s.kind for s in specs}
            print(f"{name}: {len(specs)} scenario(s), kind={kinds.pop()}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Trajectory-optimization and MPC benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenarios from a JSON config")
    run.add_argument("--config", required=True,
                     help="JSON file with one scenario or a list of them")
    run.add_argument("--methods", default=",".join(bench.METHODS),
                     help="comma-separated subset of "
                          f"{{{','.join(bench.METHODS)}}}")
    run.add_argument("--out", default="bench_out",
                     help="output directory (default: bench_out)")
    run.add_argument("--trials", type=int, default=None,
                     help="override trial count per scenario")
    run.add_argument("--seed", type=int, default=None,
                     help="override every scenario seed")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for independent trials")
    run.set_defaults(fn=_cmd_run)

    plot = sub.add_parser("plot", help="re-render SVGs from a report dir")
    plot.add_argument("--in", dest="indir", required=True,
                      help="directory containing *_paths.json files")
    plot.set_defaults(fn=_cmd_plot)

    pre = sub.add_parser("presets", help="list or dump scenario presets")
    pre.add_argument("--dump", action="store_true",
                     help="print full preset JSON instead of the listing")
    pre.set_defaults(fn=_cmd_presets)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
