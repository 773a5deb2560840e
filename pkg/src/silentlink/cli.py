"""Command-line interface.

    silentlink run --config mission.json [--seed N] [--headless|--gateway] [--out DIR]
    silentlink replay --trace trace.jsonl
    silentlink ingest --csv log.csv --config mission.json [--out DIR]
    silentlink compare --a runA/ --b runB/
    silentlink heatmap --trace trace.jsonl --cell 5 [--out heatmap.csv]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    compare_runs,
    evaluate_compression,
    export_heatmap,
    export_selected_csv,
    load_trace,
)
from .compression import EnvCompressorConfig
from .config import ConfigError, SimConfig
from .conformance import check_trace
from .engine import Engine
from .telemetry import ChannelKind, SensorChannel, ingest_log_csv


def _cmd_run(args) -> int:
    config = SimConfig.load(args.config).with_overrides(seed=args.seed)
    gateway_mode = args.gateway or (config.operator == "gateway" and not args.headless)
    if gateway_mode:
        from .gateway import serve

        serve(config, host=args.host, port=args.port, speedup=args.speedup,
              out_dir=args.out)
        return 0
    engine = Engine(config)
    metrics = engine.run()
    if args.out:
        trace_path, metrics_path = engine.write_outputs(args.out)
        print(f"trace:   {trace_path}")
        print(f"metrics: {metrics_path}")
    print(json.dumps(metrics.to_dict() | {"queue_depth": "..."}, indent=2, sort_keys=True))
    return 0


def _cmd_replay(args) -> int:
    records = load_trace(args.trace)
    result = check_trace(records)
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec.get("kind", "?")] = counts.get(rec.get("kind", "?"), 0) + 1
    print(f"records: {len(records)}")
    for kind in sorted(counts):
        print(f"  {kind}: {counts[kind]}")
    print(f"phases: {' -> '.join(dict.fromkeys(result.phases_seen))}")
    if result.ok:
        print("conformance: OK")
        return 0
    print("conformance: FAILED")
    for v in result.violations:
        print(f"  {v}")
    return 1


def _cmd_ingest(args) -> int:
    config = SimConfig.load(args.config)
    channels = [e.channel() for e in config.env_channels]
    schema = {c.name: c.id for c in channels}
    if args.map:
        schema = {}
        channels = []
        for pair in args.map.split(","):
            name, _, spec = pair.partition(":")
            cid_text, _, kind = spec.partition(":")
            cid = int(cid_text)
            kind = kind or "environmental"
            schema[name] = cid
            channels.append(
                SensorChannel(cid, ChannelKind(kind), "", 1.0, name=name)
            )
    samples = ingest_log_csv(args.csv, schema)
    env_spec = config.env_channels[0]
    report = evaluate_compression(
        samples,
        channels,
        EnvCompressorConfig(env_spec.window, env_spec.threshold),
        process_var=config.process_var,
        measurement_var=config.measurement_var,
        include_interior=config.include_interior,
    )
    print(json.dumps(report.to_dict(), indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        export_selected_csv(samples, report, out / "selected_points.csv")
        (out / "compression.json").write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {out / 'selected_points.csv'}")
    return 0


def _cmd_compare(args) -> int:
    comparison = compare_runs(args.a, args.b)
    width = max(len(k) for k, _, _ in comparison.table())
    print(f"{'metric'.ljust(width)}  {'run A':>16}  {'run B':>16}")
    for key, a, b in comparison.table():
        print(f"{key.ljust(width)}  {str(a):>16}  {str(b):>16}")
    return 0


def _cmd_heatmap(args) -> int:
    records = load_trace(args.trace)
    out = args.out or "heatmap.csv"
    n = export_heatmap(records, args.cell, out)
    print(f"wrote {n} cells to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="silentlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a mission simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--headless", action="store_true", help="no operator (default)")
    mode.add_argument("--gateway", action="store_true", help="serve the operator gateway")
    p.add_argument("--out", default=None, help="directory for trace/metrics files")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--speedup", type=float, default=1.0,
                   help="gateway pacing: simulated seconds per wall second")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay", help="summarize and conformance-check a trace")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("ingest", help="run the compression pipeline over a CSV log")
    p.add_argument("--csv", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--map", default=None,
                   help="override schema: name:id[:kind],name:id[:kind],...")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("compare", help="compare two run output directories")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("heatmap", help="grid-binned means of environmental samples")
    p.add_argument("--trace", required=True)
    p.add_argument("--cell", type=float, required=True, help="cell size in meters")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_heatmap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
