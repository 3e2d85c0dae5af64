"""Command-line entry point.

Subcommands:
  generate  constellation + topology artifacts (edge lists, direction
            histogram, node/link GeoJSON, crossing-link statistics)
  simulate  run the scenario and export path logs and metrics
  analyze   recompute metrics from an existing path log
  export    convert a path log to GeoJSON

Common flags: --scenario, --out, --format {csv,geojson}, --parallel N.
The LEONET_OUT environment variable overrides the output directory (and
nothing else).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path as FsPath

from .constellation import build_walker
from .exporters import (
    FORMAT_CSV,
    FORMAT_GEOJSON,
    FORMATS,
    _geo,
    export_result,
    paths_geojson,
    read_paths_csv,
    snapshot_links_geojson,
    snapshot_nodes_geojson,
    write_direction_histogram_csv,
    write_edges_csv,
    write_eisl_csv,
    write_metrics_csv,
    write_summary_csv,
)
from .harness import analyze_rows, run_experiment
from .scenario import load_scenario
from .topology import (
    build_persistent_isls,
    direction_histogram,
    eisl_statistics,
    snapshot,
)

ENV_OUT = "LEONET_OUT"


def _out_dir(args: argparse.Namespace) -> FsPath:
    out = os.environ.get(ENV_OUT) or args.out
    if not out:
        raise SystemExit("an output directory is required (--out or LEONET_OUT)")
    p = FsPath(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _iter_snapshots(scenario):
    constellation = build_walker(scenario.constellation)
    template = build_persistent_isls(constellation, scenario.pattern)
    for t in scenario.time.stamps():
        yield snapshot(
            constellation,
            scenario.stations,
            scenario.pattern,
            t,
            scenario.elevation_min_deg,
            template=template,
        )


def _cmd_generate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    out = _out_dir(args)
    write_edges_csv(_iter_snapshots(scenario), out / "edges.csv")
    hist = direction_histogram(_iter_snapshots(scenario))
    write_direction_histogram_csv(hist, out / "direction_histogram.csv")
    if scenario.eisl_l_h_km is not None:
        stats = eisl_statistics(
            _iter_snapshots(scenario), [scenario.eisl_l_h_km], scenario.time.step_s
        )
        write_eisl_csv(stats, scenario.time.step_s, out)
    if args.format == FORMAT_GEOJSON:
        first = next(iter(_iter_snapshots(scenario)))
        _geo(snapshot_nodes_geojson(first), out / "nodes.geojson")
        _geo(snapshot_links_geojson(first), out / "links.geojson")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    result = run_experiment(scenario, parallel=args.parallel)
    export_result(result, args.format, _out_dir(args))
    if result.failures:
        for t, msg in result.failures:
            print(f"stamp {t} failed: {msg}", file=sys.stderr)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    rows = read_paths_csv(FsPath(args.paths))
    result = analyze_rows(scenario, rows)
    out = _out_dir(args)
    write_metrics_csv(result.series, out / "metrics.csv")
    write_summary_csv(result.summaries, out / "summary.csv")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    rows = read_paths_csv(FsPath(args.paths))
    out = _out_dir(args)
    if args.format != FORMAT_GEOJSON:
        raise SystemExit("export converts a path log to geojson; use --format geojson")
    _geo(paths_geojson(scenario, rows), out / "paths.geojson")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leonet",
        description="LEO constellation network simulator and geographic router",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, parallel: bool = False) -> None:
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help=f"output directory (or set {ENV_OUT})")
        p.add_argument("--format", choices=FORMATS, default=FORMAT_CSV)
        if parallel:
            p.add_argument("--parallel", type=int, default=1, help="worker processes")

    p_gen = sub.add_parser("generate", help="constellation and topology artifacts")
    common(p_gen)
    p_gen.set_defaults(func=_cmd_generate)

    p_sim = sub.add_parser("simulate", help="run the scenario end to end")
    common(p_sim, parallel=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ana = sub.add_parser("analyze", help="recompute metrics from a path log")
    common(p_ana)
    p_ana.add_argument("--paths", required=True, help="paths.csv from a previous run")
    p_ana.set_defaults(func=_cmd_analyze)

    p_exp = sub.add_parser("export", help="convert a path log to GeoJSON")
    common(p_exp)
    p_exp.add_argument("--paths", required=True, help="paths.csv from a previous run")
    p_exp.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
