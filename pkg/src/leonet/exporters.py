"""Deterministic artifact writers: CSV tables and GeoJSON documents.

All floats are written with fixed six-decimal formatting and rows follow the
run's natural order, so re-running an identical scenario reproduces the
output byte for byte.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from .constellation import Constellation
from .geometry import eci_to_geodetic
from .harness import ExperimentResult, PathLogRow
from .metrics import ConnectionSeries, ConnectionSummary
from .scenario import Scenario, scenario_to_dict
from .topology import EislStats, Snapshot

FORMAT_CSV = "csv"
FORMAT_GEOJSON = "geojson"
FORMATS = (FORMAT_CSV, FORMAT_GEOJSON)


def _f(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def _i(x: int | None) -> str:
    return "" if x is None else str(x)


def _t(t: datetime) -> str:
    return t.astimezone(timezone.utc).isoformat()


def _parse_t(text: str) -> datetime:
    return datetime.fromisoformat(text)


def write_paths_csv(rows: Sequence[PathLogRow], path: FsPath) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "t",
                "algorithm",
                "src_station",
                "dst_station",
                "src_sat",
                "hop_list",
                "latency_ms",
                "hops",
                "status",
            ]
        )
        for r in rows:
            w.writerow(
                [
                    _t(r.t),
                    r.algorithm,
                    r.src_station,
                    r.dst_station,
                    r.src_sat,
                    "-".join(str(s) for s in r.hop_list),
                    _f(r.latency_ms),
                    r.hops,
                    r.status,
                ]
            )


def read_paths_csv(path: FsPath) -> list[PathLogRow]:
    rows: list[PathLogRow] = []
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            hops = tuple(int(s) for s in rec["hop_list"].split("-"))
            rows.append(
                PathLogRow(
                    t=_parse_t(rec["t"]),
                    algorithm=rec["algorithm"],
                    src_station=rec["src_station"],
                    dst_station=rec["dst_station"],
                    src_sat=int(rec["src_sat"]),
                    hop_list=hops,
                    latency_ms=float(rec["latency_ms"]),
                    hops=int(rec["hops"]),
                    status=rec["status"],
                )
            )
    return rows


def write_metrics_csv(series: Sequence[ConnectionSeries], path: FsPath) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "t",
                "src_station",
                "dst_station",
                "algorithm",
                "covered_src",
                "covered_dst",
                "valid",
                "n_paths",
                "n_drops",
                "psi",
                "latency_min_ms",
                "latency_avg_ms",
                "latency_max_ms",
                "hops_min",
                "hops_avg",
                "hops_max",
                "gamma",
                "stretch_min",
                "stretch_avg",
                "stretch_max",
                "vertex_changes",
                "geodesic_km",
                "geodesic_latency_ms",
            ]
        )
        for s in series:
            for st in s.stamps:
                w.writerow(
                    [
                        _t(st.t),
                        s.src_ei,
                        s.dst_ei,
                        s.algorithm,
                        int(st.covered_src),
                        int(st.covered_dst),
                        int(st.valid),
                        st.n_paths,
                        st.n_drops,
                        _i(st.psi),
                        _f(st.latency_min_ms),
                        _f(st.latency_avg_ms),
                        _f(st.latency_max_ms),
                        _i(st.hops_min),
                        _f(st.hops_avg),
                        _i(st.hops_max),
                        _f(st.gamma),
                        _f(st.stretch_min),
                        _f(st.stretch_avg),
                        _f(st.stretch_max),
                        _i(st.vertex_changes),
                        _f(st.geodesic_km),
                        _f(st.geodesic_latency_ms),
                    ]
                )


def write_summary_csv(summaries: Sequence[ConnectionSummary], path: FsPath) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "src_station",
                "dst_station",
                "algorithm",
                "n_stamps",
                "n_valid",
                "n_invalid",
                "reachable_probability",
                "latency_min_ms",
                "latency_avg_ms",
                "latency_max_ms",
                "hops_min",
                "hops_avg",
                "hops_max",
                "gamma_median",
                "stretch_max",
                "frac_changes_le_20",
            ]
        )
        for s in summaries:
            w.writerow(
                [
                    s.src_ei,
                    s.dst_ei,
                    s.algorithm,
                    s.n_stamps,
                    s.n_valid,
                    s.n_invalid,
                    _f(s.reachable_probability),
                    _f(s.latency.minimum if s.latency else None),
                    _f(s.latency.average if s.latency else None),
                    _f(s.latency.maximum if s.latency else None),
                    _f(s.hops.minimum if s.hops else None),
                    _f(s.hops.average if s.hops else None),
                    _f(s.hops.maximum if s.hops else None),
                    _f(s.gamma_median),
                    _f(s.stretch_max),
                    _f(s.frac_changes_le_20),
                ]
            )


def write_cdf_csv(
    series: Sequence[ConnectionSeries],
    quantity: str,
    path: FsPath,
) -> None:
    """CDF of per-stamp values (averages for latency/hops, max for stretch)."""
    pick = {
        "latency": lambda st: st.latency_avg_ms,
        "hops": lambda st: st.hops_avg,
        "stretch": lambda st: st.stretch_max,
        "gamma": lambda st: st.gamma,
        "vertex_changes": lambda st: st.vertex_changes,
    }[quantity]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src_station", "dst_station", "algorithm", "value", "cum_fraction"])
        for s in series:
            vals = sorted(
                float(v) for st in s.stamps if (v := pick(st)) is not None
            )
            n = len(vals)
            for i, v in enumerate(vals, start=1):
                w.writerow([s.src_ei, s.dst_ei, s.algorithm, _f(v), _f(i / n)])


def write_edges_csv(snapshots: Iterable[Snapshot], path: FsPath) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "src", "dst", "kind", "length_km", "latency_ms"])
        for snap in snapshots:
            ts = _t(snap.t)
            for link in snap.iter_links():
                w.writerow(
                    [ts, link.node_a, link.node_b, link.kind, _f(link.length_km), _f(link.latency_ms)]
                )


def write_direction_histogram_csv(hist: np.ndarray, path: FsPath) -> None:
    if hist.shape != (90,):
        raise ValueError("expected 90 one-degree bins")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_start_deg", "bin_end_deg", "fraction"])
        for i, v in enumerate(hist):
            w.writerow([i, i + 1, f"{v:.9f}"])


def write_eisl_csv(stats: dict[float, EislStats], step_s: float, out_dir: FsPath) -> None:
    with (out_dir / "eisl_counts.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l_h_km", "stamp", "count"])
        for r in sorted(stats):
            for i, c in enumerate(stats[r].per_stamp_counts):
                w.writerow([_f(r), i, c])
    with (out_dir / "eisl_episodes.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l_h_km", "duration_s"])
        for r in sorted(stats):
            for d in stats[r].episode_durations_s:
                w.writerow([_f(r), _f(d)])


# -- GeoJSON -------------------------------------------------------------------


def _geo(obj: dict, path: FsPath) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def _sat_lonlat(snap: Snapshot, sat: int) -> list[float]:
    epoch = snap.constellation.config.epoch
    g = eci_to_geodetic(snap.sat_positions[sat], snap.t, epoch)
    return [round(g.lon_deg, 6), round(g.lat_deg, 6)]


def snapshot_nodes_geojson(snap: Snapshot) -> dict:
    feats = []
    for s in range(snap.sat_count):
        feats.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": _sat_lonlat(snap, s)},
                "properties": {"id": s, "kind": "satellite"},
            }
        )
    for i, st in enumerate(snap.stations):
        g = snap.station_geodetic[i]
        feats.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [round(g.lon_deg, 6), round(g.lat_deg, 6)],
                },
                "properties": {"id": snap.station_node(i), "kind": st.kind, "name": st.name},
            }
        )
    return {"type": "FeatureCollection", "features": feats}


def snapshot_links_geojson(snap: Snapshot) -> dict:
    feats = []
    for link in snap.iter_links():
        coords = []
        for node in (link.node_a, link.node_b):
            if node < snap.sat_count:
                coords.append(_sat_lonlat(snap, node))
            else:
                g = snap.station_geodetic[node - snap.sat_count]
                coords.append([round(g.lon_deg, 6), round(g.lat_deg, 6)])
        feats.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {
                    "kind": link.kind,
                    "length_km": round(link.length_km, 3),
                    "latency_ms": round(link.latency_ms, 6),
                },
            }
        )
    return {"type": "FeatureCollection", "features": feats}


def path_geojson(snap: Snapshot, row: PathLogRow) -> dict:
    """A delivered path as a LineString of satellite subpoints.

    The hop_count property equals the vertex count minus one.
    """
    coords = [_sat_lonlat(snap, s) for s in row.hop_list]
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": coords},
        "properties": {
            "t": _t(row.t),
            "algorithm": row.algorithm,
            "src_station": row.src_station,
            "dst_station": row.dst_station,
            "hop_count": len(coords) - 1,
            "latency_ms": round(row.latency_ms, 6),
            "status": row.status,
        },
    }


def paths_geojson(scenario: Scenario, rows: Sequence[PathLogRow]) -> dict:
    """All delivered log rows as LineString features (snapshots rebuilt per stamp)."""
    from .constellation import build_walker
    from .topology import build_persistent_isls, snapshot as build_snapshot

    constellation = build_walker(scenario.constellation)
    template = build_persistent_isls(constellation, scenario.pattern)
    cache: dict[datetime, Snapshot] = {}
    feats = []
    for r in rows:
        if not r.status.startswith("delivered"):
            continue
        snap = cache.get(r.t)
        if snap is None:
            snap = build_snapshot(
                constellation,
                scenario.stations,
                scenario.pattern,
                r.t,
                scenario.elevation_min_deg,
                template=template,
            )
            cache[r.t] = snap
        feats.append(path_geojson(snap, r))
    return {"type": "FeatureCollection", "features": feats}


# -- top-level export ----------------------------------------------------------


def export_result(
    result: ExperimentResult, fmt: str, out_dir: FsPath
) -> list[FsPath]:
    """Write the run artifacts; returns the file list.

    CSV is always written (paths, per-stamp metrics, per-connection summary,
    CDF tables, run metadata); the geojson format additionally renders the
    delivered paths.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[FsPath] = []

    def out(name: str) -> FsPath:
        p = out_dir / name
        written.append(p)
        return p

    write_paths_csv(result.path_rows, out("paths.csv"))
    write_metrics_csv(result.series, out("metrics.csv"))
    write_summary_csv(result.summaries, out("summary.csv"))
    for q in ("latency", "hops", "stretch"):
        write_cdf_csv(result.series, q, out(f"{q}_cdf.csv"))
    meta = scenario_to_dict(result.scenario)
    meta["failures"] = [[_t(t), msg] for t, msg in result.failures]
    out("metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if fmt == FORMAT_GEOJSON:
        _geo(paths_geojson(result.scenario, result.path_rows), out("paths.geojson"))
    return written
