"""Connection-level metrics over traced path sets.

Conventions: a stamp produces a reachability record only when both stations
are covered (an uncovered endpoint is an access gap, not a routing failure,
and is reported separately as an invalid stamp). A stamp is "valid" for
latency/hop/diversity statistics when both stations are covered and at least
one path was delivered. Edge-link lengths count toward latency and stretch.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Protocol, Sequence

from .geometry import (
    SPEED_OF_LIGHT_KM_PER_S,
    GeodeticPoint,
    geodesic_distance,
)

# reference propagation speed for the geodesic yardstick: two thirds of c,
# the usual fiber-optic figure
FIBER_SPEED_KM_PER_S = 2.0 * SPEED_OF_LIGHT_KM_PER_S / 3.0


class RoutedPath(Protocol):
    """Minimal path surface the metrics need; satisfied by routing.Path and
    by rows parsed back from a path log."""

    sats: tuple[int, ...]

    @property
    def delivered(self) -> bool: ...

    @property
    def hops(self) -> int: ...

    @property
    def total_km(self) -> float: ...

    @property
    def latency_ms(self) -> float: ...


@dataclass(frozen=True)
class ReachabilityRecord:
    """Delivery outcome for one (connection, stamp): 1 if any path arrived."""

    src_ei: str
    dst_ei: str
    t: datetime
    psi: int

    def __post_init__(self) -> None:
        if self.psi not in (0, 1):
            raise ValueError("psi must be 0 or 1")


def reachable_probability(records: Sequence[ReachabilityRecord]) -> float:
    """Mean delivery indicator over records (pairs x stamps)."""
    if not records:
        raise ValueError("no reachability records")
    return sum(r.psi for r in records) / len(records)


def path_independence(paths: Iterable[RoutedPath]) -> float:
    """Vertex count over edge count of the deduplicated satellite-only union.

    Higher values mean less shared infrastructure between the paths. The
    union must contain at least one satellite link; edge links never count.
    """
    verts: set[int] = set()
    edges: set[tuple[int, int]] = set()
    n = 0
    for p in paths:
        n += 1
        verts.update(p.sats)
        for a, b in zip(p.sats, p.sats[1:]):
            edges.add((a, b) if a < b else (b, a))
    if n == 0:
        raise ValueError("path set is empty")
    if not edges:
        raise ValueError("path union has no satellite links")
    return len(verts) / len(edges)


def path_evolution(before: Iterable[RoutedPath], after: Iterable[RoutedPath]) -> int:
    """Size of the symmetric difference of the two sets' satellite vertices."""
    va: set[int] = set()
    vb: set[int] = set()
    for p in before:
        va.update(p.sats)
    for p in after:
        vb.update(p.sats)
    return len(va ^ vb)


def stretch(path: RoutedPath, src: GeodeticPoint, dst: GeodeticPoint) -> float:
    """Traveled length (edge links included) over the station great-circle.

    Only meaningful for delivered paths and distinct station positions.
    """
    if not path.delivered:
        raise ValueError("stretch is defined for delivered paths only")
    geo = geodesic_distance(src, dst)
    if geo == 0.0:
        raise ValueError("coincident stations have no stretch")
    return path.total_km / geo


def geodesic_reference_latency_ms(geodesic_km: float) -> float:
    """Latency yardstick: the station great-circle at fiber speed (2c/3)."""
    return geodesic_km / FIBER_SPEED_KM_PER_S * 1000.0


# -- per-connection series -----------------------------------------------------


@dataclass(frozen=True)
class StampStats:
    """Everything measured for one (connection, algorithm, stamp)."""

    t: datetime
    covered_src: bool
    covered_dst: bool
    n_paths: int
    n_drops: int
    psi: int | None  # None when either endpoint is uncovered
    latency_min_ms: float | None
    latency_avg_ms: float | None
    latency_max_ms: float | None
    hops_min: int | None
    hops_avg: float | None
    hops_max: int | None
    gamma: float | None
    stretch_min: float | None
    stretch_avg: float | None
    stretch_max: float | None
    vertex_changes: int | None
    geodesic_km: float
    geodesic_latency_ms: float

    @property
    def valid(self) -> bool:
        return self.covered_src and self.covered_dst and self.n_paths > 0


def make_stamp_stats(
    t: datetime,
    covered_src: bool,
    covered_dst: bool,
    delivered: Sequence[RoutedPath],
    n_drops: int,
    src_point: GeodeticPoint,
    dst_point: GeodeticPoint,
    prev_delivered: Sequence[RoutedPath] | None,
) -> StampStats:
    """Aggregate one stamp's delivered paths into a stats row.

    prev_delivered is the delivered set of the directly preceding valid
    stamp, or None when there is no such stamp (evolution undefined).
    """
    geo = geodesic_distance(src_point, dst_point)
    covered = covered_src and covered_dst
    psi = (1 if delivered else 0) if covered else None
    lat = hop = gam = st = None
    stretch_vals: list[float] | None = None
    if delivered:
        lats = [p.latency_ms for p in delivered]
        hops = [p.hops for p in delivered]
        lat = (min(lats), sum(lats) / len(lats), max(lats))
        hop = (min(hops), sum(hops) / len(hops), max(hops))
        try:
            gam = path_independence(delivered)
        except ValueError:
            gam = None  # all-bent-pipe union has no satellite links
        if geo > 0.0:
            stretch_vals = [p.total_km / geo for p in delivered]
            st = (min(stretch_vals), sum(stretch_vals) / len(stretch_vals), max(stretch_vals))
    changes = (
        path_evolution(prev_delivered, delivered)
        if delivered and prev_delivered is not None
        else None
    )
    return StampStats(
        t=t,
        covered_src=covered_src,
        covered_dst=covered_dst,
        n_paths=len(delivered),
        n_drops=n_drops,
        psi=psi,
        latency_min_ms=lat[0] if lat else None,
        latency_avg_ms=lat[1] if lat else None,
        latency_max_ms=lat[2] if lat else None,
        hops_min=hop[0] if hop else None,
        hops_avg=hop[1] if hop else None,
        hops_max=hop[2] if hop else None,
        gamma=gam,
        stretch_min=st[0] if st else None,
        stretch_avg=st[1] if st else None,
        stretch_max=st[2] if st else None,
        vertex_changes=changes,
        geodesic_km=geo,
        geodesic_latency_ms=geodesic_reference_latency_ms(geo),
    )


@dataclass(frozen=True)
class ConnectionSeries:
    """Time series of stamp stats for one (connection, algorithm)."""

    src_ei: str
    dst_ei: str
    algorithm: str
    stamps: tuple[StampStats, ...]

    def valid_stamps(self) -> tuple[StampStats, ...]:
        return tuple(s for s in self.stamps if s.valid)


@dataclass(frozen=True)
class SeriesStats:
    """Order statistics of one quantity over the valid stamps of a series."""

    minimum: float
    average: float
    maximum: float
    cdf: tuple[tuple[float, float], ...]  # (value, cumulative fraction)


def cdf_table(values: Sequence[float]) -> tuple[tuple[float, float], ...]:
    if not values:
        raise ValueError("no values")
    xs = sorted(values)
    n = len(xs)
    out: list[tuple[float, float]] = []
    for i, x in enumerate(xs, start=1):
        if out and out[-1][0] == x:
            out[-1] = (x, i / n)
        else:
            out.append((x, i / n))
    return tuple(out)


def _series_stats(mins: list[float], avgs: list[float], maxs: list[float]) -> SeriesStats:
    return SeriesStats(
        minimum=min(mins),
        average=sum(avgs) / len(avgs),
        maximum=max(maxs),
        cdf=cdf_table(avgs),
    )


def latency_stats(series: ConnectionSeries) -> SeriesStats:
    """Latency summary over valid stamps: global min/max, mean of per-stamp
    means, CDF over per-stamp means. All-invalid series are rejected."""
    valid = series.valid_stamps()
    if not valid:
        raise ValueError("series has no valid stamps")
    return _series_stats(
        [s.latency_min_ms for s in valid],
        [s.latency_avg_ms for s in valid],
        [s.latency_max_ms for s in valid],
    )


def hop_stats(series: ConnectionSeries) -> SeriesStats:
    """Hop-count summary over valid stamps, same shape as latency_stats."""
    valid = series.valid_stamps()
    if not valid:
        raise ValueError("series has no valid stamps")
    return _series_stats(
        [float(s.hops_min) for s in valid],
        [float(s.hops_avg) for s in valid],
        [float(s.hops_max) for s in valid],
    )


@dataclass(frozen=True)
class ConnectionSummary:
    """Per-connection rollup used by reports and acceptance checks."""

    src_ei: str
    dst_ei: str
    algorithm: str
    n_stamps: int
    n_valid: int
    n_invalid: int
    reachable_probability: float | None
    latency: SeriesStats | None
    hops: SeriesStats | None
    gamma_median: float | None
    stretch_max: float | None
    frac_changes_le_20: float | None


def summarize(series: ConnectionSeries) -> ConnectionSummary:
    valid = series.valid_stamps()
    psis = [s.psi for s in series.stamps if s.psi is not None]
    gammas = [s.gamma for s in valid if s.gamma is not None]
    stretches = [s.stretch_max for s in valid if s.stretch_max is not None]
    changes = [s.vertex_changes for s in series.stamps if s.vertex_changes is not None]
    return ConnectionSummary(
        src_ei=series.src_ei,
        dst_ei=series.dst_ei,
        algorithm=series.algorithm,
        n_stamps=len(series.stamps),
        n_valid=len(valid),
        n_invalid=len(series.stamps) - len(valid),
        reachable_probability=(sum(psis) / len(psis)) if psis else None,
        latency=latency_stats(series) if valid else None,
        hops=hop_stats(series) if valid else None,
        gamma_median=statistics.median(gammas) if gammas else None,
        stretch_max=max(stretches) if stretches else None,
        frac_changes_le_20=(
            sum(1 for c in changes if c <= 20) / len(changes) if changes else None
        ),
    )
