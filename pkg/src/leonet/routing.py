"""Packet forwarding: geographic greedy strategies and shortest-path baselines.

The greedy strategies operate hop by hop on frozen destination coordinates:
the ingress node converts the destination's Earth-fixed position to the
inertial frame once, stamps it into the header, and every relay reuses that
address unchanged. Two per-hop rules are provided: pick the neighbor whose
direction best aligns with the destination bearing (closest pointing,
"cpi"), or the neighbor closest to the destination in space (nearest
position, "nfp"). Neither rule requires progress; a relay that would hand
the packet straight back drops it instead, and a relay with no neighbors
drops it as a dead end.

Baselines are exact shortest paths over the satellite graph under a latency
or unit (hop) weight, computed with iterated relaxation sweeps and a
deterministic lowest-id tie-break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .geometry import ecef_to_eci, eci_to_ecef, link_latency_ms
from .topology import Snapshot

DROP_DEAD_END = "dead-end"
DROP_LOOP = "loop"

STRATEGY_CPI = "cpi"
STRATEGY_NFP = "nfp"

ALGO_MPLF_CPI = "mplf-cpi"
ALGO_MPLF_NFP = "mplf-nfp"
ALGO_SP = "sp"
ALGO_LH = "lh"
ALGORITHMS = (ALGO_MPLF_CPI, ALGO_MPLF_NFP, ALGO_SP, ALGO_LH)

WEIGHT_LATENCY = "latency"
WEIGHT_UNIT = "unit"


class UnknownEquipmentError(KeyError):
    """Lookup of an equipment identifier that no entry exists for."""


@dataclass(frozen=True, eq=False)
class MplfHeader:
    """Routing header carried by a packet from ingress to delivery.

    Addresses are inertial-frame coordinates fixed at the ingress timestamp;
    relays never re-derive them.
    """

    dst_ei: str
    dst_saddr: np.ndarray
    src_ei: str
    src_saddr: np.ndarray
    ingress: datetime


@dataclass(frozen=True)
class _TableEntry:
    ecef: tuple[float, float, float]
    updated: datetime


class LocationTable:
    """EI -> last known Earth-fixed position with its update timestamp."""

    def __init__(self) -> None:
        self._entries: dict[str, _TableEntry] = {}

    def update(self, ei: str, ecef: np.ndarray, t: datetime) -> None:
        prev = self._entries.get(ei)
        if prev is not None and t < prev.updated:
            raise ValueError(
                f"update for {ei} at {t} precedes the stored timestamp {prev.updated}"
            )
        p = np.asarray(ecef, dtype=float)
        self._entries[ei] = _TableEntry((float(p[0]), float(p[1]), float(p[2])), t)

    def lookup(self, ei: str) -> tuple[np.ndarray, datetime]:
        entry = self._entries.get(ei)
        if entry is None:
            raise UnknownEquipmentError(ei)
        return np.array(entry.ecef), entry.updated

    def __contains__(self, ei: str) -> bool:
        return ei in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def ler_encapsulate(
    table: LocationTable, src_ei: str, dst_ei: str, t: datetime, epoch: datetime
) -> MplfHeader:
    """Build the routing header at the ingress edge router.

    Both endpoints are resolved through the location table and converted to
    the inertial frame at the ingress instant. Unknown EIs raise
    UnknownEquipmentError.
    """
    dst_ecef, _ = table.lookup(dst_ei)
    src_ecef, _ = table.lookup(src_ei)
    return MplfHeader(
        dst_ei=dst_ei,
        dst_saddr=ecef_to_eci(dst_ecef, t, epoch),
        src_ei=src_ei,
        src_saddr=ecef_to_eci(src_ecef, t, epoch),
        ingress=t,
    )


def record_delivery(table: LocationTable, header: MplfHeader, epoch: datetime) -> None:
    """On delivery, store the source's position as of the ingress stamp."""
    ecef = eci_to_ecef(header.src_saddr, header.ingress, epoch)
    table.update(header.src_ei, ecef, header.ingress)


# -- per-hop decisions -------------------------------------------------------


@dataclass(frozen=True)
class Next:
    neighbor: int


@dataclass(frozen=True)
class Deliver:
    station_ei: str


@dataclass(frozen=True)
class Drop:
    reason: str


ForwardDecision = Next | Deliver | Drop


class DecisionStats:
    """Collects the number of candidate evaluations per forwarding decision."""

    def __init__(self) -> None:
        self.comparisons: list[int] = []

    def record(self, n: int) -> None:
        self.comparisons.append(n)


def _pick(ids: np.ndarray, key: np.ndarray) -> int:
    # primary sort on the key, ties broken by the lowest satellite id
    return int(ids[np.lexsort((ids, key))[0]])


def forward_cpi(
    current_pos: np.ndarray,
    prev: int | None,
    dest_pos: np.ndarray,
    neighbor_ids: Sequence[int] | np.ndarray,
    neighbor_pos: np.ndarray,
    stats: DecisionStats | None = None,
) -> Next | Drop:
    """Pick the neighbor whose direction is most aligned with the destination.

    Alignment is the cosine between the neighbor displacement and the
    destination bearing from the current node. Equal cosines resolve to the
    lowest id. Handing the packet back to the previous relay is a loop drop;
    an empty candidate set is a dead end.
    """
    ids = np.asarray(neighbor_ids, dtype=np.int64)
    if ids.size == 0:
        return Drop(DROP_DEAD_END)
    if stats is not None:
        stats.record(int(ids.size))
    rel = np.asarray(neighbor_pos, dtype=float) - current_pos
    bearing = np.asarray(dest_pos, dtype=float) - current_pos
    bn = float(np.linalg.norm(bearing))
    rn = np.linalg.norm(rel, axis=1)
    if bn == 0.0 or np.any(rn == 0.0):
        raise ValueError("coincident nodes leave the bearing undefined")
    cos = (rel @ bearing) / (rn * bn)
    chosen = _pick(ids, -cos)
    if prev is not None and chosen == prev:
        return Drop(DROP_LOOP)
    return Next(chosen)


def forward_nfp(
    current_pos: np.ndarray,
    prev: int | None,
    dest_pos: np.ndarray,
    neighbor_ids: Sequence[int] | np.ndarray,
    neighbor_pos: np.ndarray,
    stats: DecisionStats | None = None,
) -> Next | Drop:
    """Pick the neighbor spatially closest to the destination.

    Pure greedy minimum over the candidate set; the current node's own
    distance plays no role. Ties resolve to the lowest id; returning to the
    previous relay is a loop drop, an empty candidate set a dead end.
    """
    ids = np.asarray(neighbor_ids, dtype=np.int64)
    if ids.size == 0:
        return Drop(DROP_DEAD_END)
    if stats is not None:
        stats.record(int(ids.size))
    d = np.linalg.norm(np.asarray(neighbor_pos, dtype=float) - dest_pos, axis=1)
    chosen = _pick(ids, d)
    if prev is not None and chosen == prev:
        return Drop(DROP_LOOP)
    return Next(chosen)


_FORWARDERS = {STRATEGY_CPI: forward_cpi, STRATEGY_NFP: forward_nfp}


# -- paths -------------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    """One traced or computed route between edge attachments.

    The satellite sequence always has at least one element; a packet that is
    delivered by its ingress satellite makes a zero-hop path. Edge-link
    lengths (up at the source, down at the destination) are attached when the
    endpoints are stations and count toward the totals.
    """

    sats: tuple[int, ...]
    isl_lengths_km: tuple[float, ...]
    status: str  # "delivered" | "dropped"
    drop_reason: str | None = None
    up_km: float | None = None
    down_km: float | None = None

    @property
    def delivered(self) -> bool:
        return self.status == "delivered"

    @property
    def hops(self) -> int:
        return len(self.sats) - 1

    @property
    def src_sat(self) -> int:
        return self.sats[0]

    @property
    def end_sat(self) -> int:
        return self.sats[-1]

    @property
    def isl_km(self) -> float:
        return float(sum(self.isl_lengths_km))

    @property
    def total_km(self) -> float:
        return self.isl_km + (self.up_km or 0.0) + (self.down_km or 0.0)

    @property
    def isl_latency_ms(self) -> float:
        return float(link_latency_ms(self.isl_km))

    @property
    def latency_ms(self) -> float:
        return float(link_latency_ms(self.total_km))

    def with_up(self, up_km: float) -> "Path":
        return replace(self, up_km=up_km)


def default_max_hops(snap: Snapshot) -> int:
    cfg = snap.constellation.config
    return 4 * (cfg.sats_per_plane + cfg.planes)


def trace_path(
    snap: Snapshot,
    strategy: str,
    src_sat: int,
    dest_station: str | int,
    max_hops: int | None = None,
    dest_pos: np.ndarray | None = None,
    stats: DecisionStats | None = None,
) -> Path:
    """Run one greedy trace from an ingress satellite toward a station.

    At every relay the station association is checked first (delivery), then
    the per-hop rule picks the next relay. The hop count is capped at
    max_hops (default 4 * (sats_per_plane + planes)); exceeding it drops the
    packet as a dead end. dest_pos overrides the destination coordinates,
    e.g. with the frozen header address; it defaults to the station's
    current inertial position.
    """
    if strategy not in _FORWARDERS:
        raise ValueError(f"unknown strategy {strategy!r}")
    forwarder = _FORWARDERS[strategy]
    if max_hops is None:
        max_hops = default_max_hops(snap)
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    dst_idx = snap.station_index(dest_station)
    if dest_pos is None:
        dest_pos = snap.station_positions[dst_idx]
    dest_pos = np.asarray(dest_pos, dtype=float)

    pos = snap.sat_positions
    sats = [src_sat]
    lengths: list[float] = []
    prev: int | None = None
    current = src_sat
    while True:
        if dst_idx in snap.sat_station.get(current, ()):
            down = float(np.linalg.norm(pos[current] - snap.station_positions[dst_idx]))
            return Path(tuple(sats), tuple(lengths), "delivered", down_km=down)
        if len(lengths) >= max_hops:
            return Path(tuple(sats), tuple(lengths), "dropped", drop_reason=DROP_DEAD_END)
        nbrs = snap.neighbors(current)
        decision = forwarder(pos[current], prev, dest_pos, nbrs, pos[nbrs], stats)
        if isinstance(decision, Drop):
            return Path(tuple(sats), tuple(lengths), "dropped", drop_reason=decision.reason)
        nxt = decision.neighbor
        lengths.append(float(np.linalg.norm(pos[nxt] - pos[current])))
        sats.append(nxt)
        prev, current = current, nxt


# -- shortest-path baselines --------------------------------------------------


def _single_source(
    snap: Snapshot, weight: str, seeds: Iterable[tuple[int, float]]
) -> np.ndarray:
    """Distances from seed satellites (seeded at given offsets) over the
    satellite graph, by relaxation sweeps to a fixed point."""
    if weight not in (WEIGHT_LATENCY, WEIGHT_UNIT):
        raise ValueError(f"unknown weight {weight!r}")
    g = snap.bf_graph()
    w = g.in_len if weight == WEIGHT_LATENCY else np.ones_like(g.in_len)
    dist = np.full(snap.sat_count, np.inf)
    for sat, offset in seeds:
        dist[sat] = min(dist[sat], offset)
    if g.in_src.size == 0:
        return dist
    for _ in range(snap.sat_count + 1):
        cand = dist[g.in_src] + w
        best = np.minimum.reduceat(cand, g.seg_starts)
        new = np.minimum(dist[g.seg_nodes], best)
        if np.array_equal(new, dist[g.seg_nodes]):
            break
        dist[g.seg_nodes] = new
    return dist


def _walk_back(
    snap: Snapshot, weight: str, dist: np.ndarray, end: int, seed_values: dict[int, float]
) -> tuple[list[int], list[float]]:
    """Reconstruct one optimal satellite sequence ending at `end`.

    At each node the lowest-id predecessor whose relaxation reproduces the
    stored distance is taken; a seed node whose stored distance equals its
    seed offset terminates the walk. Deterministic by construction.
    """
    g = snap.bf_graph()
    sats = [end]
    lengths: list[float] = []
    node = end
    for _ in range(snap.sat_count + 1):
        if node in seed_values and dist[node] == seed_values[node]:
            sats.reverse()
            lengths.reverse()
            return sats, lengths
        srcs, lens = g.incoming(node)
        w = lens if weight == WEIGHT_LATENCY else np.ones_like(lens)
        ok = np.flatnonzero(dist[srcs] + w == dist[node])
        if ok.size == 0:
            raise RuntimeError("no predecessor reproduces the stored distance")
        k = int(ok[0])  # sources ascend within a segment: first hit = lowest id
        sats.append(int(srcs[k]))
        lengths.append(float(lens[k]))
        node = int(srcs[k])
    raise RuntimeError("path reconstruction exceeded the node count")


def bellman_ford(
    snap: Snapshot, weight: str, src: str | int, dst: str | int
) -> Path | None:
    """Exact shortest path between two snapshot nodes, or None if unreachable.

    Nodes are satellite indices or stations (EI, name, or node id). Stations
    act only as terminals: a route never relays through a third station.
    Under the latency weight the cost is propagation delay; under the unit
    weight it is the satellite hop count. Ties resolve to the lowest node id.
    """
    src_station = isinstance(src, str) or (isinstance(src, int) and src >= snap.sat_count)
    dst_station = isinstance(dst, str) or (isinstance(dst, int) and dst >= snap.sat_count)

    up_of: dict[int, float] = {}
    if src_station:
        i = snap.station_index(src)
        for s, ln in zip(snap.edge_sats[i], snap.edge_lengths[i]):
            up_of[int(s)] = float(ln)
        if weight == WEIGHT_LATENCY:
            seeds = {s: ln for s, ln in up_of.items()}
        else:
            seeds = {s: 0.0 for s in up_of}
    else:
        seeds = {int(src): 0.0}
    if not seeds:
        return None

    dist = _single_source(snap, weight, seeds.items())

    if dst_station:
        j = snap.station_index(dst)
        ends = snap.edge_sats[j]
        if ends.size == 0:
            return None
        downs = snap.edge_lengths[j]
        totals = dist[ends] + (downs if weight == WEIGHT_LATENCY else 0.0)
        if not np.any(np.isfinite(totals)):
            return None
        k = int(np.lexsort((ends, totals))[0])
        end, down = int(ends[k]), float(downs[k])
    else:
        end, down = int(dst), None
        if not math.isfinite(dist[end]):
            return None

    sats, lengths = _walk_back(snap, weight, dist, end, seeds)
    up = up_of.get(sats[0]) if src_station else None
    return Path(tuple(sats), tuple(lengths), "delivered", up_km=up, down_km=down)


# -- station-to-station path sets ---------------------------------------------


@dataclass(frozen=True)
class PathSet:
    """Equal-role paths between two stations at one stamp.

    `paths` holds delivered routes only; failed greedy traces are kept
    separately in `drops` for accounting.
    """

    src_ei: str
    dst_ei: str
    t: datetime
    algorithm: str
    paths: tuple[Path, ...]
    drops: tuple[Path, ...] = ()

    @property
    def any_delivered(self) -> bool:
        return len(self.paths) > 0


def enumerate_paths(
    snap: Snapshot,
    algorithm: str,
    src_station: str | int,
    dst_station: str | int,
    dest_pos: np.ndarray | None = None,
    max_hops: int | None = None,
    stats: DecisionStats | None = None,
) -> PathSet:
    """All equal-role paths between two stations under one algorithm.

    Greedy algorithms trace once per source-associated satellite (ascending
    id order). Baselines compute one path per (source-associated,
    destination-associated) satellite pair, so the set size is bounded by the
    product of the two association counts. An uncovered endpoint yields an
    empty set.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    si = snap.station_index(src_station)
    di = snap.station_index(dst_station)
    src_ei = snap.stations[si].ei
    dst_ei = snap.stations[di].ei
    src_sats = snap.edge_sats[si]
    dst_sats = snap.edge_sats[di]
    if src_sats.size == 0 or dst_sats.size == 0:
        return PathSet(src_ei, dst_ei, snap.t, algorithm, ())

    delivered: list[Path] = []
    drops: list[Path] = []
    if algorithm in (ALGO_MPLF_CPI, ALGO_MPLF_NFP):
        strategy = STRATEGY_CPI if algorithm == ALGO_MPLF_CPI else STRATEGY_NFP
        for k, s in enumerate(src_sats):
            p = trace_path(
                snap, strategy, int(s), di, max_hops=max_hops, dest_pos=dest_pos, stats=stats
            ).with_up(float(snap.edge_lengths[si][k]))
            (delivered if p.delivered else drops).append(p)
    else:
        weight = WEIGHT_LATENCY if algorithm == ALGO_SP else WEIGHT_UNIT
        for k, s1 in enumerate(src_sats):
            dist = _single_source(snap, weight, [(int(s1), 0.0)])
            seeds = {int(s1): 0.0}
            for m, s2 in enumerate(dst_sats):
                if not math.isfinite(dist[int(s2)]):
                    continue
                sats, lengths = _walk_back(snap, weight, dist, int(s2), seeds)
                delivered.append(
                    Path(
                        tuple(sats),
                        tuple(lengths),
                        "delivered",
                        up_km=float(snap.edge_lengths[si][k]),
                        down_km=float(snap.edge_lengths[di][m]),
                    )
                )
    return PathSet(src_ei, dst_ei, snap.t, algorithm, tuple(delivered), tuple(drops))
