"""Network topology: persistent inter-satellite links, station edge links,
transient crossing-mesh link detection, and per-stamp snapshots.

Persistent links come in two families: in-plane rings (each satellite linked
to its neighbors in the same orbital plane) and cross-plane links to the east
neighbor plane at one or two slot biases. A single-bias pattern gives degree 4,
the double-bias pattern degree 6. Transient crossing-mesh links (between an
ascending and a descending satellite within an activation radius) are detected
for statistics only and never enter the routing graph.

Node ids in a snapshot: satellites 0..S-1 (plane-major), stations S..S+G-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Iterator, Protocol

import numpy as np

from .constellation import Constellation
from .geometry import (
    GeodeticPoint,
    ecef_to_eci,
    elevation_angle,
    geodetic_to_ecef,
    link_equator_angle,
    link_latency_ms,
)

GRID_PLUS = "+Grid"
GRID_STAR = "*Grid"

KIND_IISL = "iISL"
KIND_SISL = "sISL"
KIND_EISL = "eISL"
KIND_GSL = "GSL"
KIND_MSL = "MSL"

_ISL_KIND_NAMES = (KIND_IISL, KIND_SISL)


@dataclass(frozen=True)
class IslPattern:
    """Persistent-link pattern: grid kind plus cross-plane slot biases.

    The single-bias grid takes exactly one bias from {-1, 0}; the double-bias
    grid takes both.
    """

    grid: str
    bias: tuple[int, ...]

    def __post_init__(self) -> None:
        bias = tuple(sorted(set(self.bias)))
        object.__setattr__(self, "bias", bias)
        if not set(bias) <= {-1, 0}:
            raise ValueError(f"bias values {bias} outside {{-1, 0}}")
        if self.grid == GRID_PLUS:
            if len(bias) != 1:
                raise ValueError(f"{GRID_PLUS} takes exactly one bias, got {bias}")
        elif self.grid == GRID_STAR:
            if bias != (-1, 0):
                raise ValueError(f"{GRID_STAR} requires biases (-1, 0), got {bias}")
        else:
            raise ValueError(f"unknown grid kind {self.grid!r}")


class PositionProvider(Protocol):
    def position_at(self, t: datetime) -> GeodeticPoint: ...


@dataclass(frozen=True)
class FixedPosition:
    point: GeodeticPoint

    def position_at(self, t: datetime) -> GeodeticPoint:
        return self.point


@dataclass(frozen=True)
class Station:
    """An edge node: fixed ground station or mobile platform.

    The EI is the network-wide equipment identifier, unique per scenario.
    """

    name: str
    ei: str
    kind: str  # "ground" | "mobile"
    provider: PositionProvider

    def __post_init__(self) -> None:
        if self.kind not in ("ground", "mobile"):
            raise ValueError(f"unknown station kind {self.kind!r}")

    def position_at(self, t: datetime) -> GeodeticPoint:
        return self.provider.position_at(t)


@dataclass(frozen=True)
class Link:
    """One undirected link at a stamp; endpoints are snapshot node ids."""

    node_a: int
    node_b: int
    kind: str
    length_km: float

    @property
    def latency_ms(self) -> float:
        return float(link_latency_ms(self.length_km))


@dataclass(frozen=True, eq=False)
class IslTemplate:
    """Time-invariant persistent-link edge list (canonical a < b, sorted)."""

    pairs: np.ndarray  # (E, 2) int32
    kinds: np.ndarray  # (E,) int8, 0 = in-plane, 1 = cross-plane

    @property
    def edge_count(self) -> int:
        return int(self.pairs.shape[0])

    def kind_name(self, edge: int) -> str:
        return _ISL_KIND_NAMES[int(self.kinds[edge])]


def build_persistent_isls(constellation: Constellation, pattern: IslPattern) -> IslTemplate:
    """Enumerate the persistent link template for a shell and pattern.

    Raises ValueError on degenerate shells that would need self-links
    (one satellite per plane, or cross-plane bias 0 with a single plane).
    """
    cfg = constellation.config
    n, p = cfg.sats_per_plane, cfg.planes
    pairs: list[tuple[int, int]] = []
    kinds: list[int] = []

    def add(a: int, b: int, kind: int) -> None:
        if a == b:
            raise ValueError("degenerate shell produces a self-link")
        pairs.append((min(a, b), max(a, b)))
        kinds.append(kind)

    for plane in range(p):
        base = plane * n
        for slot in range(n):
            add(base + slot, base + (slot + 1) % n, 0)
    for bias in pattern.bias:
        for plane in range(p):
            east = (plane + 1) % p
            for slot in range(n):
                add(plane * n + slot, east * n + (slot + bias) % n, 1)

    arr = np.array(pairs, dtype=np.int32)
    kind_arr = np.array(kinds, dtype=np.int8)
    # canonical order + simple-graph dedup (keeps the first kind seen)
    uniq, first = np.unique(arr, axis=0, return_index=True)
    return IslTemplate(pairs=uniq, kinds=kind_arr[first])


class Snapshot:
    """Immutable-by-convention picture of the network at one stamp.

    Holds inertial satellite states, persistent link lengths, station
    positions, and the station-satellite edge links at the minimum elevation.
    Transient crossing-mesh links are intentionally absent.
    """

    def __init__(
        self,
        t: datetime,
        constellation: Constellation,
        stations: tuple[Station, ...],
        template: IslTemplate,
        min_elevation_deg: float,
        *,
        sat_positions: np.ndarray | None = None,
        sat_velocities: np.ndarray | None = None,
        isl_lengths: np.ndarray | None = None,
    ) -> None:
        self.t = t
        self.constellation = constellation
        self.stations = stations
        self.template = template
        self.min_elevation_deg = float(min_elevation_deg)

        eis = [s.ei for s in stations]
        if len(set(eis)) != len(eis):
            raise ValueError("station EIs must be unique")

        pos = constellation.positions_at(t) if sat_positions is None else sat_positions
        vel = constellation.velocities_at(t) if sat_velocities is None else sat_velocities
        self.sat_positions = pos
        self.sat_velocities = vel
        self.isl_pairs = template.pairs
        self.isl_kinds = template.kinds
        if isl_lengths is None:
            diff = pos[template.pairs[:, 0]] - pos[template.pairs[:, 1]]
            isl_lengths = np.linalg.norm(diff, axis=1)
        self.isl_lengths = isl_lengths

        epoch = constellation.config.epoch
        self.station_geodetic = tuple(s.position_at(t) for s in stations)
        ecef = (
            np.stack([geodetic_to_ecef(g) for g in self.station_geodetic])
            if stations
            else np.zeros((0, 3))
        )
        self.station_ecef = ecef
        self.station_positions = (
            ecef_to_eci(ecef, t, epoch) if stations else np.zeros((0, 3))
        )

        # connect-all-visible edge links, per station
        self.edge_sats: list[np.ndarray] = []
        self.edge_lengths: list[np.ndarray] = []
        sat_station: dict[int, list[int]] = {}
        for i in range(len(stations)):
            els = elevation_angle(self.station_positions[i], pos)
            vis = np.flatnonzero(np.asarray(els) >= self.min_elevation_deg)
            lengths = np.linalg.norm(pos[vis] - self.station_positions[i], axis=1)
            self.edge_sats.append(vis.astype(np.int32))
            self.edge_lengths.append(lengths)
            for s in vis:
                sat_station.setdefault(int(s), []).append(i)
        self.sat_station = {k: tuple(v) for k, v in sat_station.items()}

        adj: list[list[int]] = [[] for _ in range(self.sat_count)]
        for a, b in template.pairs:
            adj[a].append(int(b))
            adj[b].append(int(a))
        self.sat_adj = [np.array(sorted(x), dtype=np.int32) for x in adj]
        self._bf_graph = None
        self._ei_index = {s.ei: i for i, s in enumerate(stations)}
        self._name_index = {s.name: i for i, s in enumerate(stations)}

    # -- node id scheme -------------------------------------------------
    @property
    def sat_count(self) -> int:
        return self.constellation.sat_count

    @property
    def node_count(self) -> int:
        return self.sat_count + len(self.stations)

    def station_node(self, index: int) -> int:
        return self.sat_count + index

    def station_index(self, key: str | int) -> int:
        """Resolve a station by EI, name, or snapshot node id."""
        if isinstance(key, int):
            idx = key - self.sat_count if key >= self.sat_count else key
            if not 0 <= idx < len(self.stations):
                raise KeyError(f"no station for node {key}")
            return idx
        if key in self._ei_index:
            return self._ei_index[key]
        if key in self._name_index:
            return self._name_index[key]
        raise KeyError(f"unknown station {key!r}")

    # -- queries ---------------------------------------------------------
    def covered(self, station: str | int) -> bool:
        return self.edge_sats[self.station_index(station)].size > 0

    def neighbors(self, sat: int) -> np.ndarray:
        return self.sat_adj[sat]

    def visible_sats(self, station: str | int) -> np.ndarray:
        return self.edge_sats[self.station_index(station)]

    def edge_length(self, station: str | int, sat: int) -> float:
        i = self.station_index(station)
        sats = self.edge_sats[i]
        k = int(np.searchsorted(sats, sat))
        if k >= sats.size or sats[k] != sat:
            raise KeyError(f"station {self.stations[i].ei} has no link to sat {sat}")
        return float(self.edge_lengths[i][k])

    def iter_links(self) -> Iterator[Link]:
        for e in range(self.template.edge_count):
            a, b = self.isl_pairs[e]
            yield Link(int(a), int(b), self.template.kind_name(e), float(self.isl_lengths[e]))
        for i, st in enumerate(self.stations):
            kind = KIND_GSL if st.kind == "ground" else KIND_MSL
            node = self.station_node(i)
            for s, ln in zip(self.edge_sats[i], self.edge_lengths[i]):
                yield Link(int(s), node, kind, float(ln))

    def bf_graph(self):
        """Directed incoming-edge arrays over the satellite graph, cached."""
        if self._bf_graph is None:
            src = np.concatenate([self.isl_pairs[:, 0], self.isl_pairs[:, 1]])
            dst = np.concatenate([self.isl_pairs[:, 1], self.isl_pairs[:, 0]])
            ln = np.concatenate([self.isl_lengths, self.isl_lengths])
            order = np.lexsort((src, dst))
            src, dst, ln = src[order], dst[order], ln[order]
            nodes, starts = np.unique(dst, return_index=True)
            self._bf_graph = _BfGraph(
                in_src=src.astype(np.int64),
                in_dst=dst.astype(np.int64),
                in_len=ln,
                seg_nodes=nodes.astype(np.int64),
                seg_starts=starts,
            )
        return self._bf_graph


@dataclass(frozen=True, eq=False)
class _BfGraph:
    in_src: np.ndarray
    in_dst: np.ndarray
    in_len: np.ndarray
    seg_nodes: np.ndarray
    seg_starts: np.ndarray

    def incoming(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """(sources, lengths) of edges into node, sources ascending."""
        k = int(np.searchsorted(self.seg_nodes, node))
        if k >= self.seg_nodes.size or self.seg_nodes[k] != node:
            return np.empty(0, dtype=np.int64), np.empty(0)
        lo = int(self.seg_starts[k])
        hi = int(self.seg_starts[k + 1]) if k + 1 < self.seg_starts.size else self.in_src.size
        return self.in_src[lo:hi], self.in_len[lo:hi]


def snapshot(
    constellation: Constellation,
    stations: Iterable[Station],
    pattern: IslPattern,
    t: datetime,
    min_elevation_deg: float,
    template: IslTemplate | None = None,
) -> Snapshot:
    """Assemble the network snapshot at stamp t.

    The persistent template may be passed in to amortize its construction
    across stamps; it is rebuilt from the pattern otherwise.
    """
    if template is None:
        template = build_persistent_isls(constellation, pattern)
    return Snapshot(t, constellation, tuple(stations), template, min_elevation_deg)


def synthetic_snapshot(
    t: datetime,
    constellation: Constellation,
    positions: np.ndarray,
    velocities: np.ndarray,
    pairs: np.ndarray,
    kinds: np.ndarray,
    lengths: np.ndarray | None = None,
    stations: tuple[Station, ...] = (),
    min_elevation_deg: float = 0.0,
) -> Snapshot:
    """Snapshot with caller-supplied states and (optionally) link lengths.

    Intended for analysis and tests where link weights are decoupled from
    geometry; forwarding still uses the supplied positions.
    """
    template = IslTemplate(pairs=np.asarray(pairs, dtype=np.int32), kinds=np.asarray(kinds, dtype=np.int8))
    return Snapshot(
        t,
        constellation,
        stations,
        template,
        min_elevation_deg,
        sat_positions=np.asarray(positions, dtype=float),
        sat_velocities=np.asarray(velocities, dtype=float),
        isl_lengths=None if lengths is None else np.asarray(lengths, dtype=float),
    )


def detect_eisls(snap: Snapshot, l_h_km: float) -> np.ndarray:
    """Transient crossing-mesh pairs at this stamp, canonical (a < b) rows.

    A pair qualifies when it is not persistently linked, its inertial distance
    is below the activation radius, and the two satellites move with opposite
    vertical sense (one ascending, one descending).
    """
    if l_h_km <= 0:
        raise ValueError("activation radius must be positive")
    pos = snap.sat_positions
    s = pos.shape[0]
    d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
    vz = snap.sat_velocities[:, 2]
    opposite = vz[:, None] * vz[None, :] < 0.0
    near = d2 < l_h_km * l_h_km
    cand = np.triu(near & opposite, k=1)
    cand[snap.isl_pairs[:, 0], snap.isl_pairs[:, 1]] = False
    a, b = np.nonzero(cand)
    return np.stack([a, b], axis=1).astype(np.int32) if a.size else np.empty((0, 2), dtype=np.int32)


@dataclass(frozen=True)
class EislStats:
    """Per-stamp counts and episode durations for one activation radius."""

    per_stamp_counts: tuple[int, ...]
    episode_durations_s: tuple[float, ...]

    @property
    def episode_count(self) -> int:
        return len(self.episode_durations_s)


def eisl_statistics(
    snapshots: Iterable[Snapshot], l_h_values_km: Iterable[float], step_s: float
) -> dict[float, EislStats]:
    """Track crossing-mesh link episodes over a snapshot sequence.

    An episode is a maximal run of consecutive stamps over which a given pair
    qualifies; its duration is run length times the step. Episodes still open
    at the final stamp are counted at their observed duration. Pair distances
    are computed once per stamp and shared across activation radii.
    """
    radii = sorted(set(float(v) for v in l_h_values_km))
    if not radii:
        raise ValueError("at least one activation radius is required")
    counts: dict[float, list[int]] = {r: [] for r in radii}
    open_runs: dict[float, dict[int, int]] = {r: {} for r in radii}
    durations: dict[float, list[float]] = {r: [] for r in radii}
    n_stamps = 0
    for snap in snapshots:
        n_stamps += 1
        pairs = detect_eisls(snap, radii[-1])
        if pairs.size:
            diff = snap.sat_positions[pairs[:, 0]] - snap.sat_positions[pairs[:, 1]]
            dist = np.linalg.norm(diff, axis=1)
            keys = pairs[:, 0].astype(np.int64) * snap.sat_count + pairs[:, 1]
        else:
            dist = np.empty(0)
            keys = np.empty(0, dtype=np.int64)
        for r in radii:
            active = set(int(k) for k in keys[dist < r])
            counts[r].append(len(active))
            runs = open_runs[r]
            for k in list(runs):
                if k not in active:
                    durations[r].append(runs.pop(k) * step_s)
            for k in active:
                runs[k] = runs.get(k, 0) + 1
    for r in radii:
        durations[r].extend(v * step_s for v in open_runs[r].values())
        if not counts[r]:
            counts[r] = [0] * n_stamps
    return {
        r: EislStats(tuple(counts[r]), tuple(sorted(durations[r]))) for r in radii
    }


def direction_histogram(
    snapshots: Iterable[Snapshot], kinds: tuple[str, ...] = _ISL_KIND_NAMES
) -> np.ndarray:
    """Distribution of persistent-link direction angles vs the equator.

    Folds angles to [0, 90] degrees, bins at 1 degree, normalizes each stamp
    to unit mass, and averages the per-stamp histograms. Returns 90 bin
    fractions summing to 1.
    """
    kind_codes = [
        code for code, name in enumerate(_ISL_KIND_NAMES) if name in kinds
    ]
    if not kind_codes:
        raise ValueError(f"no persistent link kinds selected from {kinds}")
    total = np.zeros(90)
    n = 0
    for snap in snapshots:
        mask = np.isin(snap.isl_kinds, kind_codes)
        pairs = snap.isl_pairs[mask]
        if pairs.shape[0] == 0:
            raise ValueError("snapshot has no links of the selected kinds")
        vec = snap.sat_positions[pairs[:, 1]] - snap.sat_positions[pairs[:, 0]]
        ang = np.degrees(np.abs(link_equator_angle(vec)))
        hist, _ = np.histogram(ang, bins=90, range=(0.0, 90.0))
        total += hist / hist.sum()
        n += 1
    if n == 0:
        raise ValueError("at least one snapshot is required")
    return total / n
