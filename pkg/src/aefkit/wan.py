"""Seat-weighted airline network model built from OpenFlights-style data.

Airports become nodes; all scheduled routes between a pair of airports
collapse into a single undirected edge whose weight is the total seat
capacity flown on that pair (both directions summed). Airports that end up
with no resolvable route are excluded from the graph.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

NULL_MARKER = r"\N"

#: Seat capacity assumed for aircraft codes missing from the seat table.
DEFAULT_SEAT_CAPACITY = 150


@dataclass(frozen=True)
class AirportRecord:
    """One airport row: 3-letter IATA code plus location metadata."""

    iata: str
    icao: str | None
    name: str
    city: str
    country: str
    latitude: float
    longitude: float


@dataclass(frozen=True)
class RouteRecord:
    """One scheduled route: endpoints plus the equipment codes flown on it."""

    source: str
    destination: str
    equipment: tuple[str, ...]


@dataclass(frozen=True)
class ParsedAirports:
    records: tuple[AirportRecord, ...]
    skipped: int  # lines without a usable IATA code
    diagnostics: tuple[str, ...]  # per-line messages for malformed lines

    def iatas(self) -> set[str]:
        return {r.iata for r in self.records}


@dataclass(frozen=True)
class ParsedRoutes:
    records: tuple[RouteRecord, ...]
    dropped: int  # records with an unresolvable endpoint
    diagnostics: tuple[str, ...]


class SeatTable:
    """Mapping from IATA aircraft type code to seat capacity.

    Unknown codes resolve to ``default_capacity`` so that data gaps degrade
    gracefully instead of dropping routes.
    """

    def __init__(self, capacities: Mapping[str, int], default_capacity: int = DEFAULT_SEAT_CAPACITY):
        for code, seats in capacities.items():
            if seats <= 0:
                raise ValueError(f"seat capacity for {code!r} must be positive, got {seats}")
        if default_capacity <= 0:
            raise ValueError("default_capacity must be positive")
        self._capacities = dict(capacities)
        self.default_capacity = int(default_capacity)

    def __len__(self) -> int:
        return len(self._capacities)

    def __contains__(self, code: str) -> bool:
        return code in self._capacities

    def seats(self, code: str) -> int | None:
        """Capacity for a code, or None when the code is unknown."""
        return self._capacities.get(code)

    @classmethod
    def from_tsv(cls, lines: str | Iterable[str], default_capacity: int = DEFAULT_SEAT_CAPACITY) -> "SeatTable":
        """Parse a ``code<TAB>seats`` table; blank lines and # comments ignored."""
        if isinstance(lines, str):
            lines = lines.splitlines()
        capacities: dict[str, int] = {}
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"seat table line {lineno}: expected 'code<TAB>seats', got {line!r}")
            code, seats = parts[0].strip(), parts[1].strip()
            capacities[code] = int(seats)
        return cls(capacities, default_capacity=default_capacity)

    @classmethod
    def bundled(cls, default_capacity: int = DEFAULT_SEAT_CAPACITY) -> "SeatTable":
        """The seat table shipped with the package."""
        text = resources.files("aefkit.data").joinpath("seats.tsv").read_text(encoding="utf-8")
        return cls.from_tsv(text, default_capacity=default_capacity)


def _iter_lines(raw: str | Iterable[str]) -> Iterable[str]:
    if isinstance(raw, str):
        return raw.splitlines()
    return raw


def _clean(value: str) -> str:
    value = value.strip()
    return "" if value == NULL_MARKER else value


def parse_airports(raw: str | Iterable[str]) -> ParsedAirports:
    """Read an OpenFlights airports table (14-field CSV; field 5 is IATA).

    Lines without a 3-character IATA code are skipped and counted; malformed
    lines (too few fields, unparsable or out-of-range coordinates, duplicate
    IATA codes) produce a line-numbered diagnostic and are dropped.
    """
    records: list[AirportRecord] = []
    seen: set[str] = set()
    skipped = 0
    diagnostics: list[str] = []
    for lineno, row in enumerate(csv.reader(_iter_lines(raw)), start=1):
        if not row:
            continue
        if len(row) < 8:
            diagnostics.append(f"line {lineno}: expected >= 8 fields, got {len(row)}")
            continue
        iata = _clean(row[4]).upper()
        if len(iata) != 3 or not iata.isalnum():
            skipped += 1
            continue
        try:
            lat = float(row[6])
            lon = float(row[7])
        except ValueError:
            diagnostics.append(f"line {lineno}: unparsable coordinates {row[6]!r}, {row[7]!r}")
            continue
        if not -90.0 <= lat <= 90.0:
            diagnostics.append(f"line {lineno}: latitude {lat} outside [-90, 90]")
            continue
        if not -180.0 <= lon <= 180.0:
            diagnostics.append(f"line {lineno}: longitude {lon} outside [-180, 180]")
            continue
        if iata in seen:
            diagnostics.append(f"line {lineno}: duplicate IATA code {iata}")
            continue
        seen.add(iata)
        icao = _clean(row[5]).upper() or None
        records.append(
            AirportRecord(
                iata=iata,
                icao=icao,
                name=_clean(row[1]),
                city=_clean(row[2]),
                country=_clean(row[3]),
                latitude=lat,
                longitude=lon,
            )
        )
    if not records:
        raise ValueError("no airports with usable IATA codes were parsed")
    return ParsedAirports(tuple(records), skipped, tuple(diagnostics))


def parse_routes(raw: str | Iterable[str], airports: ParsedAirports | set[str] | None = None) -> ParsedRoutes:
    """Read an OpenFlights routes table (9-field CSV).

    Fields 3/5 are the source/destination IATA codes; field 9 holds
    space-separated equipment codes. When ``airports`` is given, routes whose
    endpoints are not in that table are dropped and counted.
    """
    valid: set[str] | None
    if airports is None:
        valid = None
    elif isinstance(airports, ParsedAirports):
        valid = airports.iatas()
    else:
        valid = set(airports)

    records: list[RouteRecord] = []
    dropped = 0
    diagnostics: list[str] = []
    for lineno, row in enumerate(csv.reader(_iter_lines(raw)), start=1):
        if not row:
            continue
        if len(row) < 8:
            diagnostics.append(f"line {lineno}: expected >= 8 fields, got {len(row)}")
            continue
        source = _clean(row[2]).upper()
        dest = _clean(row[4]).upper()
        if len(source) != 3 or len(dest) != 3:
            dropped += 1
            continue
        if source == dest:
            diagnostics.append(f"line {lineno}: self-loop route {source}->{dest}")
            continue
        if valid is not None and (source not in valid or dest not in valid):
            dropped += 1
            continue
        # Equipment is field 9; tolerate 8-field rows where an empty
        # codeshare column was collapsed away.
        equip_raw = _clean(row[8]) if len(row) >= 9 else _clean(row[7])
        equipment = tuple(code for code in equip_raw.split() if code)
        records.append(RouteRecord(source=source, destination=dest, equipment=equipment))
    return ParsedRoutes(tuple(records), dropped, tuple(diagnostics))


def resolve_route_weight(route: RouteRecord, seats: SeatTable, unknown_codes: set[str] | None = None) -> float:
    """Total seat capacity of one route.

    Sums the capacities of all listed aircraft codes; unknown codes
    contribute the table's default capacity, and a route with no equipment
    at all counts as one default-capacity aircraft.
    """
    if not route.equipment:
        return float(seats.default_capacity)
    total = 0
    for code in route.equipment:
        capacity = seats.seats(code)
        if capacity is None:
            if unknown_codes is not None:
                unknown_codes.add(code)
            capacity = seats.default_capacity
        total += capacity
    return float(total)


class WanGraph:
    """Immutable undirected graph of airports weighted by seat capacity.

    Nodes are ordered by IATA code so that identical inputs always produce
    an identical graph. No method mutates the instance; derived graphs are
    fresh values.
    """

    def __init__(
        self,
        nodes: Iterable[AirportRecord],
        edge_weights: Mapping[tuple[str, str], float],
        meta: Mapping[str, object] | None = None,
    ):
        self.nodes: tuple[AirportRecord, ...] = tuple(sorted(nodes, key=lambda r: r.iata))
        self.iatas: tuple[str, ...] = tuple(r.iata for r in self.nodes)
        if len(set(self.iatas)) != len(self.iatas):
            raise ValueError("duplicate IATA codes in node set")
        self.index: dict[str, int] = {iata: i for i, iata in enumerate(self.iatas)}
        self._records: dict[str, AirportRecord] = {r.iata: r for r in self.nodes}
        adj: dict[str, dict[str, float]] = {iata: {} for iata in self.iatas}
        n_edges = 0
        for (u, v), w in edge_weights.items():
            if u == v:
                raise ValueError(f"self-loop on {u}")
            if u not in adj or v not in adj:
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            if w <= 0:
                raise ValueError(f"non-positive weight {w} on edge ({u}, {v})")
            if v in adj[u]:
                raise ValueError(f"parallel edge ({u}, {v})")
            adj[u][v] = float(w)
            adj[v][u] = float(w)
            n_edges += 1
        self._adj = adj
        self.n_nodes = len(self.iatas)
        self.n_edges = n_edges
        self.meta: dict[str, object] = dict(meta or {})
        self._csr_cache: tuple | None = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_csr_cache"] = None  # rebuilt on demand; keeps pickles small
        return state

    # -- basic queries -------------------------------------------------

    def __contains__(self, iata: str) -> bool:
        return iata in self._adj

    def record(self, iata: str) -> AirportRecord:
        return self._records[iata]

    def neighbors(self, iata: str) -> tuple[str, ...]:
        return tuple(sorted(self._adj[iata]))

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj.get(u, ())

    def weight(self, u: str, v: str) -> float:
        """Edge weight, or 0.0 when the pair is not connected."""
        return self._adj[u].get(v, 0.0)

    def degree(self, iata: str) -> int:
        return len(self._adj[iata])

    def weighted_degree(self, iata: str) -> float:
        return sum(self._adj[iata].values())

    def edges(self) -> Iterator[tuple[str, str, float]]:
        """All edges once, endpoints in IATA order within each pair."""
        for u in self.iatas:
            for v, w in self._adj[u].items():
                if u < v:
                    yield u, v, w

    def country_nodes(self, country: str) -> tuple[str, ...]:
        return tuple(iata for iata in self.iatas if self._records[iata].country == country)

    def countries(self) -> set[str]:
        return {r.country for r in self.nodes}

    # -- indexed views for numeric code --------------------------------

    def csr(self):
        """Index-based adjacency: (neighbor index arrays, weight arrays, weighted degrees).

        Arrays are cached; treat them as read-only.
        """
        if self._csr_cache is None:
            nbr_idx: list[np.ndarray] = []
            nbr_w: list[np.ndarray] = []
            for iata in self.iatas:
                items = sorted(self._adj[iata].items())
                nbr_idx.append(np.array([self.index[v] for v, _ in items], dtype=np.int64))
                nbr_w.append(np.array([w for _, w in items], dtype=np.float64))
            wdeg = np.array([w.sum() for w in nbr_w], dtype=np.float64)
            self._csr_cache = (nbr_idx, nbr_w, wdeg)
        return self._csr_cache

    # -- derived graphs -------------------------------------------------

    def without_nodes(self, remove: Iterable[str]) -> "WanGraph":
        """Fresh graph with the given airports and all their edges removed.

        Surviving airports are kept even if the removal isolates them.
        """
        gone = set(remove)
        unknown = gone - set(self.iatas)
        if unknown:
            raise KeyError(f"nodes not in graph: {sorted(unknown)}")
        nodes = [r for r in self.nodes if r.iata not in gone]
        edges = {(u, v): w for u, v, w in self.edges() if u not in gone and v not in gone}
        return WanGraph(nodes, edges, meta=self.meta)

    def scaled(self, factor: float) -> "WanGraph":
        """Fresh graph with every edge weight multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        return WanGraph(self.nodes, {(u, v): w * factor for u, v, w in self.edges()}, meta=self.meta)


def build_network(
    airports: ParsedAirports | Iterable[AirportRecord],
    routes: ParsedRoutes | Iterable[RouteRecord],
    seats: SeatTable,
) -> WanGraph:
    """Collapse routes into the undirected seat-weighted airline graph.

    For each unordered airport pair the edge weight is the summed seat
    capacity over every route between them, in either direction. Airports
    with no retained route are excluded.
    """
    airport_records = airports.records if isinstance(airports, ParsedAirports) else tuple(airports)
    route_records = routes.records if isinstance(routes, ParsedRoutes) else tuple(routes)
    by_iata = {r.iata: r for r in airport_records}

    weights: dict[tuple[str, str], float] = {}
    unknown_codes: set[str] = set()
    used = 0
    for route in route_records:
        if route.source not in by_iata or route.destination not in by_iata:
            continue
        pair = tuple(sorted((route.source, route.destination)))
        weights[pair] = weights.get(pair, 0.0) + resolve_route_weight(route, seats, unknown_codes)
        used += 1
    if not weights:
        raise ValueError("no routes could be resolved; refusing to build an empty graph")
    if unknown_codes:
        log.warning(
            "%d unknown aircraft codes defaulted to %d seats: %s",
            len(unknown_codes),
            seats.default_capacity,
            " ".join(sorted(unknown_codes)),
        )

    connected = {iata for pair in weights for iata in pair}
    nodes = [by_iata[iata] for iata in sorted(connected)]
    meta = {
        "routes_used": used,
        "airports_without_routes": len(by_iata) - len(connected),
        "unknown_equipment": sorted(unknown_codes),
    }
    return WanGraph(nodes, weights, meta=meta)


DEGRADE_SCHEMES = ("uniform", "degree", "aef")


def degrade_network(
    graph: WanGraph,
    *,
    fraction: float,
    scheme: str,
    rng: np.random.Generator,
    country: str = "United States",
    aef_scores: Mapping[str, float] | None = None,
) -> WanGraph:
    """Remove a random fraction of one country's airports from the graph.

    ``ceil(fraction * |subset|)`` airports are sampled without replacement
    with probability proportional to the scheme weight (uniform, degree, or
    a supplied AEF score), all computed on the undegraded graph. Returns a
    fresh graph; the input is untouched.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if scheme not in DEGRADE_SCHEMES:
        raise ValueError(f"scheme must be one of {DEGRADE_SCHEMES}, got {scheme!r}")
    subset = graph.country_nodes(country)
    if not subset:
        raise ValueError(f"no airports with country {country!r} in graph")
    k = math.ceil(fraction * len(subset))
    if k == 0:
        return graph.without_nodes(())
    if k > len(subset):
        raise ValueError(f"removal count {k} exceeds subset size {len(subset)}")

    if scheme == "uniform":
        weights = np.ones(len(subset))
    elif scheme == "degree":
        weights = np.array([graph.degree(iata) for iata in subset], dtype=float)
    else:
        if aef_scores is None:
            raise ValueError("aef scheme requires precomputed aef_scores")
        weights = np.array([max(float(aef_scores[iata]), 0.0) for iata in subset])
    if np.count_nonzero(weights) < k:
        raise ValueError(f"only {np.count_nonzero(weights)} airports have positive scheme weight, need {k}")

    chosen = _weighted_sample_without_replacement(list(subset), weights, k, rng)
    return graph.without_nodes(chosen)


def _weighted_sample_without_replacement(
    items: Sequence[str], weights: np.ndarray, k: int, rng: np.random.Generator
) -> list[str]:
    """Successive weighted draws, renormalizing after each removal."""
    weights = weights.astype(float).copy()
    chosen: list[str] = []
    for _ in range(k):
        total = weights.sum()
        pick = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
        pick = min(pick, len(items) - 1)
        chosen.append(items[pick])
        weights[pick] = 0.0
    return chosen


# -- serialization ------------------------------------------------------

BUNDLE_FORMAT = "wan-graph"
BUNDLE_VERSION = 1


def graph_to_bundle(graph: WanGraph) -> dict:
    """JSON-serializable bundle with nodes, edges and build metadata."""
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "meta": graph.meta,
        "nodes": [
            {
                "iata": r.iata,
                "icao": r.icao,
                "name": r.name,
                "city": r.city,
                "country": r.country,
                "lat": r.latitude,
                "lon": r.longitude,
            }
            for r in graph.nodes
        ],
        "edges": [[u, v, w] for u, v, w in graph.edges()],
    }


def graph_from_bundle(bundle: Mapping) -> WanGraph:
    if bundle.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"not a {BUNDLE_FORMAT} bundle")
    if bundle.get("version") != BUNDLE_VERSION:
        raise ValueError(f"unsupported bundle version {bundle.get('version')}")
    nodes = [
        AirportRecord(
            iata=n["iata"],
            icao=n.get("icao"),
            name=n.get("name", ""),
            city=n.get("city", ""),
            country=n.get("country", ""),
            latitude=float(n["lat"]),
            longitude=float(n["lon"]),
        )
        for n in bundle["nodes"]
    ]
    edges = {(u, v): float(w) for u, v, w in bundle["edges"]}
    return WanGraph(nodes, edges, meta=bundle.get("meta"))


def save_bundle(graph: WanGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_bundle(graph), fh, sort_keys=True)
        fh.write("\n")


def load_bundle(path) -> WanGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_bundle(json.load(fh))


def save_edgelist_csv(graph: WanGraph, path) -> None:
    """Write edges as ``src_iata,dst_iata,weight`` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src_iata", "dst_iata", "weight"])
        for u, v, w in graph.edges():
            writer.writerow([u, v, f"{w:g}"])


# -- synthetic fixtures --------------------------------------------------

def _synthetic_code(i: int) -> str:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    a, rem = divmod(i, 26 * 26)
    b, c = divmod(rem, 26)
    return letters[a] + letters[b] + letters[c]


def synthetic_network(
    n: int,
    rng_seed: int,
    m: int = 2,
    mean_seats: float = 150.0,
    sigma: float = 0.9,
    n_zones: int = 16,
) -> WanGraph:
    """Scale-free seat-weighted test network.

    Preferential-attachment wiring (each new node attaches to ``m`` distinct
    existing nodes chosen proportionally to degree) with log-normal seat
    weights. Airports are spread round-robin over ``n_zones`` synthetic
    countries named "Zone 1".."Zone <n_zones>" so metapopulation runs can
    group them into regions.
    """
    if n < m + 1:
        raise ValueError("need n > m")
    rng = np.random.default_rng(rng_seed)
    edges: set[tuple[int, int]] = set()
    # Degree-proportional sampling via a repeated-endpoints urn.
    urn: list[int] = []
    for u in range(m + 1):
        for v in range(u + 1, m + 1):
            edges.add((u, v))
            urn.extend((u, v))
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(int(urn[rng.integers(len(urn))]))
        for t in sorted(targets):
            edges.add((t, new))
            urn.extend((t, new))

    records = []
    for i in range(n):
        records.append(
            AirportRecord(
                iata=_synthetic_code(i),
                icao=None,
                name=f"Synthetic {i}",
                city=f"City {i}",
                country=f"Zone {i % n_zones + 1}",
                latitude=float((i * 7) % 180 - 90 + 0.5),
                longitude=float((i * 13) % 360 - 180 + 0.5),
            )
        )
    weights = {}
    for u, v in sorted(edges):
        seats = float(max(30, round(rng.lognormal(math.log(mean_seats), sigma))))
        weights[(records[u].iata, records[v].iata)] = seats
    return WanGraph(records, weights, meta={"synthetic": True, "rng_seed": rng_seed})


def synthetic_regions(n_zones: int = 16) -> dict[str, int]:
    """Country-to-region mapping matching :func:`synthetic_network` zones."""
    return {f"Zone {i}": i for i in range(1, n_zones + 1)}
