"""Physical RAN description: base stations, CSV ingestion and interference graph."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateBsId, EmptyTopology, InvalidThreshold, ParseError

EARTH_RADIUS_KM = 6371.0
DEFAULT_THRESHOLD_KM = 1.0
CSV_COLUMNS = ("bs_id", "lat", "lon", "num_rbs", "price_per_rb")


@dataclass(frozen=True)
class BaseStation:
    bs_id: int
    latitude: float
    longitude: float
    num_rbs: int
    price_per_rb: float

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if self.num_rbs < 1:
            raise ValueError(f"num_rbs must be >= 1, got {self.num_rbs}")
        if not self.price_per_rb >= 0.0:
            raise ValueError(f"price_per_rb must be >= 0, got {self.price_per_rb}")

    @property
    def location(self):
        return (self.latitude, self.longitude)


@dataclass(frozen=True)
class Topology:
    stations: tuple[BaseStation, ...]

    def __post_init__(self):
        if not self.stations:
            raise EmptyTopology("topology has no base stations")
        ids = [s.bs_id for s in self.stations]
        if len(set(ids)) != len(ids):
            raise DuplicateBsId(f"duplicate bs_id in {ids}")
        object.__setattr__(
            self, "stations", tuple(sorted(self.stations, key=lambda s: s.bs_id))
        )

    def __len__(self):
        return len(self.stations)

    def __iter__(self):
        return iter(self.stations)

    @property
    def bs_ids(self):
        return tuple(s.bs_id for s in self.stations)

    @property
    def capacities(self):
        return {s.bs_id: s.num_rbs for s in self.stations}

    @property
    def prices(self):
        return {s.bs_id: s.price_per_rb for s in self.stations}

    def station(self, bs_id):
        for s in self.stations:
            if s.bs_id == bs_id:
                return s
        raise KeyError(bs_id)

    def index_of(self, bs_id):
        return self.bs_ids.index(bs_id)


@dataclass(frozen=True, eq=False)
class InterferenceGraph:
    """Symmetric boolean adjacency over the BSs of a topology, in bs_id order."""

    bs_ids: tuple[int, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        n = len(self.bs_ids)
        if adj.shape != (n, n):
            raise ValueError(f"adjacency shape {adj.shape} does not match {n} BSs")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if adj.diagonal().any():
            raise ValueError("adjacency diagonal must be false")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self):
        return len(self.bs_ids)

    def __eq__(self, other):
        if not isinstance(other, InterferenceGraph):
            return NotImplemented
        return self.bs_ids == other.bs_ids and np.array_equal(
            self.adjacency, other.adjacency
        )

    def edges(self):
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(self.bs_ids[a], self.bs_ids[b]) for a, b in zip(i, j)]

    def num_edges(self):
        return int(np.triu(self.adjacency).sum())

    def components(self):
        """Connected components as lists of row indices, ordered by smallest index."""
        seen = [False] * self.n
        comps = []
        for start in range(self.n):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in np.flatnonzero(self.adjacency[v]):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(int(w))
            comps.append(sorted(comp))
        return comps

    @classmethod
    def complete(cls, bs_ids):
        n = len(bs_ids)
        return cls(tuple(bs_ids), ~np.eye(n, dtype=bool))

    @classmethod
    def empty(cls, bs_ids):
        n = len(bs_ids)
        return cls(tuple(bs_ids), np.zeros((n, n), dtype=bool))

    @classmethod
    def from_edges(cls, bs_ids, edges):
        bs_ids = tuple(bs_ids)
        adj = np.zeros((len(bs_ids), len(bs_ids)), dtype=bool)
        for a, b in edges:
            i, j = bs_ids.index(a), bs_ids.index(b)
            if i != j:
                adj[i, j] = adj[j, i] = True
        return cls(bs_ids, adj)


def haversine_km(a, b):
    """Great-circle distance in km between two (lat, lon) pairs in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def build_interference_graph(topology, threshold_km=DEFAULT_THRESHOLD_KM):
    if not threshold_km > 0:
        raise InvalidThreshold(f"threshold_km must be > 0, got {threshold_km}")
    st = topology.stations
    n = len(st)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if haversine_km(st[i].location, st[j].location) <= threshold_km:
                adj[i, j] = adj[j, i] = True
    return InterferenceGraph(topology.bs_ids, adj)


def _parse_rows(text):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyTopology("topology file is empty") from None
    header = [h.strip().lstrip("﻿") for h in header]
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise ParseError(1, f"missing columns {missing}")
    pos = {c: header.index(c) for c in CSV_COLUMNS}

    stations, seen = [], set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            fields = {c: row[i].strip() for c, i in pos.items()}
            bs = BaseStation(
                bs_id=int(fields["bs_id"]),
                latitude=float(fields["lat"]),
                longitude=float(fields["lon"]),
                num_rbs=int(fields["num_rbs"]),
                price_per_rb=float(fields["price_per_rb"]),
            )
        except (IndexError, ValueError) as exc:
            raise ParseError(line, str(exc)) from None
        if not (math.isfinite(bs.latitude) and math.isfinite(bs.longitude)):
            raise ParseError(line, "non-finite coordinates")
        if bs.bs_id in seen:
            raise DuplicateBsId(f"line {line}: bs_id {bs.bs_id} already defined")
        seen.add(bs.bs_id)
        stations.append(bs)
    if not stations:
        raise EmptyTopology("topology file has no data rows")
    return Topology(tuple(stations))


def load_topology(path):
    """Read a ``bs_id,lat,lon,num_rbs,price_per_rb`` CSV; extra columns are ignored."""
    raw = Path(path).read_bytes()
    return _parse_rows(raw.decode("utf-8"))


def write_topology(topology, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in topology:
            w.writerow([s.bs_id, repr(s.latitude), repr(s.longitude), s.num_rbs, repr(s.price_per_rb)])


def synthetic_topology(
    num_bs=8,
    num_rbs=50,
    seed=0,
    layout="uniform",
    center=(42.3601, -71.0589),
    extent_km=2.0,
    price_range=(1.0, 2.0),
):
    """Place ``num_bs`` stations in a square box of side ``extent_km`` around ``center``.

    ``layout`` is ``"uniform"`` (seeded uniform placement) or ``"grid"``
    (near-square lattice). Prices are drawn uniformly from ``price_range``.
    """
    rng = np.random.default_rng(seed)
    lat0, lon0 = center
    km_per_deg_lat = math.pi * EARTH_RADIUS_KM / 180.0
    km_per_deg_lon = km_per_deg_lat * math.cos(math.radians(lat0))
    if layout == "uniform":
        xy = rng.uniform(-extent_km / 2, extent_km / 2, size=(num_bs, 2))
    elif layout == "grid":
        cols = math.ceil(math.sqrt(num_bs))
        rows = math.ceil(num_bs / cols)
        step_x = extent_km / max(cols - 1, 1)
        step_y = extent_km / max(rows - 1, 1)
        xy = np.array(
            [
                (-extent_km / 2 + (k % cols) * step_x, -extent_km / 2 + (k // cols) * step_y)
                for k in range(num_bs)
            ]
        )
    else:
        raise ValueError(f"unknown layout {layout!r}")
    lo, hi = price_range
    prices = rng.uniform(lo, hi, size=num_bs)
    stations = tuple(
        BaseStation(
            bs_id=k + 1,
            latitude=float(lat0 + xy[k, 1] / km_per_deg_lat),
            longitude=float(lon0 + xy[k, 0] / km_per_deg_lon),
            num_rbs=int(num_rbs),
            price_per_rb=round(float(prices[k]), 6),
        )
        for k in range(num_bs)
    )
    return Topology(stations)
