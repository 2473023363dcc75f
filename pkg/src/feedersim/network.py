"""Street-network model: grid construction, travel-time queries, and zoning.

Distances are in km, speeds in km/h, delays in seconds, travel times in
hours.  A network is a directed graph of intersections plus one external
"hub" node reached through a freeway attached to the suburb boundary at
(0, 0).  Networks are immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import yaml

SECONDS_PER_HOUR = 3600.0

# Tolerance for "same travel time" when reconstructing tie-broken paths.
_TIME_EPS = 1e-9


class NetworkError(ValueError):
    """Raised for invalid network configuration or queries."""


class Location(NamedTuple):
    """A planar point (km east, km north)."""

    x: float
    y: float


class Path(NamedTuple):
    """A node sequence with its length and number of intermediate nodes."""

    nodes: tuple[int, ...]
    total_distance: float
    intersection_count: int


def matching_distance(a: Sequence[float], b: Sequence[float], metric: str = "manhattan") -> float:
    """Planar distance used for matching geometry (not for routing)."""
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    if metric == "manhattan":
        return abs(dx) + abs(dy)
    if metric == "euclidean":
        return math.hypot(dx, dy)
    raise NetworkError(f"unknown metric {metric!r}")


def buffer_area(delta: float, metric: str = "manhattan") -> float:
    """Area covered by a matching buffer of radius ``delta``.

    2*delta^2 under the Manhattan metric (a diamond), pi*delta^2 under the
    Euclidean metric (a disk).
    """
    if delta < 0:
        raise NetworkError("buffer distance must be nonnegative")
    if metric == "manhattan":
        return 2.0 * delta * delta
    if metric == "euclidean":
        return math.pi * delta * delta
    raise NetworkError(f"unknown metric {metric!r}")


def travel_time(path: Path, speed_kmh: float, intersection_delay_s: float) -> float:
    """Hours to traverse ``path`` at a single cruise speed plus node delays."""
    if speed_kmh <= 0:
        raise NetworkError("speed must be positive")
    return path.total_distance / speed_kmh + path.intersection_count * intersection_delay_s / SECONDS_PER_HOUR


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    length_km: float
    speed_kmh: float


class Network:
    """Directed street graph with a hub reached via a freeway chain.

    Node ids are dense integers.  ``gate_node`` is the suburb-side end of
    the freeway (coordinates (0, 0) for generated grids); ``hub_node`` is
    the far end.  Regular grids answer travel-time queries in closed form;
    arbitrary graphs fall back to a cached all-pairs shortest-time matrix.
    """

    def __init__(
        self,
        coords: np.ndarray,
        links: list[Link],
        hub_node: int,
        freeway_chain: list[tuple[int, int]],
        intersection_delay_s: float,
        region: tuple[float, float],
        grid_spacing: float | None = None,
        metadata: dict | None = None,
    ):
        self.coords = np.asarray(coords, dtype=float)
        self.links = list(links)
        self.hub_node = int(hub_node)
        self.freeway_chain = [(int(a), int(b)) for a, b in freeway_chain]
        self.intersection_delay_s = float(intersection_delay_s)
        self.region = (float(region[0]), float(region[1]))
        self.grid_spacing = grid_spacing
        self.metadata = dict(metadata or {})

        n = len(self.coords)
        self._adj: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
        self._link_index: dict[tuple[int, int], Link] = {}
        for lk in self.links:
            if not (0 <= lk.a < n and 0 <= lk.b < n):
                raise NetworkError(f"link ({lk.a},{lk.b}) has a dangling endpoint")
            if lk.length_km <= 0 or lk.speed_kmh <= 0:
                raise NetworkError(f"link ({lk.a},{lk.b}) needs positive length and speed")
            self._adj[lk.a].append((lk.b, lk.length_km, lk.speed_kmh))
            self._link_index[(lk.a, lk.b)] = lk
        for nbrs in self._adj:
            nbrs.sort()

        if not self.freeway_chain:
            raise NetworkError("network needs a freeway chain to the hub")
        for a, b in self.freeway_chain:
            if (a, b) not in self._link_index:
                raise NetworkError(f"freeway link ({a},{b}) not among links")
        if self.freeway_chain[-1][1] != self.hub_node:
            raise NetworkError("freeway chain must end at the hub")
        self.gate_node = self.freeway_chain[0][0]

        self._delay_h = self.intersection_delay_s / SECONDS_PER_HOUR
        self._grid = self._grid_parameters()
        self._modified_times: np.ndarray | None = None  # lazy all-pairs fallback
        self._kdtree = None
        self._check_connected()

    # -- construction helpers ------------------------------------------------

    def _grid_parameters(self):
        """Detect the regular-grid fast path (closed-form travel times)."""
        if self.grid_spacing is None:
            return None
        s = self.grid_spacing
        w, h = self.region
        nx = round(w / s) + 1
        ny = round(h / s) + 1
        if nx * ny + 1 != len(self.coords):
            return None
        street = {lk.speed_kmh for lk in self.links if (lk.a, lk.b) not in self._freeway_pairs()}
        if len(street) != 1:
            return None
        fw = [self._link_index[p] for p in self.freeway_chain]
        return {
            "nx": nx,
            "ny": ny,
            "spacing": s,
            "street_kmh": street.pop(),
            "freeway_time": sum(l.length_km / l.speed_kmh for l in fw),
            "freeway_km": sum(l.length_km for l in fw),
        }

    def _freeway_pairs(self) -> set[tuple[int, int]]:
        pairs = set()
        for a, b in self.freeway_chain:
            pairs.add((a, b))
            pairs.add((b, a))
        return pairs

    def _check_connected(self):
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        n = len(self.coords)
        rows = [lk.a for lk in self.links]
        cols = [lk.b for lk in self.links]
        mat = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(mat, directed=True, connection="strong")
        if ncomp != 1:
            raise NetworkError("network must be strongly connected")

    # -- geometry ------------------------------------------------------------

    def node_location(self, node: int) -> Location:
        x, y = self.coords[node]
        return Location(float(x), float(y))

    def snap(self, loc: Sequence[float]) -> int:
        """Nearest network node to a planar point (hub excluded on grids)."""
        if self._grid is not None:
            g = self._grid
            ix = min(max(round(loc[0] / g["spacing"]), 0), g["nx"] - 1)
            iy = min(max(round(loc[1] / g["spacing"]), 0), g["ny"] - 1)
            node = iy * g["nx"] + ix
            hx, hy = self.coords[self.hub_node]
            if loc[0] < 0 and matching_distance(loc, (hx, hy)) < matching_distance(
                loc, self.coords[node]
            ):
                return self.hub_node
            return node
        if self._kdtree is None:
            from scipy.spatial import cKDTree

            self._kdtree = cKDTree(self.coords)
        return int(self._kdtree.query(np.asarray(loc, dtype=float))[1])

    def neighbors(self, node: int) -> list[tuple[int, float, float]]:
        return self._adj[node]

    def link(self, a: int, b: int) -> Link:
        return self._link_index[(a, b)]

    # -- travel times ----------------------------------------------------------

    def _modified_time(self, a: int, b: int) -> float:
        """Minimal sum of (link time + one delay per link) from a to b."""
        if a == b:
            return 0.0
        if self._grid is not None:
            return self._grid_modified_time(a, b)
        return float(self._all_pairs()[a, b])

    def _grid_modified_time(self, a: int, b: int) -> float:
        g = self._grid
        hub = self.hub_node
        fw_mod = g["freeway_time"] + self._delay_h
        if a == hub and b == hub:
            return 0.0
        if a == hub:
            return fw_mod + self._grid_modified_time(self.gate_node, b)
        if b == hub:
            return self._grid_modified_time(a, self.gate_node) + fw_mod
        nx = g["nx"]
        axi, ayi = a % nx, a // nx
        bxi, byi = b % nx, b // nx
        steps = abs(axi - bxi) + abs(ayi - byi)
        return steps * (g["spacing"] / g["street_kmh"] + self._delay_h)

    def _all_pairs(self) -> np.ndarray:
        if self._modified_times is None:
            from scipy.sparse import csr_matrix
            from scipy.sparse.csgraph import dijkstra

            n = len(self.coords)
            rows = [lk.a for lk in self.links]
            cols = [lk.b for lk in self.links]
            data = [lk.length_km / lk.speed_kmh + self._delay_h for lk in self.links]
            mat = csr_matrix((data, (rows, cols)), shape=(n, n))
            self._modified_times = dijkstra(mat, directed=True)
        return self._modified_times

    def time_between_nodes(self, a: int, b: int) -> float:
        """Minimal travel time in hours, including intersection delays.

        Delays are charged at every intermediate node of the best path;
        neither endpoint is charged.
        """
        if a == b:
            return 0.0
        t = self._modified_time(a, b)
        if math.isinf(t):
            raise NetworkError(f"node {b} unreachable from {a}")
        return t - self._delay_h

    def path_between_nodes(self, a: int, b: int) -> list[int]:
        """Minimum-time node sequence, lexicographically smallest among ties."""
        if a == b:
            return [a]
        total = self._modified_time(a, b)
        if math.isinf(total):
            raise NetworkError(f"node {b} unreachable from {a}")
        seq = [a]
        u = a
        remaining = total
        while u != b:
            chosen = None
            for v, length, speed in self._adj[u]:
                w = length / speed + self._delay_h
                rest = self._modified_time(v, b)
                if abs(w + rest - remaining) <= _TIME_EPS * max(1.0, remaining):
                    chosen = (v, w, rest)
                    break  # neighbors are id-sorted: first hit is smallest
            if chosen is None:  # pragma: no cover - guards float drift
                raise NetworkError(f"path reconstruction failed at node {u}")
            u, w, remaining = chosen[0], chosen[1], chosen[2]
            seq.append(u)
        return seq

    def path_distance(self, nodes: Sequence[int]) -> float:
        return sum(self._link_index[(nodes[i], nodes[i + 1])].length_km for i in range(len(nodes) - 1))


def shortest_path(net: Network, a: Sequence[float], b: Sequence[float]) -> Path:
    """Minimum-travel-time path between two planar points, snapped to nodes."""
    na = a if isinstance(a, int) else net.snap(a)
    nb = b if isinstance(b, int) else net.snap(b)
    nodes = net.path_between_nodes(na, nb)
    dist = net.path_distance(nodes)
    return Path(tuple(nodes), dist, max(len(nodes) - 2, 0))


def build_grid(
    region: tuple[float, float],
    spacing: float,
    freeway_length: float,
    street_speed: float,
    freeway_speed: float,
    intersection_delay_s: float,
    metadata: dict | None = None,
) -> Network:
    """Evenly spaced two-way grid over ``region`` with a freeway to the hub.

    The freeway attaches at the suburb corner (0, 0); the hub sits at
    (-freeway_length, 0).  ``spacing`` must divide both region dimensions.
    """
    w, h = region
    if spacing <= 0 or w <= 0 or h <= 0 or freeway_length <= 0:
        raise NetworkError("region, spacing and freeway length must be positive")
    if street_speed <= 0 or freeway_speed <= 0:
        raise NetworkError("speeds must be positive")
    for dim in (w, h):
        k = dim / spacing
        if abs(k - round(k)) > 1e-9:
            raise NetworkError(f"spacing {spacing} does not divide region dimension {dim}")

    nx = round(w / spacing) + 1
    ny = round(h / spacing) + 1
    coords = np.empty((nx * ny + 1, 2))
    for iy in range(ny):
        for ix in range(nx):
            coords[iy * nx + ix] = (ix * spacing, iy * spacing)
    hub = nx * ny
    coords[hub] = (-freeway_length, 0.0)

    links: list[Link] = []
    for iy in range(ny):
        for ix in range(nx):
            n = iy * nx + ix
            if ix + 1 < nx:
                links.append(Link(n, n + 1, spacing, street_speed))
                links.append(Link(n + 1, n, spacing, street_speed))
            if iy + 1 < ny:
                links.append(Link(n, n + nx, spacing, street_speed))
                links.append(Link(n + nx, n, spacing, street_speed))
    gate = 0  # node at (0, 0)
    links.append(Link(gate, hub, freeway_length, freeway_speed))
    links.append(Link(hub, gate, freeway_length, freeway_speed))

    return Network(
        coords,
        links,
        hub_node=hub,
        freeway_chain=[(gate, hub)],
        intersection_delay_s=intersection_delay_s,
        region=region,
        grid_spacing=spacing,
        metadata=metadata,
    )


# -- serialization -------------------------------------------------------------
#
# Field names below are the on-disk contract (see docs/network_format.md):
#   nodes: [{id, x, y}], links: [{from, to, length_km, speed_kmh}],
#   hub: id, freeway: [[from, to], ...], intersection_delay_s, region: [w, h],
#   grid_spacing_km (optional), metadata (optional mapping).


def network_to_document(net: Network) -> dict:
    doc = {
        "nodes": [
            {"id": i, "x": float(net.coords[i][0]), "y": float(net.coords[i][1])}
            for i in range(len(net.coords))
        ],
        "links": [
            {"from": lk.a, "to": lk.b, "length_km": lk.length_km, "speed_kmh": lk.speed_kmh}
            for lk in net.links
        ],
        "hub": net.hub_node,
        "freeway": [[a, b] for a, b in net.freeway_chain],
        "intersection_delay_s": net.intersection_delay_s,
        "region": [net.region[0], net.region[1]],
    }
    if net.grid_spacing is not None:
        doc["grid_spacing_km"] = net.grid_spacing
    if net.metadata:
        doc["metadata"] = dict(net.metadata)
    return doc


def load_network(document) -> Network:
    """Build a validated Network from a mapping, YAML text, or file path."""
    if isinstance(document, (str, bytes)):
        text = document
        try:
            with open(document) as fh:  # type: ignore[arg-type]
                text = fh.read()
        except OSError:
            pass
        document = yaml.safe_load(text)
    if not isinstance(document, dict):
        raise NetworkError("network document must be a mapping")
    for key in ("nodes", "links", "hub", "freeway", "intersection_delay_s"):
        if key not in document:
            raise NetworkError(f"network document missing {key!r}")

    nodes = document["nodes"]
    ids = [int(n["id"]) for n in nodes]
    if sorted(ids) != list(range(len(ids))):
        raise NetworkError("node ids must be dense integers starting at 0")
    coords = np.empty((len(ids), 2))
    for n in nodes:
        coords[int(n["id"])] = (float(n["x"]), float(n["y"]))
    links = [
        Link(int(l["from"]), int(l["to"]), float(l["length_km"]), float(l["speed_kmh"]))
        for l in document["links"]
    ]
    region = document.get("region")
    if region is None:
        suburb = [i for i in range(len(ids)) if i != int(document["hub"])]
        region = (float(coords[suburb, 0].max()), float(coords[suburb, 1].max()))
    return Network(
        coords,
        links,
        hub_node=int(document["hub"]),
        freeway_chain=[(int(a), int(b)) for a, b in document["freeway"]],
        intersection_delay_s=float(document["intersection_delay_s"]),
        region=tuple(region),
        grid_spacing=document.get("grid_spacing_km"),
        metadata=document.get("metadata"),
    )


def save_network(net: Network, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(network_to_document(net), fh, sort_keys=False)


# -- zoning --------------------------------------------------------------------


Rect = tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass(frozen=True)
class Zone:
    """An axis-aligned service zone with its fleet allocation."""

    id: int
    rect: Rect
    fleet_share: int = 0

    def contains(self, loc: Sequence[float]) -> bool:
        x0, y0, x1, y1 = self.rect
        return x0 <= loc[0] <= x1 and y0 <= loc[1] <= y1

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.rect
        return (x1 - x0) * (y1 - y0)


def zone_of(zones: Sequence[Zone], loc: Sequence[float]) -> Zone:
    """First zone (by id order) containing the point; boundary points go low."""
    for z in zones:
        if z.contains(loc):
            return z
    raise NetworkError(f"location {tuple(loc)} lies in no zone")


def _integrate_rect(fn: Callable[[float, float], float], rect: Rect, order: int = 48) -> float:
    x0, y0, x1, y1 = rect
    gx, wx = np.polynomial.legendre.leggauss(order)
    xs = 0.5 * (x1 - x0) * gx + 0.5 * (x1 + x0)
    ys = 0.5 * (y1 - y0) * gx + 0.5 * (y1 + y0)
    total = 0.0
    for y, wy in zip(ys, wx):
        row = sum(w * fn(x, y) for x, w in zip(xs, wx))
        total += wy * row
    return total * 0.25 * (x1 - x0) * (y1 - y0)


def largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer shares proportional to ``weights`` summing exactly to ``total``."""
    wsum = float(sum(weights))
    if wsum <= 0:
        raise NetworkError("weights must have positive sum")
    quotas = [total * w / wsum for w in weights]
    shares = [math.floor(q) for q in quotas]
    leftover = total - sum(shares)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[:leftover]:
        shares[i] += 1
    return shares


def partition_zones(
    net: Network,
    rectangles: Sequence[Rect],
    demand_field: Callable[[float, float], float] | None,
    fleet: int,
) -> list[Zone]:
    """Tile the suburb into zones and split the fleet by demand mass.

    Rectangles must tile the region exactly (no overlap, no gap).  Fleet
    shares use largest-remainder rounding so they sum to ``fleet``.
    """
    w, h = net.region
    area_sum = 0.0
    for i, r in enumerate(rectangles):
        x0, y0, x1, y1 = r
        if x1 <= x0 or y1 <= y0:
            raise NetworkError(f"zone rectangle {i + 1} is degenerate")
        if x0 < -1e-9 or y0 < -1e-9 or x1 > w + 1e-9 or y1 > h + 1e-9:
            raise NetworkError(f"zone rectangle {i + 1} exceeds the region")
        area_sum += (x1 - x0) * (y1 - y0)
        for j in range(i):
            ox0, oy0, ox1, oy1 = rectangles[j]
            ow = min(x1, ox1) - max(x0, ox0)
            oh = min(y1, oy1) - max(y0, oy0)
            if ow > 1e-9 and oh > 1e-9:
                raise NetworkError(f"zone rectangles {j + 1} and {i + 1} overlap")
    if abs(area_sum - w * h) > 1e-6 * w * h:
        raise NetworkError("zone rectangles do not tile the region")

    field = demand_field or (lambda x, y: 1.0)
    masses = [_integrate_rect(field, r) for r in rectangles]
    shares = largest_remainder(masses, fleet)
    return [Zone(i + 1, tuple(r), s) for i, (r, s) in enumerate(zip(rectangles, shares))]


def auto_zone_rectangles(region: tuple[float, float], count: int, mu_ob: float = 0.0) -> list[Rect]:
    """Default zone layouts: quadrant-style tiles under uniform demand,
    equal-demand vertical strips when demand decays away from the freeway."""
    w, h = region
    if count == 1:
        return [(0.0, 0.0, w, h)]
    if mu_ob > 0:
        # strip boundaries at quantiles of the exp(-mu*x) marginal
        total = 1.0 - math.exp(-mu_ob * w)
        cuts = [0.0]
        for i in range(1, count):
            cuts.append(-math.log(1.0 - total * i / count) / mu_ob)
        cuts.append(w)
        return [(cuts[i], 0.0, cuts[i + 1], h) for i in range(count)]
    # near-square tiling: factor count into rows x cols
    rows = int(math.sqrt(count))
    while count % rows:
        rows -= 1
    cols = count // rows
    rects = []
    for r in range(rows):
        for c in range(cols):
            rects.append((c * w / cols, r * h / rows, (c + 1) * w / cols, (r + 1) * h / rows))
    return rects


def zone_nodes(net: Network, zone: Zone) -> list[int]:
    """Grid/suburb nodes whose coordinates fall inside the zone."""
    out = []
    for i in range(len(net.coords)):
        if i == net.hub_node:
            continue
        if zone.contains(net.coords[i]):
            out.append(i)
    return out
