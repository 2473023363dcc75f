"""Batch-based vehicle-request matching with an optimized buffer distance.

Each receiving vehicle pools requests inside a buffer of radius ``delta``
around its position.  The buffer is sized in closed form so that the sum
of pooling delay and pickup-tour delay is minimized; the optimal batch
size then equals the occupancy target, so nobody waits for a later batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .network import matching_distance
from .reposition import urgency

SECONDS_PER_HOUR = 3600.0

#: Expected-tour-length constants for open tours through random points.
TSP_CONSTANT = {"manhattan": 1.15, "euclidean": 0.90}


class MatchingError(ValueError):
    pass


def commercial_speed(street_speed: float, u: int, stop_delay_s: float) -> float:
    """Effective tour speed once per-stop dwell is charged against pace.

    Defined by 1/S(u) = 1/S + u * t_d with the dwell expressed in hours.
    """
    if street_speed <= 0:
        raise MatchingError("street speed must be positive")
    if stop_delay_s < 0:
        raise MatchingError("stop delay must be nonnegative")
    return 1.0 / (1.0 / street_speed + u * stop_delay_s / SECONDS_PER_HOUR)


def delay_objective(U: int, area: float, u: int, lambda_ob: float, s_commercial: float, k: float) -> float:
    """Total pooling plus pickup-tour delay (hours) for batch size U, area A.

    Three summands: the tour time of U patrons shrunk by the u-of-U
    filtering factor u/(U+1); the half-window pooling wait of the current
    batch; and the full-window wait of the (U - u) carried-over requests.
    """
    if U < u or u < 1:
        raise MatchingError("need U >= u >= 1")
    if area <= 0 or lambda_ob <= 0:
        raise MatchingError("area and demand rate must be positive")
    tour = U * (k * math.sqrt(area * u) / s_commercial) * (u / (U + 1.0))
    pooling = u * u / (2.0 * lambda_ob * area)
    carryover = (U - u) * u / (lambda_ob * area)
    return tour + pooling + carryover


def optimal_batch_and_area(u: int, lambda_ob: float, s_commercial: float, k: float) -> tuple[int, float]:
    """Closed-form minimizer of the delay objective over U >= u, A > 0."""
    if u < 1 or lambda_ob <= 0 or s_commercial <= 0 or k <= 0:
        raise MatchingError("arguments must be positive")
    area = u ** (-1.0 / 3.0) * ((u + 1.0) * s_commercial / (k * lambda_ob)) ** (2.0 / 3.0)
    return u, area


def optimal_buffer_distance(u: int, lambda_ob: float, s_commercial: float, metric: str = "manhattan") -> float:
    """Buffer radius whose coverage area equals the optimal batching area."""
    if metric == "manhattan":
        return (8.0 * u) ** (-1.0 / 6.0) * ((u + 1.0) * s_commercial / (1.15 * lambda_ob)) ** (1.0 / 3.0)
    if metric == "euclidean":
        return (math.pi ** 3 * u) ** (-1.0 / 6.0) * ((u + 1.0) * s_commercial / (0.9 * lambda_ob)) ** (1.0 / 3.0)
    raise MatchingError(f"unknown metric {metric!r}")


def expected_uth_distance(u: int, U: int, delta: float) -> float:
    """Mean distance of the u-th closest of U radii uniform on [0, delta]."""
    if not 1 <= u <= U:
        raise MatchingError("need 1 <= u <= U")
    if delta <= 0:
        raise MatchingError("delta must be positive")
    return u * delta / (U + 1.0)


class MatchMap:
    """Vehicle-to-requests assignment plus the queue of unmatched requests.

    ``assignments[vid]`` is the ordered request batch of one vehicle; the
    unmatched queue keeps call-time order.  A request id appears in at
    most one batch.
    """

    def __init__(self):
        self.assignments: dict[int, list[int]] = {}
        self.unmatched: list[int] = []
        self._owner: dict[int, int] = {}

    def enqueue_unmatched(self, rid: int) -> None:
        self.unmatched.append(rid)

    def batch(self, vid: int) -> list[int]:
        return self.assignments.setdefault(vid, [])

    def owner_of(self, rid: int) -> int | None:
        return self._owner.get(rid)

    def assign(self, vid: int, rid: int) -> None:
        if rid in self._owner:
            raise MatchingError(f"request {rid} already assigned to vehicle {self._owner[rid]}")
        self.batch(vid).append(rid)
        self._owner[rid] = vid
        try:
            self.unmatched.remove(rid)
        except ValueError:
            pass

    def release(self, rid: int) -> None:
        """Drop a request from its batch (cancellation before dispatch)."""
        vid = self._owner.pop(rid, None)
        if vid is not None:
            self.assignments[vid].remove(rid)

    def drop_unmatched(self, rid: int) -> None:
        try:
            self.unmatched.remove(rid)
        except ValueError:
            pass

    def clear_vehicle(self, vid: int) -> list[int]:
        batch = self.assignments.pop(vid, [])
        for rid in batch:
            self._owner.pop(rid, None)
        return batch


def buffer_distances(
    vehicles,
    local_lambda,
    u: int,
    s_commercial: float,
    metric: str = "manhattan",
) -> dict[int, float]:
    """Per-vehicle buffer radii from local demand, truncated to half the
    distance to the nearest other receiving vehicle so buffers don't overlap.

    ``local_lambda``: callable position -> outbound intensity there.
    Co-located vehicles (distance 0) do not truncate each other.
    """
    positions = {v.id: v.pos() for v in vehicles}
    out = {}
    for v in vehicles:
        lam = local_lambda(positions[v.id])
        delta = optimal_buffer_distance(u, lam, s_commercial, metric) if lam > 0 else math.inf
        nearest = math.inf
        for other in vehicles:
            if other.id == v.id:
                continue
            d = matching_distance(positions[v.id], positions[other.id], metric)
            if 0.0 < d < nearest:
                nearest = d
        out[v.id] = min(delta, nearest / 2.0)
    return out


def match_step(
    mm: MatchMap,
    vehicles,
    requests,
    deltas: dict[int, float],
    u: int,
    t: float,
    metric: str = "manhattan",
):
    """One matching round over a zone's receiving vehicles.

    Vehicles are processed in ascending id order; each claims up to its
    remaining capacity among the closest unclaimed requests inside its
    buffer.  Claimed requests are invisible to later vehicles this round.
    Returns the commits as (vehicle_id, request_id, distance) triples.
    """
    commits = []
    claimed: set[int] = set()
    for veh in sorted(vehicles, key=lambda v: v.id):
        capacity = u - len(mm.batch(veh.id))
        if capacity <= 0:
            continue
        pos = veh.pos()
        delta = deltas[veh.id]
        in_range = []
        for r in requests:
            if r.id in claimed or r.state != 0:
                continue
            d = matching_distance(pos, r.loc, metric)
            if d <= delta:
                in_range.append((d, r.id, r))
        in_range.sort(key=lambda item: (item[0], item[1]))
        for d, rid, r in in_range[: min(capacity, len(in_range))]:
            mm.assign(veh.id, rid)
            r.state = 1
            r.match_h = t
            r.vehicle = veh.id
            claimed.add(rid)
            commits.append((veh.id, rid, d))
    return commits


def oversaturated_match(
    mm: MatchMap,
    vehicle,
    requests,
    u: int,
    alpha: float,
    street_speed: float,
    t: float,
    metric: str = "manhattan",
):
    """Match a just-relocated vehicle that may find more requests than it
    can take: the most urgent ones win, ties to the lower request id."""
    capacity = u - len(mm.batch(vehicle.id))
    if capacity <= 0:
        return []
    pos = vehicle.pos()
    scored = []
    for r in requests:
        if r.state != 0:
            continue
        d = matching_distance(pos, r.loc, metric)
        score = urgency(alpha, t - r.call_h, d, street_speed)
        scored.append((-score, r.id, d, r))
    scored.sort(key=lambda item: (item[0], item[1]))
    chosen = scored[:capacity]
    chosen.sort(key=lambda item: (item[2], item[1]))  # batch ordered by distance
    commits = []
    for _, rid, d, r in chosen:
        mm.assign(vehicle.id, rid)
        r.state = 1
        r.match_h = t
        r.vehicle = vehicle.id
        commits.append((vehicle.id, rid, d))
    return commits
