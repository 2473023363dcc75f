"""Urgency-based relocation of idle vehicles toward unmatched requests.

A vehicle that just finished its inbound leg is sent to the unmatched
request with the highest urgency: a weighted trade-off between how long
the request has waited and how far away it is.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import matching_distance


@dataclass(frozen=True)
class UrgencyParams:
    alpha: float
    street_speed: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.street_speed <= 0:
            raise ValueError("street speed must be positive")


def urgency(alpha: float, unmatched_time: float, distance: float, street_speed: float) -> float:
    """Score in hour-equivalents: alpha*wait - (1-alpha)*distance/speed."""
    return alpha * unmatched_time - (1.0 - alpha) * distance / street_speed


def reposition_step(idle_vehicles, unmatched_requests, params: UrgencyParams, t: float, metric: str = "manhattan"):
    """Assign idle inbound vehicles to unmatched requests, greedily by score.

    The globally best (vehicle, request) pair commits first, both drop out,
    and the process repeats, so a request draws at most one vehicle per
    round.  Vehicles left over get the fallback orders: from the hub,
    return to the last outbound pickup spot; in the suburb, stay put.
    Returns (relocations, fallbacks) as lists of (vehicle, request) and
    (vehicle, order) pairs, order in {"return_last_pickup", "stay"}.
    """
    pairs = []
    for v in idle_vehicles:
        pos = v.pos()
        for r in unmatched_requests:
            d = matching_distance(pos, r.loc, metric)
            score = urgency(params.alpha, t - r.call_h, d, params.street_speed)
            pairs.append((-score, v.id, r.id, v, r))
    pairs.sort(key=lambda p: (p[0], p[1], p[2]))

    relocations = []
    used_vehicles: set[int] = set()
    used_requests: set[int] = set()
    for _, vid, rid, v, r in pairs:
        if vid in used_vehicles or rid in used_requests:
            continue
        relocations.append((v, r))
        used_vehicles.add(vid)
        used_requests.add(rid)

    fallbacks = []
    for v in idle_vehicles:
        if v.id in used_vehicles:
            continue
        order = "return_last_pickup" if v.at_hub else "stay"
        fallbacks.append((v, order))
    return relocations, fallbacks
