"""Stochastic request generation for the bidirectional feeder demand.

Requests arrive as Poisson processes: outbound trips originate in the
suburb and end at the hub; inbound trips arrive at the hub and end at a
suburb point.  Spatial intensity is uniform or decays exponentially with
the distance to the freeway-side boundary (the x = 0 edge).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DemandSpec:
    """Demand intensities (patrons/km^2/h) and decay coefficients (1/km)."""

    lambda_ob: float
    lambda_ib: float
    mu_ob: float = 0.0
    mu_ib: float = 0.0
    horizon_h: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.lambda_ob < 0 or self.lambda_ib < 0:
            raise ValueError("demand rates must be nonnegative")
        if self.horizon_h <= 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class RequestEvent:
    """One trip request.

    ``x, y`` is the suburb-side trip end: the origin of an outbound trip,
    the destination of an inbound one (inbound patrons appear at the hub).
    """

    id: int
    t: float
    direction: str  # "OB" | "IB"
    x: float
    y: float


def freeway_distance(x: float, y: float) -> float:
    """Distance from a suburb point to the boundary the freeway attaches to."""
    return x


def intensity_at(spec: DemandSpec, loc, direction: str) -> float:
    """Local request intensity, lambda * exp(-mu * distance-to-freeway)."""
    if direction == "OB":
        lam, mu = spec.lambda_ob, spec.mu_ob
    elif direction == "IB":
        lam, mu = spec.lambda_ib, spec.mu_ib
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return lam * math.exp(-mu * freeway_distance(loc[0], loc[1]))


def total_rate(spec: DemandSpec, region: tuple[float, float], direction: str) -> float:
    """Region-integrated arrival rate in patrons/h."""
    w, h = region
    lam = spec.lambda_ob if direction == "OB" else spec.lambda_ib
    mu = spec.mu_ob if direction == "OB" else spec.mu_ib
    if mu == 0:
        return lam * w * h
    return lam * h * (1.0 - math.exp(-mu * w)) / mu


def _poisson_times(rate: float, horizon: float, rng: np.random.Generator) -> list[float]:
    times = []
    t = 0.0
    if rate <= 0:
        return times
    while True:
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            return times
        times.append(t)


def _sample_locations(n: int, mu: float, region, rng: np.random.Generator) -> list[tuple[float, float]]:
    """Rejection-sample n points with density proportional to exp(-mu*x)."""
    w, h = region
    out = []
    while len(out) < n:
        x = rng.uniform(0.0, w)
        y = rng.uniform(0.0, h)
        if mu == 0 or rng.random() <= math.exp(-mu * x):
            out.append((x, y))
    return out


def _generate(spec, region, rng, direction: str) -> list[RequestEvent]:
    lam = spec.lambda_ob if direction == "OB" else spec.lambda_ib
    mu = spec.mu_ob if direction == "OB" else spec.mu_ib
    if lam <= 0:
        return []
    times = _poisson_times(total_rate(spec, region, direction), spec.horizon_h, rng)
    locs = _sample_locations(len(times), mu, region, rng)
    return [
        RequestEvent(i, t, direction, loc[0], loc[1])
        for i, (t, loc) in enumerate(zip(times, locs))
    ]


def generate_outbound(spec: DemandSpec, region, rng: np.random.Generator) -> list[RequestEvent]:
    """Time-ordered outbound request stream, reproducible per rng state."""
    return _generate(spec, region, rng, "OB")


def generate_inbound(spec: DemandSpec, region, rng: np.random.Generator) -> list[RequestEvent]:
    """Time-ordered hub arrivals; each event's (x, y) is its destination."""
    return _generate(spec, region, rng, "IB")


def merge_streams(outbound, inbound) -> list[RequestEvent]:
    """Interleave both streams into one id sequence ordered by call time."""
    merged = sorted(outbound + inbound, key=lambda e: (e.t, e.direction, e.id))
    return [RequestEvent(i, e.t, e.direction, e.x, e.y) for i, e in enumerate(merged)]


TRACE_FIELDS = ("id", "t", "direction", "x", "y")


def save_trace(events, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for e in events:
            writer.writerow([e.id, repr(e.t), e.direction, repr(e.x), repr(e.y)])


def load_trace(path: str) -> list[RequestEvent]:
    events = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != TRACE_FIELDS:
            raise ValueError(f"trace file must have columns {TRACE_FIELDS}")
        for row in reader:
            events.append(
                RequestEvent(int(row["id"]), float(row["t"]), row["direction"], float(row["x"]), float(row["y"]))
            )
    events.sort(key=lambda e: (e.t, e.id))
    return events
