"""feedersim: agent-based simulation of on-demand feeder services.

A self-contained mesoscopic simulator for shared-ride feeder systems that
connect a suburban street grid to a transit hub: batched ride-pooling with
an optimized matching buffer, instant nearest-vehicle ride-sharing,
headway-dispatched flexible-route buses, and a non-shared taxi mode.
"""

__version__ = "0.1.0"

from .network import (
    Location,
    Network,
    NetworkError,
    Path,
    Zone,
    buffer_area,
    build_grid,
    load_network,
    matching_distance,
    partition_zones,
    save_network,
    shortest_path,
    travel_time,
)

__all__ = [
    "Location",
    "Network",
    "NetworkError",
    "Path",
    "Zone",
    "buffer_area",
    "build_grid",
    "load_network",
    "matching_distance",
    "partition_zones",
    "save_network",
    "shortest_path",
    "travel_time",
    "__version__",
]
