"""Expected-force spreading risk on seat-weighted airline networks."""

__version__ = "0.1.0"

from .exf import AefScore, all_aef, cluster_foi, enumerate_patterns, expected_force, normalize_scores
from .wan import (
    AirportRecord,
    RouteRecord,
    SeatTable,
    WanGraph,
    build_network,
    degrade_network,
    load_bundle,
    parse_airports,
    parse_routes,
    resolve_route_weight,
    save_bundle,
    synthetic_network,
    synthetic_regions,
)

__all__ = [
    "AefScore",
    "AirportRecord",
    "RouteRecord",
    "SeatTable",
    "WanGraph",
    "all_aef",
    "build_network",
    "cluster_foi",
    "degrade_network",
    "enumerate_patterns",
    "expected_force",
    "load_bundle",
    "normalize_scores",
    "parse_airports",
    "parse_routes",
    "resolve_route_weight",
    "save_bundle",
    "synthetic_network",
    "synthetic_regions",
]
