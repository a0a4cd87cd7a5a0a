"""Multi-station collective perception simulator."""

from .builders import (
    build_occlusion_scenario,
    build_paper_grid_scenario,
    build_ping_pong_scenario,
    build_relay_scenario,
    build_single_station_scenario,
)
from .metrics import MetricsSummary, summarize
from .runner import StationTick, TickRecord, TrackSnapshot, run_scenario, trace_xyt
from .scenario import (
    Link,
    Occlusion,
    PedestrianSpec,
    Scenario,
    StationSpec,
    TrackerSettings,
    VelocityStep,
    Waypoint,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    validate_scenario_dict,
)

__all__ = [
    "Link",
    "MetricsSummary",
    "Occlusion",
    "PedestrianSpec",
    "Scenario",
    "StationSpec",
    "StationTick",
    "TickRecord",
    "TrackSnapshot",
    "TrackerSettings",
    "VelocityStep",
    "Waypoint",
    "build_occlusion_scenario",
    "build_paper_grid_scenario",
    "build_ping_pong_scenario",
    "build_relay_scenario",
    "build_single_station_scenario",
    "load_scenario",
    "run_scenario",
    "save_scenario",
    "scenario_from_dict",
    "summarize",
    "trace_xyt",
    "validate_scenario_dict",
]
