"""Declarative scenario model, validation and file I/O.

A scenario lists stations (pose trajectory, localisation noise, sensor
model, sharing mode), pedestrians (start point, piecewise-constant velocity,
process noise), directed communication links and optional occlusion masks.
Files are JSON or YAML documents checked against ``scenario.schema.json``
shipped with the package, followed by semantic checks that the schema
cannot express.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from ..errors import ScenarioError
from ..tracker import TrackerConfig

SHARE_MODES = ("tracks", "detections")
STATION_TYPES = ("vehicle", "roadside_unit")


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class VelocityStep:
    """Velocity that applies from time ``t`` until the next step."""

    t: float
    vx: float
    vy: float


@dataclass
class StationSpec:
    station_id: int
    station_type: str
    trajectory: list[Waypoint]
    localization_std: tuple[float, float]
    sensor_range: float
    sensor_noise_std: float
    share_mode: str
    detection_probability: float = 1.0

    def pose_at(self, t: float) -> tuple[float, float, float]:
        """True pose by linear interpolation between waypoints (clamped)."""
        wps = self.trajectory
        if len(wps) == 1 or t <= wps[0].t:
            w = wps[0]
            return w.x, w.y, w.theta
        if t >= wps[-1].t:
            w = wps[-1]
            return w.x, w.y, w.theta
        k = bisect.bisect_right([w.t for w in wps], t) - 1
        a, b = wps[k], wps[k + 1]
        s = (t - a.t) / (b.t - a.t)
        dtheta = math.remainder(b.theta - a.theta, 2.0 * math.pi)
        return a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.theta + s * dtheta


@dataclass
class PedestrianSpec:
    pedestrian_id: int
    initial_position: tuple[float, float]
    velocity_profile: list[VelocityStep] = field(default_factory=list)
    process_noise_std: float = 0.0
    label: str = ""

    def velocity_at(self, t: float) -> tuple[float, float]:
        current = (0.0, 0.0)
        for step in self.velocity_profile:
            if step.t <= t:
                current = (step.vx, step.vy)
            else:
                break
        return current


@dataclass(frozen=True)
class Link:
    source: int
    target: int
    latency_ticks: int = 1


@dataclass(frozen=True)
class Occlusion:
    """A blind spot of station ``station`` during [start, end).

    The listed pedestrians are never detected while it is active. With a
    ``region`` (world-frame circle ``(x, y, radius)``) every pedestrian inside
    it is hidden as well, and the station's tracker knows about the region:
    its detection probability there is zero, so tracks inside are not
    discounted for missed detections. Without a region the station is unaware
    of the blind spot, as with a silent sensor fault.
    """

    station: int
    pedestrians: tuple[int, ...] = ()
    start: float = 0.0
    end: float = math.inf
    region: tuple[float, float, float] | None = None

    def active(self, t: float) -> bool:
        return self.start <= t < self.end

    def covers(self, x: float, y: float) -> bool:
        """Whether the world point lies inside the region (False without one)."""
        if self.region is None:
            return False
        cx, cy, r = self.region
        return (x - cx) ** 2 + (y - cy) ** 2 <= r * r


@dataclass
class TrackerSettings:
    """Tracker parameters shared by every station in a scenario."""

    process_noise_velocity_std: float = 1.0
    process_noise_accel_std: float = 0.0
    detection_probability: float = 0.9
    remote_detection_probability: float = 0.9
    clutter_density: float = 1e-6
    birth_density: float = 1e-4
    birth_weight: float = 1e-3
    birth_velocity_std: float = 2.0
    prune_threshold: float = 1e-4
    merge_mahalanobis_threshold: float = 3.0
    max_tracks: int = 100
    confirm_weight: float = 0.5
    gate_mahalanobis_sq: float | None = 25.0
    omega_criterion: str = "det"
    likelihood_covariance: str = "independent"
    refresh_aliases: bool = True
    fused_area_margin: float = 2.0

    def tracker_config(self, detection_probability=None) -> TrackerConfig:
        return TrackerConfig(
            process_noise_velocity_std=self.process_noise_velocity_std,
            process_noise_accel_std=self.process_noise_accel_std,
            detection_probability=(
                self.detection_probability if detection_probability is None else detection_probability
            ),
            clutter_density=self.clutter_density,
            birth_density=self.birth_density,
            birth_weight=self.birth_weight,
            birth_velocity_std=self.birth_velocity_std,
            prune_threshold=self.prune_threshold,
            merge_mahalanobis_threshold=self.merge_mahalanobis_threshold,
            max_tracks=self.max_tracks,
            confirm_weight=self.confirm_weight,
            gate_mahalanobis_sq=self.gate_mahalanobis_sq,
            omega_criterion=self.omega_criterion,
            likelihood_covariance=self.likelihood_covariance,
        )


@dataclass
class Scenario:
    stations: list[StationSpec]
    pedestrians: list[PedestrianSpec]
    duration: float
    tick_rate: float
    topology: list[Link]
    rng_seed: int
    occlusions: list[Occlusion] = field(default_factory=list)
    tracker: TrackerSettings = field(default_factory=TrackerSettings)
    name: str = ""
    reference_station: int | None = None
    steady_state_start: float | None = None

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def tick_count(self) -> int:
        return int(round(self.duration * self.tick_rate))

    @property
    def reference_id(self) -> int:
        if self.reference_station is not None:
            return self.reference_station
        return self.stations[0].station_id

    def steady_state_tick(self, ticks: int | None = None) -> int:
        """First tick of the steady-state window (default: last 20% of ticks)."""
        n = self.tick_count if ticks is None else ticks
        if self.steady_state_start is not None:
            return min(int(round(self.steady_state_start * self.tick_rate)), max(n - 1, 0))
        return int(0.8 * n)

    def station(self, station_id: int) -> StationSpec:
        for s in self.stations:
            if s.station_id == station_id:
                return s
        raise KeyError(station_id)

    def validate(self) -> Scenario:
        validate_scenario_dict(self.to_dict())
        return self

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "duration": self.duration,
            "tick_rate": self.tick_rate,
            "rng_seed": self.rng_seed,
        }
        if self.reference_station is not None:
            out["reference_station"] = self.reference_station
        if self.steady_state_start is not None:
            out["steady_state_start"] = self.steady_state_start
        out["tracker"] = asdict(self.tracker)
        out["stations"] = [
            {
                "id": s.station_id,
                "type": s.station_type,
                "trajectory": [asdict(w) for w in s.trajectory],
                "localization_std": {
                    "position": s.localization_std[0],
                    "heading": s.localization_std[1],
                },
                "sensor_range": s.sensor_range,
                "sensor_noise_std": s.sensor_noise_std,
                "share_mode": s.share_mode,
                "detection_probability": s.detection_probability,
            }
            for s in self.stations
        ]
        out["pedestrians"] = [
            {
                "id": p.pedestrian_id,
                "label": p.label,
                "initial_position": list(p.initial_position),
                "velocity_profile": [asdict(v) for v in p.velocity_profile],
                "process_noise_std": p.process_noise_std,
            }
            for p in self.pedestrians
        ]
        out["topology"] = [
            {"from": l.source, "to": l.target, "latency_ticks": l.latency_ticks} for l in self.topology
        ]
        out["occlusions"] = [_occlusion_dict(o) for o in self.occlusions]
        return out


def _occlusion_dict(o: Occlusion) -> dict:
    out = {"station": o.station, "pedestrians": list(o.pedestrians), "start": o.start, "end": o.end}
    if o.region is not None:
        out["region"] = {"x": o.region[0], "y": o.region[1], "radius": o.region[2]}
    return out


def _schema() -> dict:
    text = resources.files("cpfusion.sim").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


SCENARIO_SCHEMA = _schema()


def _field_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def validate_scenario_dict(data: Any) -> None:
    """Schema plus semantic validation; raises :class:`ScenarioError`."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(_field_path(err.absolute_path), err.message)

    ids = [s["id"] for s in data["stations"]]
    seen: set[int] = set()
    for k, sid in enumerate(ids):
        if sid in seen:
            raise ScenarioError(f"stations[{k}].id", f"duplicate station id {sid}")
        seen.add(sid)
    for k, s in enumerate(data["stations"]):
        times = [w["t"] for w in s["trajectory"]]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"stations[{k}].trajectory", "waypoint times must increase")
    ped_ids: set[int] = set()
    for k, p in enumerate(data.get("pedestrians", [])):
        if p["id"] in ped_ids:
            raise ScenarioError(f"pedestrians[{k}].id", f"duplicate pedestrian id {p['id']}")
        ped_ids.add(p["id"])
        times = [v["t"] for v in p.get("velocity_profile", [])]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"pedestrians[{k}].velocity_profile", "step times must increase")
    links = set()
    for k, link in enumerate(data.get("topology", [])):
        for end in ("from", "to"):
            if link[end] not in seen:
                raise ScenarioError(f"topology[{k}].{end}", f"unknown station {link[end]}")
        if link["from"] == link["to"]:
            raise ScenarioError(f"topology[{k}]", "self links are not allowed")
        key = (link["from"], link["to"])
        if key in links:
            raise ScenarioError(f"topology[{k}]", f"duplicate link {key}")
        links.add(key)
    for k, occ in enumerate(data.get("occlusions", [])):
        if occ["station"] not in seen:
            raise ScenarioError(f"occlusions[{k}].station", f"unknown station {occ['station']}")
        if not occ.get("pedestrians") and "region" not in occ:
            raise ScenarioError(f"occlusions[{k}]", "needs pedestrians or a region")
        for j, pid in enumerate(occ.get("pedestrians", [])):
            if pid not in ped_ids:
                raise ScenarioError(f"occlusions[{k}].pedestrians[{j}]", f"unknown pedestrian {pid}")
        if occ["end"] < occ["start"]:
            raise ScenarioError(f"occlusions[{k}].end", "end precedes start")
    ref = data.get("reference_station")
    if ref is not None and ref not in seen:
        raise ScenarioError("reference_station", f"unknown station {ref}")
    if int(round(data["duration"] * data["tick_rate"])) < 1:
        raise ScenarioError("duration", "scenario must contain at least one tick")


def scenario_from_dict(data: Any) -> Scenario:
    validate_scenario_dict(data)
    tracker = TrackerSettings(**data.get("tracker", {}))
    stations = [
        StationSpec(
            station_id=s["id"],
            station_type=s["type"],
            trajectory=[Waypoint(**w) for w in s["trajectory"]],
            localization_std=(s["localization_std"]["position"], s["localization_std"]["heading"]),
            sensor_range=s["sensor_range"],
            sensor_noise_std=s["sensor_noise_std"],
            share_mode=s["share_mode"],
            detection_probability=s.get("detection_probability", 1.0),
        )
        for s in data["stations"]
    ]
    pedestrians = [
        PedestrianSpec(
            pedestrian_id=p["id"],
            initial_position=tuple(p["initial_position"]),
            velocity_profile=[VelocityStep(**v) for v in p.get("velocity_profile", [])],
            process_noise_std=p.get("process_noise_std", 0.0),
            label=p.get("label", ""),
        )
        for p in data.get("pedestrians", [])
    ]
    topology = [Link(l["from"], l["to"], l.get("latency_ticks", 1)) for l in data.get("topology", [])]
    occlusions = [
        Occlusion(
            o["station"],
            tuple(o.get("pedestrians", [])),
            o["start"],
            o["end"],
            (o["region"]["x"], o["region"]["y"], o["region"]["radius"]) if "region" in o else None,
        )
        for o in data.get("occlusions", [])
    ]
    return Scenario(
        stations=stations,
        pedestrians=pedestrians,
        duration=data["duration"],
        tick_rate=data["tick_rate"],
        topology=topology,
        rng_seed=data["rng_seed"],
        occlusions=occlusions,
        tracker=tracker,
        name=data.get("name", ""),
        reference_station=data.get("reference_station"),
        steady_state_start=data.get("steady_state_start"),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Read a ``.json``, ``.yaml`` or ``.yml`` scenario file.

    I/O problems surface as :class:`OSError`; parse and validation problems
    as :class:`ScenarioError`.
    """
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ScenarioError("<file>", f"cannot parse {path.name}: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    path = Path(path)
    data = scenario.to_dict()
    if path.suffix.lower() in (".yaml", ".yml"):
        path.write_text(yaml.safe_dump(data, sort_keys=False))
    else:
        path.write_text(json.dumps(data, indent=2) + "\n")
