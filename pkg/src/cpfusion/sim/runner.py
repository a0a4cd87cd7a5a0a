"""Tick-based multi-station simulation.

Every tick, for each station in id order:

1. pedestrians advance (seeded process noise);
2. the station predicts its tracks to the new time and re-expresses them in
   its new body frame (odometry is taken as exact);
3. it draws a noisy self-pose and noisy detections of the pedestrians in
   range that are not masked by an occlusion;
4. it updates its tracker with its own detections;
5. it encodes its CPM (tracks or raw detections, by share mode) and posts
   it on its outgoing links for delivery after the link latency;
6. it decodes the CPMs delivered this tick, moves their contents into its
   frame with the covariance-aware transform, time-aligns them, folds relayed
   detections in through the tracker update and relayed tracks through
   track-to-track fusion.

Tracks already carry everything fused in earlier ticks, so information
still spreads across the network. Encoding before the inbox is processed
means a station never withholds an object it currently sees just because
other stations have not reported it yet.

Stations only exchange encoded byte payloads. All randomness comes from one
seed split into independent streams, so a scenario and seed fully determine
the output.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .. import cpm as cpm_codec
from ..geometry import DetectionArea, Pose2D, relative_pose, rotation, transform_mean_covs
from ..t2t import RemoteDetectionModel, RemoteTrack, fuse_all_stations
from ..tracker import Detection, Tracker, predict_state
from .scenario import Scenario, StationSpec

ASSOCIATION_GATE = 2.0
MAX_HEADING_VARIANCE = math.pi**2 / 3.0


@dataclass
class TrackSnapshot:
    local_id: int
    weight: float
    mean: np.ndarray
    cov: np.ndarray
    trace_xyt: float
    truth_id: int | None = None
    position_error: float = math.nan
    nees: float = math.nan


@dataclass
class StationTick:
    station_id: int
    tracks: list[TrackSnapshot]
    truth: dict[int, np.ndarray] = field(default_factory=dict)

    def track_for(self, pedestrian_id: int) -> TrackSnapshot | None:
        for t in self.tracks:
            if t.truth_id == pedestrian_id:
                return t
        return None


@dataclass
class TickRecord:
    tick: int
    time: float
    stations: list[StationTick]

    def station(self, station_id: int) -> StationTick:
        for s in self.stations:
            if s.station_id == station_id:
                return s
        raise KeyError(station_id)


def heading_variance(mean: np.ndarray, cov: np.ndarray) -> float:
    """First-order variance of ``atan2(vy, vx)``, capped at a uniform heading."""
    vx, vy = float(mean[2]), float(mean[3])
    s2 = vx * vx + vy * vy
    if s2 == 0.0:
        return MAX_HEADING_VARIANCE
    j = np.array([-vy, vx]) / s2
    return min(float(j @ cov[2:, 2:] @ j), MAX_HEADING_VARIANCE)


def trace_xyt(mean: np.ndarray, cov: np.ndarray) -> float:
    """Trace of the covariance over (x, y, heading)."""
    return float(cov[0, 0] + cov[1, 1]) + heading_variance(mean, cov)


def _transformed(objects, sender: Pose2D, own: Pose2D):
    """Yield ``(object, mean, cov)`` in the receiver frame, in input order."""
    out = [None] * len(objects)
    for n in (2, 4):
        idx = [k for k, o in enumerate(objects) if o.mean.size == n]
        if not idx:
            continue
        means, covs = transform_mean_covs(
            sender,
            np.array([objects[k].mean for k in idx]),
            np.array([objects[k].cov for k in idx]),
            own,
        )
        for row, k in enumerate(idx):
            out[k] = (objects[k], means[row], covs[row])
    return out


class _Station:
    def __init__(self, spec: StationSpec, scenario: Scenario, rng: np.random.Generator, inbound: bool):
        self.spec = spec
        self.rng = rng
        self.inbound = inbound
        settings = scenario.tracker
        range_sq = spec.sensor_range**2
        p_own = settings.detection_probability
        # Known blind regions as (x, y, radius) in the current body frame.
        self.masks: list[tuple[float, float, float]] = []
        masks = self.masks

        def own_detection_probability(mean, _r2=range_sq, _p=p_own):
            x, y = mean[0], mean[1]
            if x * x + y * y > _r2:
                return 0.0
            for mx, my, r in masks:
                if (x - mx) ** 2 + (y - my) ** 2 <= r * r:
                    return 0.0
            return _p

        self.tracker = Tracker(settings.tracker_config(own_detection_probability))
        self.settings = settings
        self.true_pose = spec.pose_at(0.0)
        self.pose_estimate = Pose2D.identity()
        self.detections: list[Detection] = []
        sensor_area = DetectionArea(0.0, 0.0, spec.sensor_range)
        self.physical_sensor = cpm_codec.SensorInfoContainer(0, cpm_codec.SensorType.LIDAR, sensor_area)

    def move_to(self, new_pose) -> None:
        """Re-express the tracks in the body frame at ``new_pose`` (exact odometry)."""
        ox, oy, ot = self.true_pose
        nx, ny, nt = new_pose
        self.true_pose = new_pose
        if (ox, oy, ot) == (nx, ny, nt):
            return
        t_rel = rotation(ot).T @ np.array([nx - ox, ny - oy])
        r_inv = rotation(nt - ot).T
        j = np.zeros((4, 4))
        j[:2, :2] = r_inv
        j[2:, 2:] = r_inv
        moved = []
        for t in self.tracker.tracks:
            mean = np.concatenate([r_inv @ (t.mean[:2] - t_rel), r_inv @ t.mean[2:]])
            moved.append(t.copy(mean=mean, cov=j @ t.cov @ j.T))
        self.tracker.tracks = moved

    def set_masks(self, regions) -> None:
        """Express active world-frame blind regions in the body frame."""
        self.masks.clear()
        for cx, cy, r in regions:
            bx, by = self.body_frame(np.array([[cx, cy]]))[0]
            self.masks.append((float(bx), float(by), r))

    def draw_pose(self) -> None:
        x, y, theta = self.true_pose
        sp, sh = self.spec.localization_std
        noise = self.rng.normal(size=3) * np.array([sp, sp, sh])
        cov = np.diag([sp * sp, sp * sp, sh * sh])
        self.pose_estimate = Pose2D(x + noise[0], y + noise[1], theta + noise[2], cov)

    def body_frame(self, world_points: np.ndarray) -> np.ndarray:
        x, y, theta = self.true_pose
        return (world_points - np.array([x, y])) @ rotation(theta)

    def sense(self, truth_ids, truth_local, blind: set[int]) -> None:
        spec = self.spec
        sigma = spec.sensor_noise_std
        cov = np.eye(2) * max(sigma * sigma, 1e-12)
        dets = []
        for pid, p in zip(truth_ids, truth_local):
            if pid in blind or p[0] * p[0] + p[1] * p[1] > spec.sensor_range**2:
                continue
            if spec.detection_probability < 1.0 and self.rng.random() >= spec.detection_probability:
                continue
            dets.append(Detection(p + self.rng.normal(size=2) * sigma, cov.copy()))
        self.detections = dets
        self.tracker.update(dets)

    def receive(self, payloads: list[bytes], now: float, decode=cpm_codec.decode) -> None:
        if not payloads:
            return
        messages = sorted(
            (decode(p) for p in payloads), key=lambda m: (m.generation_time, m.station_id)
        )
        own = self.pose_estimate
        settings = self.settings
        config = self.tracker.config
        track_batches = []
        for msg in messages:
            sender = msg.management.reference_pose
            model = RemoteDetectionModel(
                [s.detection_area for s in msg.sensors],
                relative_pose(own, sender),
                settings.remote_detection_probability,
            )
            age = max(now - msg.generation_time / 1000.0, 0.0)
            detections = []
            remotes = []
            for obj, mean, cov in _transformed(msg.perceived_objects, sender, own):
                if obj.abstraction == cpm_codec.Abstraction.DETECTION:
                    detections.append(Detection(mean, cov, age=age))
                else:
                    if mean.size == 4:
                        mean, cov = predict_state(mean, cov, age, config)
                    remotes.append(RemoteTrack(mean, cov, msg.station_id, obj.object_id))
            if detections:
                self.tracker.update(detections, detection_probability=model)
            if remotes or not detections:
                # An empty message still tells us what the sender did not see.
                track_batches.append((msg.station_id, remotes, model))
        if track_batches:
            self.tracker.tracks = fuse_all_stations(
                self.tracker.tracks,
                track_batches,
                config,
                self.tracker.new_id,
                refresh=settings.refresh_aliases,
            )

    def snapshot(self, truth_ids, truth_local) -> StationTick:
        confirmed = sorted(self.tracker.confirmed(), key=lambda t: t.local_id)
        snaps = [
            TrackSnapshot(t.local_id, t.weight, t.mean.copy(), t.cov.copy(), trace_xyt(t.mean, t.cov))
            for t in confirmed
        ]
        truth = {pid: p.copy() for pid, p in zip(truth_ids, truth_local)}
        if snaps and truth_ids:
            est = np.array([s.mean[:2] for s in snaps])
            dist = np.linalg.norm(est[:, None, :] - truth_local[None, :, :], axis=2)
            cost = np.where(dist <= ASSOCIATION_GATE, dist, 1e6)
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if dist[r, c] > ASSOCIATION_GATE:
                    continue
                s = snaps[r]
                err = s.mean[:2] - truth_local[c]
                s.truth_id = truth_ids[c]
                s.position_error = float(np.hypot(*err))
                s.nees = float(err @ np.linalg.solve(s.cov[:2, :2], err))
        return StationTick(self.spec.station_id, snaps, truth)

    def _fused_areas(self, confirmed) -> list[cpm_codec.SensorInfoContainer]:
        """Coverage claimed for tracks known only through fusion.

        Each reported track whose circle of three standard deviations plus a
        margin is not wholly inside the physical sensor range gets that
        circle, so receivers expect this station to report an object only
        where it currently does. Tracks near the range edge need one too: a
        receiver's copy of the object may land just outside the range, and
        would then be treated as invisible to this station even though it is
        being reported. Past the container limit a single circle around all
        of them is used instead.
        """
        margin = self.settings.fused_area_margin
        sensor_range = self.spec.sensor_range
        areas = []
        for t in confirmed:
            x, y = float(t.mean[0]), float(t.mean[1])
            sigma = math.sqrt(max(float(np.linalg.eigvalsh(t.cov[:2, :2])[-1]), 0.0))
            radius = 3.0 * sigma + margin
            if math.hypot(x, y) + radius <= sensor_range:
                continue
            areas.append(DetectionArea(x, y, radius))
        if len(areas) >= cpm_codec.MAX_SENSORS:
            reach = max(math.hypot(a.cx, a.cy) + a.radius for a in areas)
            areas = [DetectionArea(0.0, 0.0, reach)]
        return [
            cpm_codec.SensorInfoContainer(k + 1, cpm_codec.SensorType.FUSED, a)
            for k, a in enumerate(areas)
        ]

    def outgoing_cpm(self, tick_time: float) -> bytes:
        spec = self.spec
        gen_time = int(round(tick_time * 1000.0))
        station_type = (
            cpm_codec.StationType.ROADSIDE_UNIT
            if spec.station_type == "roadside_unit"
            else cpm_codec.StationType.VEHICLE
        )
        sensors = [self.physical_sensor]
        if spec.share_mode == "detections":
            msg = cpm_codec.detections_to_cpm(
                self.detections,
                self.pose_estimate,
                station_id=spec.station_id,
                generation_time=gen_time,
                station_type=station_type,
                sensors=sensors,
            )
        else:
            confirmed = self.tracker.confirmed()
            if self.inbound:
                sensors.extend(self._fused_areas(confirmed))
            msg = cpm_codec.tracks_to_cpm(
                confirmed,
                self.pose_estimate,
                self.tracker.config,
                station_id=spec.station_id,
                generation_time=gen_time,
                station_type=station_type,
                sensors=sensors,
            )
        return cpm_codec.encode(msg)


def run_scenario(scenario: Scenario, ticks: int | None = None) -> list[TickRecord]:
    """Simulate ``scenario`` and return one record per tick."""
    scenario.validate()
    n_ticks = scenario.tick_count if ticks is None else int(ticks)
    if n_ticks < 0:
        raise ValueError("ticks must be >= 0")
    dt = scenario.dt
    root = np.random.SeedSequence(scenario.rng_seed)
    truth_seq, *station_seqs = root.spawn(1 + len(scenario.stations))
    truth_rng = np.random.Generator(np.random.PCG64(truth_seq))

    specs = sorted(scenario.stations, key=lambda s: s.station_id)
    seq_by_id = {s.station_id: q for s, q in zip(scenario.stations, station_seqs)}
    inbound = {l.target for l in scenario.topology}
    stations = [
        _Station(s, scenario, np.random.Generator(np.random.PCG64(seq_by_id[s.station_id])), s.station_id in inbound)
        for s in specs
    ]
    outgoing = defaultdict(list)
    for link in scenario.topology:
        outgoing[link.source].append(link)

    peds = sorted(scenario.pedestrians, key=lambda p: p.pedestrian_id)
    ped_ids = [p.pedestrian_id for p in peds]
    positions = np.array([p.initial_position for p in peds], dtype=float).reshape(-1, 2)

    inbox: dict[int, dict[int, list[bytes]]] = defaultdict(lambda: defaultdict(list))
    records = []
    for k in range(n_ticks):
        now = k * dt
        if k > 0:
            prev = now - dt
            for i, p in enumerate(peds):
                vx, vy = p.velocity_at(prev)
                if p.process_noise_std > 0.0:
                    vx, vy = np.array([vx, vy]) + truth_rng.normal(size=2) * p.process_noise_std
                positions[i] += np.array([vx, vy]) * dt
        delivered = inbox.pop(k, {})
        # A broadcast reaches several receivers; decode each payload once.
        decoded: dict[bytes, cpm_codec.Cpm] = {}

        def decode(payload: bytes) -> cpm_codec.Cpm:
            if payload not in decoded:
                decoded[payload] = cpm_codec.decode(payload)
            return decoded[payload]

        station_ticks = []
        for st in stations:
            sid = st.spec.station_id
            if k > 0:
                st.tracker.predict(dt)
            st.move_to(st.spec.pose_at(now))
            st.draw_pose()
            active = [o for o in scenario.occlusions if o.station == sid and o.active(now)]
            blind = {pid for occ in active for pid in occ.pedestrians}
            blind.update(
                pid
                for occ in active
                for pid, (px, py) in zip(ped_ids, positions)
                if occ.covers(px, py)
            )
            st.set_masks([occ.region for occ in active if occ.region is not None])
            truth_local = st.body_frame(positions) if ped_ids else np.zeros((0, 2))
            st.sense(ped_ids, truth_local, blind)
            if outgoing.get(sid):
                payload = st.outgoing_cpm(now)
                for link in outgoing[sid]:
                    inbox[k + link.latency_ticks][link.target].append(payload)
            st.receive(delivered.get(sid, []), now, decode)
            station_ticks.append(st.snapshot(ped_ids, truth_local))
        records.append(TickRecord(k, now, station_ticks))
    return records
