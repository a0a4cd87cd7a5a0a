"""Compact binary codec for collective perception messages.

Layout (all integers little-endian)::

    header     "CPM1" | version u8 | station_id u32 | generation_time u64 | count u8
    container  tag u8 | length u16 | body

    1 management       station_type u8 | x i32 | y i32 | heading i16
                       | std_x u16 | std_y u16 | std_heading u16
    2 station data     heading i16 | speed u16 | length u16 | width u16
    3 sensor info      sensor_id u8 | sensor_type u8 | kind u8 | cx i32 | cy i32
                       | radius u32 [| start i16 | end i16]          (kind 1 = sector)
    4 perceived object presence u8 | object_id u16 | abstraction u8 | x i32 | y i32
                       [| vx i16 | vy i16] | lower-triangular cov f32 x (3 | 10)
                       | object_type u8                         (presence bit0 = velocity)
    5 free space       opaque bytes

Units: positions and lengths 0.01 m, speeds 0.01 m/s, angles 0.0001 rad,
position standard deviations 0.001 m, heading standard deviation
0.0001 rad. Position standard deviations never go below 0.005 m, the
smallest value the message format is meant to express. The reference pose
covariance travels as its diagonal.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import (
    EncodeRangeError,
    MalformedCovarianceError,
    MalformedPayloadError,
    MalformedTruncatedError,
    UnsupportedVersionError,
)
from .geometry import DetectionArea, Pose2D, normalize_angle

MAGIC = b"CPM1"
PROTOCOL_VERSION = 1
MAX_OBJECTS = 128
MAX_SENSORS = 64
MAX_PAYLOAD = 65_535

POS_UNIT = 0.01
SPEED_UNIT = 0.01
ANGLE_UNIT = 1e-4
STD_POS_UNIT = 1e-3
STD_ANGLE_UNIT = 1e-4
MIN_POSITION_STD = 0.005

TAG_MANAGEMENT = 1
TAG_STATION_DATA = 2
TAG_SENSOR_INFO = 3
TAG_PERCEIVED_OBJECT = 4
TAG_FREE_SPACE = 5

_HEADER = struct.Struct("<4sBIQB")
_CONTAINER = struct.Struct("<BH")
_MANAGEMENT = struct.Struct("<BiihHHH")
_STATION_DATA = struct.Struct("<hHHH")
_SENSOR = struct.Struct("<BBBiiI")
_SECTOR = struct.Struct("<hh")
_OBJECT_HEAD = struct.Struct("<BHBii")
_VELOCITY = struct.Struct("<hh")

_INT_RANGES = {
    "b": (-(2**7), 2**7 - 1),
    "B": (0, 2**8 - 1),
    "h": (-(2**15), 2**15 - 1),
    "H": (0, 2**16 - 1),
    "i": (-(2**31), 2**31 - 1),
    "I": (0, 2**32 - 1),
    "Q": (0, 2**64 - 1),
}


class StationType(IntEnum):
    VEHICLE = 0
    ROADSIDE_UNIT = 1


class SensorType(IntEnum):
    LIDAR = 0
    CAMERA = 1
    FUSED = 2


class Abstraction(IntEnum):
    DETECTION = 0
    TRACK = 1


class ObjectType(IntEnum):
    PEDESTRIAN = 0
    VEHICLE = 1
    UNKNOWN = 2


class CpmTruncationWarning(UserWarning):
    """More objects were available than one message can carry."""


@dataclass
class ManagementContainer:
    station_type: StationType
    reference_pose: Pose2D


@dataclass
class StationDataContainer:
    heading: float
    speed: float
    length: float
    width: float


@dataclass
class SensorInfoContainer:
    sensor_id: int
    sensor_type: SensorType
    detection_area: DetectionArea


@dataclass
class PerceivedObjectContainer:
    object_id: int
    abstraction: Abstraction
    mean: np.ndarray
    cov: np.ndarray
    object_type: ObjectType = ObjectType.PEDESTRIAN

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=float)

    @property
    def has_velocity(self) -> bool:
        return self.mean.size == 4


@dataclass
class Cpm:
    station_id: int
    generation_time: int
    management: ManagementContainer
    station_data: StationDataContainer | None = None
    sensors: list[SensorInfoContainer] = field(default_factory=list)
    perceived_objects: list[PerceivedObjectContainer] = field(default_factory=list)
    free_space: list[bytes] = field(default_factory=list)
    protocol_version: int = PROTOCOL_VERSION


# -- encoding ---------------------------------------------------------------


def _check_int(value: int, fmt: str, name: str) -> int:
    lo, hi = _INT_RANGES[fmt]
    if not lo <= value <= hi:
        raise EncodeRangeError(name, f"{value} outside [{lo}, {hi}]")
    return value


def _quant(value: float, unit: float, fmt: str, name: str) -> int:
    if not math.isfinite(value):
        raise EncodeRangeError(name, f"non-finite value {value!r}")
    return _check_int(int(round(value / unit)), fmt, name)


def _quant_angle(value: float, name: str) -> int:
    if not math.isfinite(value):
        raise EncodeRangeError(name, f"non-finite value {value!r}")
    return _quant(normalize_angle(value), ANGLE_UNIT, "h", name)


def _quant_std(value: float, unit: float, floor: float, name: str) -> int:
    if not (math.isfinite(value) and value >= 0.0):
        raise EncodeRangeError(name, f"standard deviation must be finite and >= 0, got {value!r}")
    return _check_int(max(int(round(value / unit)), int(round(floor / unit))), "H", name)


def _pose_std(cov: np.ndarray, index: int) -> float:
    return math.sqrt(max(float(cov[index, index]), 0.0))


def _encode_management(m: ManagementContainer) -> bytes:
    pose = m.reference_pose
    return _MANAGEMENT.pack(
        _check_int(int(m.station_type), "B", "management.station_type"),
        _quant(pose.x, POS_UNIT, "i", "management.x"),
        _quant(pose.y, POS_UNIT, "i", "management.y"),
        _quant_angle(pose.theta, "management.heading"),
        _quant_std(_pose_std(pose.cov, 0), STD_POS_UNIT, MIN_POSITION_STD, "management.std_x"),
        _quant_std(_pose_std(pose.cov, 1), STD_POS_UNIT, MIN_POSITION_STD, "management.std_y"),
        _quant_std(_pose_std(pose.cov, 2), STD_ANGLE_UNIT, 0.0, "management.std_heading"),
    )


def _encode_station_data(s: StationDataContainer) -> bytes:
    if s.speed < 0.0:
        raise EncodeRangeError("station_data.speed", "speed must be >= 0")
    if not (s.length > 0.0 and s.width > 0.0):
        raise EncodeRangeError("station_data.dimensions", "length and width must be > 0")
    return _STATION_DATA.pack(
        _quant_angle(s.heading, "station_data.heading"),
        _quant(s.speed, SPEED_UNIT, "H", "station_data.speed"),
        _quant(s.length, POS_UNIT, "H", "station_data.length"),
        _quant(s.width, POS_UNIT, "H", "station_data.width"),
    )


def _encode_sensor(s: SensorInfoContainer, k: int) -> bytes:
    name = f"sensors[{k}]"
    area = s.detection_area
    body = _SENSOR.pack(
        _check_int(int(s.sensor_id), "B", f"{name}.sensor_id"),
        _check_int(int(s.sensor_type), "B", f"{name}.sensor_type"),
        1 if area.is_sector else 0,
        _quant(area.cx, POS_UNIT, "i", f"{name}.cx"),
        _quant(area.cy, POS_UNIT, "i", f"{name}.cy"),
        _quant(area.radius, POS_UNIT, "I", f"{name}.radius"),
    )
    if area.is_sector:
        body += _SECTOR.pack(
            _quant_angle(area.start, f"{name}.start"),
            _quant_angle(area.end, f"{name}.end"),
        )
    return body


def floor_position_variance(cov: np.ndarray) -> np.ndarray:
    """Raise the position variances to at least ``MIN_POSITION_STD ** 2``."""
    cov = np.array(cov, dtype=float)
    floor = MIN_POSITION_STD**2
    for i in (0, 1):
        if cov[i, i] < floor:
            cov[i, i] = floor
    return cov


def _encode_object(o: PerceivedObjectContainer, k: int) -> bytes:
    name = f"perceived_objects[{k}]"
    n = o.mean.size
    if n not in (2, 4):
        raise EncodeRangeError(f"{name}.mean", f"expected 2 or 4 entries, got {n}")
    if o.cov.shape != (n, n):
        raise EncodeRangeError(f"{name}.cov", f"shape {o.cov.shape} does not match mean")
    if o.abstraction == Abstraction.DETECTION and n != 2:
        raise EncodeRangeError(f"{name}.mean", "detections carry position only")
    cov = floor_position_variance(o.cov)
    tri = cov[_TRIL[n]]
    if not np.all(np.isfinite(tri)):
        raise EncodeRangeError(f"{name}.cov", "non-finite covariance")
    f32_max = float(np.finfo(np.float32).max)
    if np.any(np.abs(tri) > f32_max):
        raise EncodeRangeError(f"{name}.cov", "covariance entry exceeds float32 range")
    body = _OBJECT_HEAD.pack(
        1 if n == 4 else 0,
        _check_int(int(o.object_id), "H", f"{name}.object_id"),
        _check_int(int(o.abstraction), "B", f"{name}.abstraction"),
        _quant(o.mean[0], POS_UNIT, "i", f"{name}.x"),
        _quant(o.mean[1], POS_UNIT, "i", f"{name}.y"),
    )
    if n == 4:
        body += _VELOCITY.pack(
            _quant(o.mean[2], SPEED_UNIT, "h", f"{name}.vx"),
            _quant(o.mean[3], SPEED_UNIT, "h", f"{name}.vy"),
        )
    body += tri.astype("<f4").tobytes()
    body += struct.pack("<B", _check_int(int(o.object_type), "B", f"{name}.object_type"))
    return body


def _container(tag: int, body: bytes, name: str) -> bytes:
    if len(body) > MAX_PAYLOAD:
        raise EncodeRangeError(name, f"container body of {len(body)} bytes is too long")
    return _CONTAINER.pack(tag, len(body)) + body


def encode(cpm: Cpm) -> bytes:
    """Serialise ``cpm``; raises :class:`EncodeRangeError` naming the bad field."""
    if len(cpm.perceived_objects) > MAX_OBJECTS:
        raise EncodeRangeError("perceived_objects", f"at most {MAX_OBJECTS} objects")
    if len(cpm.sensors) > MAX_SENSORS:
        raise EncodeRangeError("sensors", f"at most {MAX_SENSORS} sensors")
    parts = [_container(TAG_MANAGEMENT, _encode_management(cpm.management), "management")]
    if cpm.station_data is not None:
        parts.append(_container(TAG_STATION_DATA, _encode_station_data(cpm.station_data), "station_data"))
    for k, s in enumerate(cpm.sensors):
        parts.append(_container(TAG_SENSOR_INFO, _encode_sensor(s, k), f"sensors[{k}]"))
    for k, o in enumerate(cpm.perceived_objects):
        parts.append(_container(TAG_PERCEIVED_OBJECT, _encode_object(o, k), f"perceived_objects[{k}]"))
    for k, blob in enumerate(cpm.free_space):
        parts.append(_container(TAG_FREE_SPACE, bytes(blob), f"free_space[{k}]"))
    count = _check_int(len(parts), "B", "container_count")
    header = _HEADER.pack(
        MAGIC,
        _check_int(int(cpm.protocol_version), "B", "protocol_version"),
        _check_int(int(cpm.station_id), "I", "station_id"),
        _check_int(int(cpm.generation_time), "Q", "generation_time"),
        count,
    )
    payload = header + b"".join(parts)
    if len(payload) > MAX_PAYLOAD:
        raise EncodeRangeError("payload", f"{len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return payload


# -- decoding ---------------------------------------------------------------


def _unpack_exact(fmt: struct.Struct, body: bytes, name: str):
    if len(body) != fmt.size:
        raise MalformedPayloadError(f"{name}: expected {fmt.size} bytes, got {len(body)}")
    return fmt.unpack(body)


def _enum(enum_type, value: int, name: str):
    try:
        return enum_type(value)
    except ValueError:
        raise MalformedPayloadError(f"{name}: unknown value {value}") from None


def _decode_management(body: bytes) -> ManagementContainer:
    st, x, y, heading, sx, sy, sh = _unpack_exact(_MANAGEMENT, body, "management")
    sx_m, sy_m, sh_r = sx * STD_POS_UNIT, sy * STD_POS_UNIT, sh * STD_ANGLE_UNIT
    cov = np.diag([sx_m * sx_m, sy_m * sy_m, sh_r * sh_r])
    theta = heading * ANGLE_UNIT
    if not -math.pi - ANGLE_UNIT <= theta <= math.pi + ANGLE_UNIT:
        raise MalformedPayloadError(f"management: heading {theta} out of range")
    pose = Pose2D(x * POS_UNIT, y * POS_UNIT, theta, cov)
    return ManagementContainer(_enum(StationType, st, "management.station_type"), pose)


def _decode_station_data(body: bytes) -> StationDataContainer:
    heading, speed, length, width = _unpack_exact(_STATION_DATA, body, "station_data")
    if length == 0 or width == 0:
        raise MalformedPayloadError("station_data: zero dimension")
    return StationDataContainer(
        normalize_angle(heading * ANGLE_UNIT), speed * SPEED_UNIT, length * POS_UNIT, width * POS_UNIT
    )


def _decode_sensor(body: bytes) -> SensorInfoContainer:
    if len(body) < _SENSOR.size:
        raise MalformedPayloadError("sensor_info: body too short")
    sid, stype, kind, cx, cy, radius = _SENSOR.unpack_from(body)
    rest = body[_SENSOR.size :]
    if radius == 0:
        raise MalformedPayloadError("sensor_info: zero radius")
    if kind == 0:
        if rest:
            raise MalformedPayloadError("sensor_info: unexpected bytes after circle")
        area = DetectionArea(cx * POS_UNIT, cy * POS_UNIT, radius * POS_UNIT)
    elif kind == 1:
        start, end = _unpack_exact(_SECTOR, rest, "sensor_info.sector")
        area = DetectionArea(
            cx * POS_UNIT,
            cy * POS_UNIT,
            radius * POS_UNIT,
            normalize_angle(start * ANGLE_UNIT),
            normalize_angle(end * ANGLE_UNIT),
        )
    else:
        raise MalformedPayloadError(f"sensor_info: unknown area kind {kind}")
    return SensorInfoContainer(sid, _enum(SensorType, stype, "sensor_info.sensor_type"), area)


_TRIL = {n: np.tril_indices(n) for n in (2, 4)}


def _decode_object(body: bytes) -> PerceivedObjectContainer:
    if len(body) < _OBJECT_HEAD.size:
        raise MalformedPayloadError("perceived_object: body too short")
    presence, oid, abstraction, x, y = _OBJECT_HEAD.unpack_from(body)
    has_velocity = bool(presence & 1)
    n = 4 if has_velocity else 2
    n_tri = n * (n + 1) // 2
    expected = _OBJECT_HEAD.size + (_VELOCITY.size if has_velocity else 0) + 4 * n_tri + 1
    if len(body) != expected:
        raise MalformedPayloadError(
            f"perceived_object: expected {expected} bytes, got {len(body)}"
        )
    abstraction = _enum(Abstraction, abstraction, "perceived_object.abstraction")
    if abstraction == Abstraction.DETECTION and has_velocity:
        raise MalformedPayloadError("perceived_object: detection with velocity")
    mean = [x * POS_UNIT, y * POS_UNIT]
    offset = _OBJECT_HEAD.size
    if has_velocity:
        vx, vy = _VELOCITY.unpack_from(body, offset)
        mean += [vx * SPEED_UNIT, vy * SPEED_UNIT]
        offset += _VELOCITY.size
    with np.errstate(invalid="ignore"):
        # Signalling NaN bit patterns warn on the cast; the check below rejects them.
        tri = np.frombuffer(body, dtype="<f4", count=n_tri, offset=offset).astype(float)
    offset += 4 * n_tri
    rows, cols = _TRIL[n]
    cov = np.empty((n, n))
    cov[rows, cols] = tri
    cov[cols, rows] = tri
    _check_decoded_covariance(cov)
    object_type = _enum(ObjectType, body[offset], "perceived_object.object_type")
    return PerceivedObjectContainer(oid, abstraction, np.array(mean), cov, object_type)


def _check_decoded_covariance(cov: np.ndarray) -> None:
    if not np.all(np.isfinite(cov)):
        raise MalformedCovarianceError("covariance has non-finite entries")
    diag = np.diag(cov)
    if np.any(diag < 0.0):
        raise MalformedCovarianceError("covariance has negative variances")
    trace = float(diag.sum())
    if trace <= 0.0:
        raise MalformedCovarianceError("covariance is zero")
    with np.errstate(all="ignore"):
        lowest = float(np.linalg.eigvalsh(cov)[0])
    if not lowest >= -1e-6 * trace:
        raise MalformedCovarianceError(f"covariance is not positive semi-definite ({lowest:.3e})")


def decode(payload: bytes) -> Cpm:
    """Parse a payload; every failure is a :class:`MalformedPayloadError` subclass."""
    data = bytes(payload)
    if len(data) < _HEADER.size:
        if data[: len(MAGIC)] != MAGIC[: len(data)]:
            raise UnsupportedVersionError("bad magic")
        raise MalformedTruncatedError(f"header needs {_HEADER.size} bytes, got {len(data)}")
    magic, version, station_id, gen_time, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise UnsupportedVersionError(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersionError(f"unsupported protocol version {version}")

    management = None
    station_data = None
    sensors: list[SensorInfoContainer] = []
    objects: list[PerceivedObjectContainer] = []
    free_space: list[bytes] = []
    offset = _HEADER.size
    for k in range(count):
        if offset + _CONTAINER.size > len(data):
            raise MalformedTruncatedError(f"container {k}: header truncated")
        tag, length = _CONTAINER.unpack_from(data, offset)
        offset += _CONTAINER.size
        if offset + length > len(data):
            raise MalformedTruncatedError(f"container {k}: body truncated")
        body = data[offset : offset + length]
        offset += length
        if tag == TAG_MANAGEMENT:
            if management is not None:
                raise MalformedPayloadError("duplicate management container")
            management = _decode_management(body)
        elif tag == TAG_STATION_DATA:
            if station_data is not None:
                raise MalformedPayloadError("duplicate station data container")
            station_data = _decode_station_data(body)
        elif tag == TAG_SENSOR_INFO:
            sensors.append(_decode_sensor(body))
        elif tag == TAG_PERCEIVED_OBJECT:
            objects.append(_decode_object(body))
        elif tag == TAG_FREE_SPACE:
            free_space.append(body)
        # Unknown tags are skipped through their length prefix.
    if offset != len(data):
        raise MalformedPayloadError(f"{len(data) - offset} trailing bytes after last container")
    if management is None:
        raise MalformedPayloadError("missing management container")
    if len(objects) > MAX_OBJECTS:
        raise MalformedPayloadError(f"more than {MAX_OBJECTS} perceived objects")
    if len(sensors) > MAX_SENSORS:
        raise MalformedPayloadError(f"more than {MAX_SENSORS} sensors")
    return Cpm(
        station_id,
        gen_time,
        management,
        station_data,
        sensors,
        objects,
        free_space,
        version,
    )


# -- building messages from tracker state -----------------------------------


def tracks_to_cpm(
    tracks: Sequence,
    pose: Pose2D,
    config,
    *,
    station_id: int,
    generation_time: int,
    station_type: StationType = StationType.VEHICLE,
    sensors: Sequence[SensorInfoContainer] = (),
    station_data: StationDataContainer | None = None,
) -> Cpm:
    """Wrap confirmed tracks (weight >= ``config.confirm_weight``) in a CPM.

    ``object_id`` is the local id truncated to 16 bits. When more than 128
    tracks qualify the heaviest are kept and a
    :class:`CpmTruncationWarning` is issued.
    """
    confirmed = [t for t in tracks if t.weight >= config.confirm_weight]
    confirmed.sort(key=lambda t: (-t.weight, t.local_id))
    if len(confirmed) > MAX_OBJECTS:
        warnings.warn(
            f"{len(confirmed)} confirmed tracks, keeping the {MAX_OBJECTS} heaviest",
            CpmTruncationWarning,
            stacklevel=2,
        )
        confirmed = confirmed[:MAX_OBJECTS]
    objects = [
        PerceivedObjectContainer(t.local_id & 0xFFFF, Abstraction.TRACK, t.mean.copy(), t.cov.copy())
        for t in confirmed
    ]
    return Cpm(
        station_id,
        generation_time,
        ManagementContainer(station_type, pose),
        station_data,
        list(sensors),
        objects,
    )


def detections_to_cpm(
    detections: Sequence,
    pose: Pose2D,
    *,
    station_id: int,
    generation_time: int,
    station_type: StationType = StationType.ROADSIDE_UNIT,
    sensors: Sequence[SensorInfoContainer] = (),
    station_data: StationDataContainer | None = None,
) -> Cpm:
    """Wrap raw position detections in a CPM with ``abstraction = detection``."""
    if len(detections) > MAX_OBJECTS:
        warnings.warn(
            f"{len(detections)} detections, keeping the first {MAX_OBJECTS}",
            CpmTruncationWarning,
            stacklevel=2,
        )
        detections = detections[:MAX_OBJECTS]
    objects = [
        PerceivedObjectContainer(k, Abstraction.DETECTION, d.mean.copy(), d.cov.copy())
        for k, d in enumerate(detections)
    ]
    return Cpm(
        station_id,
        generation_time,
        ManagementContainer(station_type, pose),
        station_data,
        list(sensors),
        objects,
    )


def describe(cpm: Cpm) -> str:
    """Human-readable container tree."""
    pose = cpm.management.reference_pose
    lines = [
        f"CPM v{cpm.protocol_version} station_id={cpm.station_id} generation_time={cpm.generation_time}",
        f"  management: station_type={cpm.management.station_type.name.lower()} "
        f"x={pose.x:.2f} y={pose.y:.2f} heading={pose.theta:.4f} "
        f"std=({math.sqrt(pose.cov[0, 0]):.3f}, {math.sqrt(pose.cov[1, 1]):.3f}, "
        f"{math.sqrt(pose.cov[2, 2]):.4f})",
    ]
    if cpm.station_data is not None:
        s = cpm.station_data
        lines.append(
            f"  station_data: heading={s.heading:.4f} speed={s.speed:.2f} "
            f"length={s.length:.2f} width={s.width:.2f}"
        )
    for s in cpm.sensors:
        a = s.detection_area
        shape = (
            f"sector start={a.start:.4f} end={a.end:.4f}" if a.is_sector else "circle"
        )
        lines.append(
            f"  sensor {s.sensor_id}: type={s.sensor_type.name.lower()} {shape} "
            f"centre=({a.cx:.2f}, {a.cy:.2f}) radius={a.radius:.2f}"
        )
    for o in cpm.perceived_objects:
        mean = ", ".join(f"{v:.2f}" for v in o.mean)
        lines.append(
            f"  object {o.object_id}: {o.abstraction.name.lower()} "
            f"{o.object_type.name.lower()} mean=({mean}) "
            f"pos_std=({math.sqrt(o.cov[0, 0]):.3f}, {math.sqrt(o.cov[1, 1]):.3f})"
        )
    for k, blob in enumerate(cpm.free_space):
        lines.append(f"  free_space {k}: {len(blob)} bytes")
    return "\n".join(lines)


def random_cpm(rng: np.random.Generator, max_objects: int = 8) -> Cpm:
    """A valid message with random contents, for round-trip and fuzz tests."""

    def spd(n: int) -> np.ndarray:
        a = rng.normal(size=(n, n)) * rng.uniform(0.01, 1.0)
        return a @ a.T + np.eye(n) * rng.uniform(1e-4, 0.1)

    pose = Pose2D(
        float(rng.uniform(-1e4, 1e4)),
        float(rng.uniform(-1e4, 1e4)),
        float(rng.uniform(-math.pi, math.pi)),
        np.diag(rng.uniform(0.0, 1.0, size=3) ** 2),
    )
    sensors = []
    for k in range(int(rng.integers(0, 9))):
        if rng.random() < 0.5:
            area = DetectionArea(*rng.uniform(-50, 50, size=2), float(rng.uniform(0.1, 200)))
        else:
            start, end = rng.uniform(-math.pi, math.pi, size=2)
            area = DetectionArea(
                *rng.uniform(-50, 50, size=2), float(rng.uniform(0.1, 200)), float(start), float(end)
            )
        sensors.append(SensorInfoContainer(k, SensorType(int(rng.integers(0, 3))), area))
    objects = []
    for _ in range(int(rng.integers(0, max_objects + 1))):
        track = rng.random() < 0.5
        n = 4 if track else 2
        mean = np.concatenate([rng.uniform(-300, 300, size=2), rng.uniform(-50, 50, size=n - 2)])
        objects.append(
            PerceivedObjectContainer(
                int(rng.integers(0, 2**16)),
                Abstraction.TRACK if track else Abstraction.DETECTION,
                mean,
                spd(n),
                ObjectType(int(rng.integers(0, 3))),
            )
        )
    station_data = None
    if rng.random() < 0.5:
        station_data = StationDataContainer(
            float(rng.uniform(-math.pi, math.pi)),
            float(rng.uniform(0, 60)),
            float(rng.uniform(0.5, 20)),
            float(rng.uniform(0.5, 3)),
        )
    free_space = [rng.bytes(int(rng.integers(0, 16))) for _ in range(int(rng.integers(0, 2)))]
    return Cpm(
        int(rng.integers(0, 2**32)),
        int(rng.integers(0, 2**40)),
        ManagementContainer(StationType(int(rng.integers(0, 2))), pose),
        station_data,
        sensors,
        objects,
        free_space,
    )
