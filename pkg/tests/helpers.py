"""Small builders shared by the test modules."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from cpfusion import cpm
from cpfusion.geometry import Pose2D
from cpfusion.t2t import RemoteTrack
from cpfusion.tracker import LocalTrack


def random_spd(rng, n, scale=1.0, floor=1e-2):
    a = rng.normal(size=(n, n)) * scale
    return a @ a.T + floor * np.eye(n)


def random_pose(rng, spread=50.0, heading_std=None, position_std=None):
    heading_std = rng.uniform(0.0, np.radians(2.0)) if heading_std is None else heading_std
    position_std = rng.uniform(0.0, 0.5) if position_std is None else position_std
    cov = np.diag([position_std**2, position_std**2, heading_std**2])
    return Pose2D(*rng.uniform(-spread, spread, size=2), rng.uniform(-np.pi, np.pi), cov)


def local_track(rng, local_id, aliases=None, weight=None, spread=3.0):
    mean = np.concatenate([rng.uniform(-spread, spread, size=2), rng.normal(size=2)])
    return LocalTrack(
        mean,
        random_spd(rng, 4, 0.3, 0.05),
        float(rng.uniform(0.2, 1.0)) if weight is None else weight,
        local_id,
        dict(aliases or {}),
    )


def remote_track(rng, station_id, remote_id, dim=4, spread=3.0):
    mean = rng.uniform(-spread, spread, size=2)
    if dim == 4:
        mean = np.concatenate([mean, rng.normal(size=2)])
    return RemoteTrack(mean, random_spd(rng, dim, 0.3, 0.05), station_id, remote_id)


# -- track-to-track fusion instances ------------------------------------------

STATION = 7


def random_instance(rng, max_locals=4, max_remotes=3):
    """Locals and remotes of one station with a mix of alias situations."""
    n_remotes = int(rng.integers(0, max_remotes + 1))
    remote_ids = rng.choice(50, size=n_remotes, replace=False) + 1
    remotes = [
        remote_track(rng, STATION, int(rid), dim=int(rng.choice([2, 4]))) for rid in remote_ids
    ]
    locals_ = []
    for i in range(int(rng.integers(0, max_locals + 1))):
        aliases = {}
        kind = rng.integers(0, 4)
        if kind == 1 and n_remotes:
            aliases[STATION] = int(rng.choice(remote_ids))
        elif kind == 2:
            aliases[STATION] = 99
        if rng.random() < 0.5:
            aliases[3] = int(rng.integers(1, 10))
        locals_.append(local_track(rng, i + 1, aliases))
    return locals_, remotes


def position_model(mean):
    return 0.9 if mean[0] < 1.0 else 0.0


def tracks_identical(got, want, atol=1e-12):
    """``None`` when both lists agree in ids, aliases and moments, else the first difference."""
    if [t.local_id for t in got] != [t.local_id for t in want]:
        return f"ids {[t.local_id for t in got]} != {[t.local_id for t in want]}"
    for a, b in zip(got, want):
        if a.alias_ids != b.alias_ids:
            return f"aliases of {a.local_id}: {a.alias_ids} != {b.alias_ids}"
        for name in ("mean", "cov"):
            gap = float(np.max(np.abs(getattr(a, name) - getattr(b, name))))
            if gap > atol:
                return f"{name} of {a.local_id} differs by {gap:.1e}"
        if abs(a.weight - b.weight) > atol + 1e-9 * abs(b.weight):
            return f"weight of {a.local_id}: {a.weight} != {b.weight}"
    return None


def assert_same_tracks(got, want, atol=1e-12):
    assert [t.local_id for t in got] == [t.local_id for t in want]
    assert [t.alias_ids for t in got] == [t.alias_ids for t in want]
    for a, b in zip(got, want):
        npt.assert_allclose(a.mean, b.mean, rtol=0, atol=atol)
        npt.assert_allclose(a.cov, b.cov, rtol=0, atol=atol)
        assert a.weight == pytest.approx(b.weight, rel=1e-9, abs=atol)


# -- CPM round trips -----------------------------------------------------------


def angle_close(a, b, tol):
    return abs(math.remainder(a - b, 2 * math.pi)) <= tol


def assert_round_trip(original: cpm.Cpm, decoded: cpm.Cpm):
    """Equality up to the documented quantisation steps."""
    assert decoded.station_id == original.station_id
    assert decoded.generation_time == original.generation_time
    assert decoded.protocol_version == original.protocol_version
    a, b = original.management, decoded.management
    assert a.station_type == b.station_type
    pa, pb = a.reference_pose, b.reference_pose
    assert abs(pa.x - pb.x) <= 0.005 + 1e-9
    assert abs(pa.y - pb.y) <= 0.005 + 1e-9
    assert angle_close(pa.theta, pb.theta, 5e-5 + 1e-9)
    for i, (unit, floor) in enumerate([(1e-3, 0.005), (1e-3, 0.005), (1e-4, 0.0)]):
        want = max(math.sqrt(pa.cov[i, i]), floor)
        assert abs(math.sqrt(pb.cov[i, i]) - want) <= unit / 2 + 1e-9
    if original.station_data is None:
        assert decoded.station_data is None
    else:
        sa, sb = original.station_data, decoded.station_data
        assert angle_close(sa.heading, sb.heading, 5e-5 + 1e-9)
        for name in ("speed", "length", "width"):
            assert abs(getattr(sa, name) - getattr(sb, name)) <= 0.005 + 1e-9
    assert len(decoded.sensors) == len(original.sensors)
    for sa, sb in zip(original.sensors, decoded.sensors):
        assert (sa.sensor_id, sa.sensor_type) == (sb.sensor_id, sb.sensor_type)
        da, db = sa.detection_area, sb.detection_area
        for name in ("cx", "cy", "radius"):
            assert abs(getattr(da, name) - getattr(db, name)) <= 0.005 + 1e-9
        assert da.is_sector == db.is_sector
        if da.is_sector:
            assert angle_close(da.start, db.start, 5e-5 + 1e-9)
            assert angle_close(da.end, db.end, 5e-5 + 1e-9)
    assert len(decoded.perceived_objects) == len(original.perceived_objects)
    for oa, ob in zip(original.perceived_objects, decoded.perceived_objects):
        assert (oa.object_id, oa.abstraction, oa.object_type) == (ob.object_id, ob.abstraction, ob.object_type)
        assert ob.mean.size == oa.mean.size
        npt.assert_allclose(ob.mean, oa.mean, rtol=0, atol=0.005 + 1e-9)
        want = cpm.floor_position_variance(oa.cov)
        npt.assert_allclose(ob.cov, want.astype(np.float32).astype(float), rtol=0, atol=0)
    assert decoded.free_space == [bytes(b) for b in original.free_space]
