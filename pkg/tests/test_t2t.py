import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpfusion.errors import InvalidArgumentError
from cpfusion.geometry import DetectionArea, Pose2D
from cpfusion.t2t import (
    RemoteDetectionModel,
    RemoteTrack,
    ci_track_update,
    fuse_all_stations,
    fuse_station,
    fuse_station_subsets,
    gaussian_density,
    refresh_aliases,
)
from cpfusion.tracker import IdAllocator, LocalTrack, TrackerConfig, prune_merge_cap
from helpers import STATION, assert_same_tracks, local_track, position_model, random_instance, remote_track
from oracles import algorithm1

class TestRemoteTrack:
    def test_rejects_bad_layout(self):
        with pytest.raises(InvalidArgumentError):
            RemoteTrack(np.zeros(3), np.eye(3), 1, 1)

    def test_observation_matrix(self):
        npt.assert_array_equal(RemoteTrack(np.zeros(2), np.eye(2), 1, 1).observation_matrix, np.eye(2, 4))


class TestRemoteDetectionModel:
    def test_inside_and_outside(self):
        model = RemoteDetectionModel([DetectionArea(0.0, 0.0, 5.0)], Pose2D(10.0, 0.0, 0.0), 0.8)
        assert model(np.array([12.0, 0.0, 0, 0])) == 0.8
        assert model(np.array([0.0, 0.0, 0, 0])) == 0.0

    def test_invalid_probability(self):
        with pytest.raises(InvalidArgumentError):
            RemoteDetectionModel(probability=1.5)


class TestCiTrackUpdate:
    def test_gaussian_density(self):
        assert gaussian_density(np.zeros(2), np.eye(2)) == pytest.approx(1 / (2 * np.pi))

    def test_uninformative_remote_changes_nothing(self, rng):
        local = local_track(rng, 1)
        remote = RemoteTrack(local.mean[:2], 1e6 * np.eye(2), 2, 1)
        mean, cov, _, omega = ci_track_update(local, remote, RemoteDetectionModel.constant(0.9))
        assert omega == 1.0
        npt.assert_allclose(mean, local.mean, atol=1e-9)
        npt.assert_allclose(cov, local.cov, atol=1e-9)

    def test_position_remote_moves_velocity_through_cross_covariance(self):
        cov = np.eye(4)
        cov[0, 2] = cov[2, 0] = 0.5
        local = LocalTrack(np.zeros(4), cov, 1.0, 1)
        remote = RemoteTrack(np.array([1.0, 0.0]), 0.5 * np.eye(2), 2, 1)
        mean, _, _, _ = ci_track_update(local, remote, RemoteDetectionModel.constant(1.0))
        assert mean[2] != 0.0
        assert mean[3] == pytest.approx(0.0, abs=1e-15)

    def test_weight_formula(self, rng):
        local = local_track(rng, 1, weight=0.5)
        remote = remote_track(rng, 2, 1, dim=2)
        _, _, weight, _ = ci_track_update(local, remote, RemoteDetectionModel.constant(0.8))
        y = remote.mean - local.mean[:2]
        q = gaussian_density(y, remote.cov + local.cov[:2, :2])
        assert weight == pytest.approx(0.8 * q * 0.5, rel=1e-12)

    def test_unknown_likelihood(self, rng):
        with pytest.raises(InvalidArgumentError):
            ci_track_update(
                local_track(rng, 1), remote_track(rng, 2, 1), RemoteDetectionModel.constant(0.9), likelihood="x"
            )


class TestFuseStation:
    def test_empty_remotes_only_decay(self, rng):
        cfg = TrackerConfig(max_tracks=10)
        locals_ = [
            LocalTrack([0.0, 0, 0, 0], np.eye(4) * 0.1, 1.0, 1),
            LocalTrack([5.0, 0, 0, 0], np.eye(4) * 0.1, 1.0, 2),
        ]
        out, report = fuse_station(locals_, [], position_model, cfg)
        weights = {t.local_id: t.weight for t in out}
        assert weights == pytest.approx({1: 0.1, 2: 1.0})
        assert report.undetected_count == 2

    def test_previously_fused_remote_matches(self, rng):
        cfg = TrackerConfig()
        local = local_track(rng, 1, {STATION: 4}, weight=1.0)
        remote = remote_track(rng, STATION, 4)
        out, report = fuse_station([local], [remote], RemoteDetectionModel.constant(0.9), cfg)
        assert report.matched_count == 1
        assert report.new_track_count == 0
        assert [t.alias_ids for t in out] == [{STATION: 4}]

    def test_new_far_remote_births(self):
        cfg = TrackerConfig()
        local = LocalTrack([0.0, 0, 0, 0], np.eye(4) * 0.1, 1.0, 1)
        remote = RemoteTrack(np.array([100.0, 0.0]), np.eye(2) * 0.1, STATION, 3)
        subsets = fuse_station_subsets([local], [remote], RemoteDetectionModel.constant(0.9), cfg, IdAllocator(10))
        (birth,) = subsets.unmatched
        assert birth.local_id == 10
        assert birth.alias_ids == {STATION: 3}
        assert subsets.undetected[0].weight == pytest.approx(0.1)
        # A lone birth is normalised within its hypothesis group.
        assert birth.weight == pytest.approx(1.0)

    def test_mixed_stations_rejected(self, rng):
        with pytest.raises(InvalidArgumentError):
            fuse_station([], [remote_track(rng, 1, 1), remote_track(rng, 2, 1)], position_model, TrackerConfig())

    def test_refusion_is_idempotent(self, rng):
        cfg = TrackerConfig()
        model = RemoteDetectionModel.constant(0.9)
        local = local_track(rng, 1, weight=1.0)
        remote = RemoteTrack(local.mean[:2] + 0.1, np.eye(2) * 0.2, STATION, 4)
        once, _ = fuse_station([local], [remote], model, cfg)
        twice, report = fuse_station(once, [remote], model, cfg)
        assert report.omegas
        assert all(w == pytest.approx(1.0, abs=1e-6) for w in report.omegas)
        fused = max(once, key=lambda t: t.weight)
        again = next(t for t in twice if t.local_id == fused.local_id)
        npt.assert_allclose(again.mean, fused.mean, atol=1e-9)
        npt.assert_allclose(again.cov, fused.cov, atol=1e-9)

    @pytest.mark.parametrize("likelihood", ["independent", "inflated"])
    def test_matches_algorithm_transcription(self, likelihood):
        rng = np.random.default_rng(42)
        cfg = TrackerConfig(gate_mahalanobis_sq=None, likelihood_covariance=likelihood)
        for _ in range(40):
            locals_, remotes = random_instance(rng)
            subsets = fuse_station_subsets(locals_, remotes, position_model, cfg, IdAllocator(100))
            ud, mt, um = algorithm1(locals_, remotes, position_model, cfg.birth_weight, 100, cfg, likelihood)
            assert_same_tracks(subsets.undetected, ud)
            assert_same_tracks(subsets.matched, mt)
            assert_same_tracks(subsets.unmatched, um)

    @given(st.integers(0, 2**32 - 1))
    def test_partition_and_alias_invariants(self, seed):
        rng = np.random.default_rng(seed)
        cfg = TrackerConfig(gate_mahalanobis_sq=None)
        locals_, remotes = random_instance(rng)
        subsets = fuse_station_subsets(locals_, remotes, position_model, cfg, IdAllocator(100))
        matched_ids = {t.local_id for t in subsets.matched}
        undetected_ids = {t.local_id for t in subsets.undetected}
        assert not matched_ids & undetected_ids
        # Every input local ends up in exactly one of matched or undetected.
        assert matched_ids | undetected_ids == {t.local_id for t in locals_}
        reported = {r.remote_track_id for r in remotes}
        for t in subsets.unmatched:
            assert t.alias_ids.get(STATION) in reported
        for t in subsets.union():
            assert t.weight >= 0.0
        for group_sum in _group_sums(subsets.unmatched, remotes, subsets.matched):
            assert group_sum == pytest.approx(1.0, abs=1e-9)

    @given(st.integers(0, 2**32 - 1))
    def test_full_output_is_postprocessed_union(self, seed):
        rng = np.random.default_rng(seed)
        cfg = TrackerConfig(gate_mahalanobis_sq=None)
        locals_, remotes = random_instance(rng)
        out, _ = fuse_station(locals_, remotes, position_model, cfg, IdAllocator(100))
        ud, mt, um = algorithm1(locals_, remotes, position_model, cfg.birth_weight, 100, cfg)
        births = sum(
            1
            for r in remotes
            if not any(t.alias_ids.get(STATION) == r.remote_track_id for t in locals_)
        )
        want = prune_merge_cap(ud + mt + um, cfg, IdAllocator(100 + births))
        assert_same_tracks(out, want)


def _group_sums(unmatched, remotes, matched):
    """Weight sums of each pass-2 hypothesis group, keyed by the remote id."""
    sums = {}
    matched_remote_ids = set()
    for t in matched:
        if STATION in t.alias_ids:
            matched_remote_ids.add(t.alias_ids[STATION])
    for t in unmatched:
        rid = t.alias_ids[STATION]
        sums[rid] = sums.get(rid, 0.0) + t.weight
    return [s for rid, s in sums.items() if rid not in matched_remote_ids]


class TestFuseAllStations:
    def test_empty_batches(self, rng):
        locals_ = [local_track(rng, 1)]
        out = fuse_all_stations(locals_, [], TrackerConfig())
        assert_same_tracks(out, locals_)

    def test_duplicate_station_rejected(self, rng):
        batch = (1, [remote_track(rng, 1, 1)], position_model)
        with pytest.raises(InvalidArgumentError):
            fuse_all_stations([], [batch, batch], TrackerConfig())

    def test_batch_station_mismatch(self, rng):
        with pytest.raises(InvalidArgumentError):
            fuse_all_stations([], [(1, [remote_track(rng, 2, 1)], position_model)], TrackerConfig())

    @pytest.mark.parametrize("order", [(1, 2), (2, 1)])
    def test_two_reports_tighten_position(self, order):
        cfg = TrackerConfig()
        model = RemoteDetectionModel.constant(0.9)
        local = LocalTrack([0.0, 0, 0, 0], np.diag([1.0, 1.0, 1.0, 1.0]), 1.0, 1)
        remotes = {
            1: RemoteTrack(np.array([0.1, 0.0]), np.diag([0.2, 2.0]), 1, 5),
            2: RemoteTrack(np.array([0.0, 0.1]), np.diag([2.0, 0.2]), 2, 8),
        }
        singles = []
        for sid in (1, 2):
            out = fuse_all_stations([local], [(sid, [remotes[sid]], model)], cfg)
            singles.append(np.trace(max(out, key=lambda t: t.weight).cov[:2, :2]))
        both = fuse_all_stations([local], [(s, [remotes[s]], model) for s in order], cfg)
        best = max(both, key=lambda t: t.weight)
        assert np.trace(best.cov[:2, :2]) <= min(singles) + 1e-12

    def test_refresh_drops_stale_alias(self, rng):
        t = local_track(rng, 1, {STATION: 3, 2: 1})
        (out,) = refresh_aliases([t], STATION, [4, 5])
        assert out.alias_ids == {2: 1}

    def test_reports_collected(self, rng):
        reports = []
        fuse_all_stations(
            [local_track(rng, 1)], [(STATION, [remote_track(rng, STATION, 1)], position_model)],
            TrackerConfig(), reports=reports,
        )
        assert len(reports) == 1
