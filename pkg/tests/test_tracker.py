import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpfusion.errors import InvalidArgumentError
from cpfusion.tracker import (
    Detection,
    LocalTrack,
    Tracker,
    TrackerConfig,
    predict,
    process_noise,
    prune_merge_cap,
    update_with_detections,
)
from helpers import local_track, random_spd
from oracles import kalman_axis_covariances


class TestConfig:
    @pytest.mark.parametrize(
        "changes",
        [
            {"birth_weight": 0.0},
            {"max_tracks": 0},
            {"process_noise_velocity_std": -1.0},
            {"gate_mahalanobis_sq": 0.0},
            {"likelihood_covariance": "loose"},
        ],
    )
    def test_rejects_invalid(self, changes):
        with pytest.raises(InvalidArgumentError):
            TrackerConfig(**changes)

    def test_probability_callable_checked(self):
        cfg = TrackerConfig(detection_probability=lambda m: 2.0)
        with pytest.raises(InvalidArgumentError):
            cfg.p_detect(np.zeros(4))


class TestLocalTrack:
    def test_rejects_negative_weight(self):
        with pytest.raises(InvalidArgumentError):
            LocalTrack(np.zeros(4), np.eye(4), -0.1, 1)

    def test_copy_is_deep(self, rng):
        t = local_track(rng, 1, {2: 5})
        c = t.copy()
        c.mean[0] += 1.0
        c.alias_ids[3] = 1
        assert t.mean[0] != c.mean[0]
        assert 3 not in t.alias_ids


class TestPredict:
    def test_velocity_only_noise(self):
        q = process_noise(0.1, TrackerConfig())
        npt.assert_allclose(np.diag(q), [0.01, 0.01, 0.0, 0.0])

    def test_moves_mean_and_keeps_identity(self, rng):
        t = local_track(rng, 7, {2: 3}, weight=0.4)
        out = predict([t], 0.5, TrackerConfig())[0]
        npt.assert_allclose(out.mean[:2], t.mean[:2] + 0.5 * t.mean[2:])
        assert (out.local_id, out.alias_ids, out.weight) == (7, {2: 3}, 0.4)

    def test_negative_dt(self, rng):
        with pytest.raises(InvalidArgumentError):
            predict([local_track(rng, 1)], -0.1, TrackerConfig())

    def test_zero_dt_is_identity(self, rng):
        t = local_track(rng, 1)
        out = predict([t], 0.0, TrackerConfig())[0]
        npt.assert_array_equal(out.cov, t.cov)


class TestUpdate:
    def test_single_target_follows_kalman_filter(self, rng):
        # Seed one certain track so births at later detections stay below the
        # prune threshold; the surviving component is then a plain Kalman filter.
        cfg = TrackerConfig(detection_probability=1.0)
        tracker = Tracker(cfg)
        r = 0.04
        truth = np.array([10.0, 5.0])
        z0 = truth + rng.normal(size=2) * 0.2
        tracker.tracks = [
            LocalTrack(np.r_[z0, 0.0, 0.0], np.diag([r, r, 4.0, 4.0]), 1.0, 1)
        ]
        covs = [tracker.tracks[0].cov]
        for _ in range(29):
            tracker.predict(0.1)
            tracker.update([Detection(truth + rng.normal(size=2) * 0.2, r * np.eye(2))])
            assert len(tracker.tracks) == 1
            covs.append(tracker.tracks[0].cov)
        ref = kalman_axis_covariances(0.1, 30, cfg.process_noise_velocity_std, r, cfg.birth_velocity_std**2)
        for got, want in zip(covs, ref):
            for axis in (0, 1):
                idx = np.ix_([axis, axis + 2], [axis, axis + 2])
                npt.assert_allclose(got[idx], want, rtol=1e-9, atol=1e-12)

    def test_birth_weight_far_from_tracks(self):
        cfg = TrackerConfig()
        out = update_with_detections([], [Detection([0.0, 0.0], np.eye(2) * 0.04)], cfg)
        assert len(out) == 1
        assert out[0].weight == pytest.approx(cfg.birth_weight)

    def test_missed_detection_decays(self, rng):
        cfg = TrackerConfig(detection_probability=0.9)
        t = local_track(rng, 1, weight=1.0)
        out = update_with_detections([t], [], cfg)
        assert out[0].weight == pytest.approx(0.1)

    def test_lagged_detection_uses_older_position(self):
        cfg = TrackerConfig(detection_probability=1.0)
        track = LocalTrack([1.0, 0.0, 1.0, 0.0], np.diag([1.0, 1.0, 0.01, 0.01]), 1.0, 1)
        z = Detection([0.5, 0.0], np.eye(2) * 0.01, age=0.5)
        out = update_with_detections([track], [z], cfg)
        best = max(out, key=lambda t: t.weight)
        # The detection agrees with the track position half a second ago.
        assert best.mean[0] == pytest.approx(1.0, abs=0.05)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_cardinality_tracks_target_count(self, seed, targets):
        rng = np.random.default_rng(seed)
        cfg = TrackerConfig(detection_probability=0.95)
        tracker = Tracker(cfg)
        truth = np.column_stack([np.arange(targets) * 10.0, np.zeros(targets)])
        for step in range(15):
            if step:
                tracker.predict(0.1)
            dets = [Detection(p + rng.normal(size=2) * 0.2, np.eye(2) * 0.04) for p in truth]
            tracker.update(dets)
        # Each target's missed-detection copy is merged back into its track, so
        # the per-target mass settles at the fixed point w = 1 + (1 - p_D) w.
        assert tracker.total_weight == pytest.approx(targets / 0.95, abs=0.05 * targets)
        assert len(tracker.confirmed()) == targets


class TestPruneMerge:
    def test_prunes_light_tracks(self, rng):
        cfg = TrackerConfig()
        out = prune_merge_cap([local_track(rng, 1, weight=1e-6)], cfg)
        assert out == []

    def test_merges_close_tracks_by_moments(self, rng):
        cfg = TrackerConfig()
        cov = np.eye(4)
        a = LocalTrack([0.0, 0.0, 0.0, 0.0], cov, 0.75, 1, {2: 4})
        b = LocalTrack([1.0, 0.0, 0.0, 0.0], cov, 0.25, 2, {2: 9, 3: 1})
        (m,) = prune_merge_cap([a, b], cfg)
        assert m.local_id == 1
        assert m.weight == pytest.approx(1.0)
        npt.assert_allclose(m.mean, [0.25, 0, 0, 0])
        assert m.cov[0, 0] == pytest.approx(1.0 + 0.75 * 0.25**2 + 0.25 * 0.75**2)
        assert m.alias_ids == {2: 4, 3: 1}

    def test_cap_keeps_heaviest(self, rng):
        cfg = TrackerConfig(max_tracks=2)
        tracks = [LocalTrack([10.0 * k, 0, 0, 0], np.eye(4) * 0.01, 0.1 * (k + 1), k + 1) for k in range(4)]
        out = prune_merge_cap(tracks, cfg)
        assert [t.local_id for t in out] == [4, 3]

    def test_duplicate_ids_relabelled(self):
        cfg = TrackerConfig()
        a = LocalTrack([0.0, 0, 0, 0], np.eye(4) * 0.01, 0.9, 5, {2: 1})
        b = LocalTrack([50.0, 0, 0, 0], np.eye(4) * 0.01, 0.3, 5, {2: 1, 3: 7})
        out = prune_merge_cap([a, b], cfg, new_id=iter([100]).__next__)
        assert [t.local_id for t in out] == [5, 100]
        assert out[1].alias_ids == {3: 7}

    @given(st.integers(0, 2**32 - 1))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        cfg = TrackerConfig(max_tracks=5)
        tracks = [
            LocalTrack(rng.normal(size=4) * 3, random_spd(rng, 4, 0.5), rng.uniform(0, 1), int(rng.integers(1, 6)))
            for _ in range(12)
        ]
        out = prune_merge_cap(tracks, cfg, new_id=iter(range(1000, 2000)).__next__)
        assert len(out) <= 5
        assert len({t.local_id for t in out}) == len(out)
        assert all(t.weight >= cfg.prune_threshold for t in out)
        total_in = sum(t.weight for t in tracks if t.weight >= cfg.prune_threshold)
        assert sum(t.weight for t in out) <= total_in + 1e-9
