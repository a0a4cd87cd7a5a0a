"""Gaussian-mixture PHD tracker with track identities and alias lists.

Each station runs one :class:`Tracker`. The intensity is a list of
:class:`LocalTrack` components over the state ``(x, y, vx, vy)``. Prediction
uses a constant-velocity model, detections are absorbed with the usual
GM-PHD update and every detection can seed a new component. Components carry
an identity (``local_id``) and an alias dictionary that records under which
track id other stations know them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

import numpy as np

from .errors import InvalidArgumentError

STATE_DIM = 4
POSITION_H = np.hstack([np.eye(2), np.zeros((2, 2))])

# Innovation covariance for the track-to-track association likelihood:
# "independent" uses Sr + H Sl H', "inflated" the CI-inflated Sr* + H Sl* H'.
LIKELIHOOD_COVARIANCES = ("independent", "inflated")

Probability = Union[float, Callable[[np.ndarray], float]]


@dataclass
class LocalTrack:
    """One mixture component: estimate, weight, identity and alias list.

    ``alias_ids`` maps a remote station id to the id that station uses for
    the same object, so a station can appear at most once.
    """

    mean: np.ndarray
    cov: np.ndarray
    weight: float
    local_id: int
    alias_ids: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(STATE_DIM)
        self.cov = np.asarray(self.cov, dtype=float).reshape(STATE_DIM, STATE_DIM)
        self.weight = float(self.weight)
        if not math.isfinite(self.weight) or self.weight < 0.0:
            raise InvalidArgumentError(f"track weight must be finite and >= 0, got {self.weight}")

    def copy(self, **changes) -> LocalTrack:
        values = dict(
            mean=self.mean.copy(),
            cov=self.cov.copy(),
            weight=self.weight,
            local_id=self.local_id,
            alias_ids=dict(self.alias_ids),
        )
        values.update(changes)
        return LocalTrack(**values)

    @property
    def alias_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.alias_ids.items())

    @property
    def position(self) -> np.ndarray:
        return self.mean[:2]


@dataclass
class Detection:
    """A position measurement in the station frame.

    ``age`` is how many seconds before the current filter time the
    measurement was taken; the update accounts for motion over that lag.
    """

    mean: np.ndarray
    cov: np.ndarray
    sensor_id: int = 0
    age: float = 0.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if self.age < 0.0:
            raise InvalidArgumentError("detection age must be >= 0")


@dataclass
class TrackerConfig:
    process_noise_velocity_std: float = 1.0
    process_noise_accel_std: float = 0.0
    detection_probability: Probability = 0.9
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

    def __post_init__(self):
        positive = (
            "clutter_density",
            "birth_density",
            "birth_weight",
            "prune_threshold",
            "merge_mahalanobis_threshold",
            "confirm_weight",
        )
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.max_tracks < 1:
            raise InvalidArgumentError("max_tracks must be >= 1")
        if self.process_noise_velocity_std < 0.0 or self.process_noise_accel_std < 0.0:
            raise InvalidArgumentError("process noise stds must be >= 0")
        if self.gate_mahalanobis_sq is not None and self.gate_mahalanobis_sq <= 0.0:
            raise InvalidArgumentError("gate_mahalanobis_sq must be positive or None")
        if self.likelihood_covariance not in LIKELIHOOD_COVARIANCES:
            raise InvalidArgumentError(
                f"likelihood_covariance must be one of {LIKELIHOOD_COVARIANCES}"
            )

    def p_detect(self, mean: np.ndarray) -> float:
        p = self.detection_probability
        value = float(p(mean)) if callable(p) else float(p)
        if not 0.0 <= value <= 1.0:
            raise InvalidArgumentError(f"detection probability {value} outside [0, 1]")
        return value


class IdAllocator:
    """Monotone id source; ids are never handed out twice."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def __call__(self) -> int:
        return next(self._counter)


def _default_allocator(tracks: Iterable[LocalTrack]) -> IdAllocator:
    return IdAllocator(max((t.local_id for t in tracks), default=0) + 1)


def transition(dt: float) -> np.ndarray:
    f = np.eye(STATE_DIM)
    f[0, 2] = f[1, 3] = dt
    return f


def process_noise(dt: float, config: TrackerConfig) -> np.ndarray:
    """Per-axis ``sv^2 [[dt^2, 0], [0, 0]] + sa^2 [[dt^3/3, dt^2/2], [dt^2/2, dt]]``.

    The first term is a velocity disturbance acting directly on position,
    the second a white-noise acceleration that lets the velocity drift. The
    acceleration term is off by default, leaving the plain velocity
    disturbance model.
    """
    sv2 = config.process_noise_velocity_std**2
    sa2 = config.process_noise_accel_std**2
    pp = sv2 * dt * dt + sa2 * dt**3 / 3.0
    pv = sa2 * dt * dt / 2.0
    vv = sa2 * dt
    q = np.zeros((STATE_DIM, STATE_DIM))
    for i in (0, 1):
        q[i, i] = pp
        q[i, i + 2] = q[i + 2, i] = pv
        q[i + 2, i + 2] = vv
    return q


def predict_state(mean: np.ndarray, cov: np.ndarray, dt: float, config: TrackerConfig):
    if dt < 0.0:
        raise InvalidArgumentError(f"dt must be >= 0, got {dt}")
    if dt == 0.0:
        return mean.copy(), cov.copy()
    f = transition(dt)
    new_cov = f @ cov @ f.T + process_noise(dt, config)
    return f @ mean, 0.5 * (new_cov + new_cov.T)


def predict(tracks: list[LocalTrack], dt: float, config: TrackerConfig) -> list[LocalTrack]:
    """Constant-velocity prediction; weights, ids and aliases are unchanged."""
    if dt < 0.0:
        raise InvalidArgumentError(f"dt must be >= 0, got {dt}")
    out = []
    for t in tracks:
        mean, cov = predict_state(t.mean, t.cov, dt, config)
        out.append(t.copy(mean=mean, cov=cov))
    return out


def _inverse_2x2(s: np.ndarray):
    a, b, c, d = s[..., 0, 0], s[..., 0, 1], s[..., 1, 0], s[..., 1, 1]
    det = a * d - b * c
    inv = np.empty_like(s)
    inv[..., 0, 0] = d / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -c / det
    inv[..., 1, 1] = a / det
    return inv, det


def _detection_model(det: Detection, config: TrackerConfig):
    """Observation matrix and noise for a (possibly lagged) detection."""
    h = POSITION_H.copy()
    r = det.cov.copy()
    if det.age > 0.0:
        h[0, 2] = h[1, 3] = -det.age
        r = r + (config.process_noise_velocity_std * det.age) ** 2 * np.eye(2)
    return h, r


def update_with_detections(
    tracks: list[LocalTrack],
    detections: list[Detection],
    config: TrackerConfig,
    new_id: Callable[[], int] | None = None,
    detection_probability: Probability | None = None,
) -> list[LocalTrack]:
    """GM-PHD measurement update followed by :func:`prune_merge_cap`.

    Missed-detection copies keep weight ``(1 - p_D) w``. For detection ``z``
    the updated copy of track ``i`` gets ``p_D w_i q_i(z) / D(z)`` with
    ``D(z) = clutter + birth_density + sum_i p_D w_i q_i(z)``. A new track is
    born at every detection with weight ``w_birth * (clutter +
    birth_density) / D(z)``, the share of ``z`` not explained by existing
    tracks; far from all tracks this is ``w_birth``.

    ``detection_probability`` overrides the configured p_D, which is how
    detections relayed by another station are weighted with that station's
    sensor model.
    """
    if new_id is None:
        new_id = _default_allocator(tracks)
    if detection_probability is None:
        p_of = config.p_detect
    elif callable(detection_probability):
        p_of = detection_probability
    else:
        p_of = lambda _mean, p=float(detection_probability): p  # noqa: E731

    p_d = np.array([p_of(t.mean) for t in tracks], dtype=float)
    out = [t.copy(weight=(1.0 - pd) * t.weight) for t, pd in zip(tracks, p_d)]
    if not detections:
        return prune_merge_cap(out, config, new_id)

    models = [_detection_model(d, config) for d in detections]
    hs = np.array([m[0] for m in models])
    rs = np.array([m[1] for m in models])
    zs = np.array([d.mean for d in detections])
    floor = config.clutter_density + config.birth_density

    if tracks:
        xs = np.array([t.mean for t in tracks])
        ps = np.array([t.cov for t in tracks])
        ws = np.array([t.weight for t in tracks])
        hp = np.einsum("mab,nbc->nmac", hs, ps)
        s = np.einsum("nmac,mdc->nmad", hp, hs) + rs[None]
        s_inv, s_det = _inverse_2x2(s)
        y = zs[None] - np.einsum("mab,nb->nma", hs, xs)
        maha = np.einsum("nma,nmab,nmb->nm", y, s_inv, y)
        q = np.exp(-0.5 * maha) / (2.0 * math.pi * np.sqrt(s_det))
        numer = (p_d * ws)[:, None] * q
        denom = floor + numer.sum(axis=0)
        post_w = numer / denom[None]
        keep = post_w >= config.prune_threshold * 1e-3
        n_idx, m_idx = np.nonzero(keep)
        if n_idx.size:
            hp_k = hp[n_idx, m_idx]
            k = np.einsum("kca,kcb->kab", hp_k, s_inv[n_idx, m_idx])
            means = xs[n_idx] + np.einsum("kab,kb->ka", k, y[n_idx, m_idx])
            ikh = np.eye(STATE_DIM)[None] - np.einsum("kab,kbc->kac", k, hs[m_idx])
            covs = np.einsum("kab,kbc,kdc->kad", ikh, ps[n_idx], ikh)
            covs += np.einsum("kab,kbc,kdc->kad", k, rs[m_idx], k)
            covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
            for j, (n, m) in enumerate(zip(n_idx, m_idx)):
                src = tracks[n]
                out.append(
                    LocalTrack(means[j], covs[j], float(post_w[n, m]), src.local_id, dict(src.alias_ids))
                )
    else:
        denom = np.full(len(detections), floor)

    for det, h, r, d in zip(detections, hs, rs, denom):
        weight = config.birth_weight * floor / d
        if weight < config.prune_threshold:
            continue
        out.append(birth_track(det.mean, r, weight, new_id(), config))
    return prune_merge_cap(out, config, new_id)


def birth_track(
    position: np.ndarray,
    position_cov: np.ndarray,
    weight: float,
    local_id: int,
    config: TrackerConfig,
    alias_ids: dict[int, int] | None = None,
) -> LocalTrack:
    """New component at a detection: measured position, zero-mean velocity."""
    mean = np.zeros(STATE_DIM)
    mean[:2] = position
    cov = np.zeros((STATE_DIM, STATE_DIM))
    cov[:2, :2] = position_cov
    cov[2, 2] = cov[3, 3] = config.birth_velocity_std**2
    return LocalTrack(mean, cov, weight, local_id, dict(alias_ids or {}))


def prune_merge_cap(
    tracks: list[LocalTrack],
    config: TrackerConfig,
    new_id: Callable[[], int] | None = None,
) -> list[LocalTrack]:
    """Prune light components, merge close ones, cap the count, fix identities.

    Merging follows the greedy leader scheme: the heaviest remaining track
    absorbs every track within the Mahalanobis threshold, measured with the
    leader's covariance. The merged track keeps the leader's id; aliases are
    united with the heavier member winning station collisions.

    Any copies that still share a ``local_id`` afterwards (one source track
    can spawn several hypotheses in one update) are re-labelled: the
    heaviest keeps the id, the others receive fresh ids and drop the alias
    entries the heaviest holds.
    """
    if new_id is None:
        new_id = _default_allocator(tracks)
    kept = [t for t in tracks if t.weight >= config.prune_threshold]
    kept.sort(key=lambda t: (-t.weight, t.local_id))
    threshold_sq = config.merge_mahalanobis_threshold**2
    merged: list[LocalTrack] = []
    while kept:
        leader = kept[0]
        if len(kept) == 1:
            merged.append(leader.copy())
            break
        means = np.array([t.mean for t in kept])
        diff = means - leader.mean
        try:
            sol = np.linalg.solve(leader.cov, diff.T).T
        except np.linalg.LinAlgError:
            sol = (np.linalg.pinv(leader.cov) @ diff.T).T
        d2 = np.einsum("ij,ij->i", diff, sol)
        member = d2 < threshold_sq
        member[0] = True
        group = [t for t, m in zip(kept, member) if m]
        kept = [t for t, m in zip(kept, member) if not m]
        if len(group) == 1:
            merged.append(leader.copy())
            continue
        w = np.array([t.weight for t in group])
        total = float(w.sum())
        gm = np.array([t.mean for t in group])
        mean = w @ gm / total
        dev = gm - mean
        cov = (
            np.einsum("k,kab->ab", w, np.array([t.cov for t in group]))
            + np.einsum("k,ka,kb->ab", w, dev, dev)
        ) / total
        aliases: dict[int, int] = {}
        for t in group:
            for station, rid in t.alias_ids.items():
                aliases.setdefault(station, rid)
        merged.append(LocalTrack(mean, 0.5 * (cov + cov.T), total, leader.local_id, aliases))
    merged.sort(key=lambda t: (-t.weight, t.local_id))
    merged = merged[: config.max_tracks]
    return _deduplicate_ids(merged, new_id)


def _deduplicate_ids(tracks: list[LocalTrack], new_id: Callable[[], int]) -> list[LocalTrack]:
    """Tracks must be sorted by descending weight."""
    owners: dict[int, LocalTrack] = {}
    for t in tracks:
        owner = owners.get(t.local_id)
        if owner is None:
            owners[t.local_id] = t
            continue
        t.local_id = new_id()
        t.alias_ids = {
            s: r for s, r in t.alias_ids.items() if owner.alias_ids.get(s) != r
        }
        owners[t.local_id] = t
    return tracks


class Tracker:
    """Per-station tracker state: the mixture plus an id allocator."""

    def __init__(self, config: TrackerConfig | None = None, first_id: int = 1):
        self.config = config or TrackerConfig()
        self.tracks: list[LocalTrack] = []
        self.new_id = IdAllocator(first_id)

    def predict(self, dt: float) -> None:
        self.tracks = predict(self.tracks, dt, self.config)

    def update(
        self, detections: list[Detection], detection_probability: Probability | None = None
    ) -> None:
        self.tracks = update_with_detections(
            self.tracks, detections, self.config, self.new_id, detection_probability
        )

    def confirmed(self) -> list[LocalTrack]:
        return [t for t in self.tracks if t.weight >= self.config.confirm_weight]

    @property
    def total_weight(self) -> float:
        return float(sum(t.weight for t in self.tracks))
