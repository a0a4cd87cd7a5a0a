"""Track-to-track fusion of remote tracks into a local GM-PHD mixture.

Remote tracks from one cooperative station are folded into the local track
list in three passes:

1. *matched*: a remote whose ``(station, id)`` pair already sits in a local
   track's alias list updates that track directly;
2. *unmatched*: every remaining remote seeds a new track and also updates
   every unmatched local track that has never been fused with that station;
3. *undetected*: local tracks that received nothing are discounted by the
   probability that the remote station should have seen them.

Every pairwise update is covariance intersection written in Kalman form,
so information that has travelled around a loop back to its origin is not
counted twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ci import inverse_spd, solve_omega, solve_omega_cov_many
from .errors import InvalidArgumentError, NumericSingularityError
from .geometry import DetectionArea, Pose2D, check_covariance
from .tracker import (
    STATE_DIM,
    IdAllocator,
    LocalTrack,
    TrackerConfig,
    birth_track,
    prune_merge_cap,
)

OMEGA_CLAMP = 1e-12


@dataclass
class RemoteTrack:
    """A track received from station ``station_id`` under id ``remote_track_id``.

    ``mean`` is ``(x, y)`` or ``(x, y, vx, vy)`` in the receiving station's
    frame.
    """

    mean: np.ndarray
    cov: np.ndarray
    station_id: int
    remote_track_id: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if self.mean.size not in (2, 4):
            raise InvalidArgumentError(f"remote mean must have 2 or 4 entries, got {self.mean.size}")
        self.cov = np.asarray(self.cov, dtype=float)
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise InvalidArgumentError(f"remote cov shape {self.cov.shape} does not match mean")

    @property
    def observation_matrix(self) -> np.ndarray:
        return np.eye(self.mean.size, STATE_DIM)


@dataclass
class FusionReport:
    matched_count: int = 0
    new_track_count: int = 0
    undetected_count: int = 0
    omegas: list[float] = field(default_factory=list)


class RemoteDetectionModel:
    """Detection probability of a remote station, evaluated in the local frame.

    ``areas`` are the sender's declared detection areas in the sender frame
    and ``sender_pose`` places the sender in the receiver frame. Inside any
    area the probability is ``probability``; outside it is zero.
    """

    def __init__(
        self,
        areas: Iterable[DetectionArea] = (),
        sender_pose: Pose2D | None = None,
        probability: float = 0.9,
    ):
        if not 0.0 <= probability <= 1.0:
            raise InvalidArgumentError("probability must lie in [0, 1]")
        self.areas = list(areas)
        self.sender_pose = sender_pose or Pose2D.identity()
        self.probability = probability
        self._everywhere = False

    @classmethod
    def constant(cls, probability: float) -> RemoteDetectionModel:
        model = cls(probability=probability)
        model._everywhere = True
        return model

    def __call__(self, mean: np.ndarray) -> float:
        if self._everywhere:
            return self.probability
        px, py = self.sender_pose.inverse_apply(np.asarray(mean, dtype=float)[:2])
        for area in self.areas:
            if area.contains(px, py):
                return self.probability
        return 0.0


@dataclass
class FusionSubsets:
    """Raw output of the three passes, before pruning and merging."""

    matched: list[LocalTrack]
    unmatched: list[LocalTrack]
    undetected: list[LocalTrack]
    report: FusionReport

    def union(self) -> list[LocalTrack]:
        return self.undetected + self.matched + self.unmatched


def gaussian_density(y: np.ndarray, cov: np.ndarray) -> float:
    """Density of ``N(0, cov)`` at ``y``."""
    return float(_gaussian_densities(np.asarray(y, float)[None], np.asarray(cov, float)[None])[0])


def _gaussian_densities(y: np.ndarray, cov: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, y[..., None])[..., 0]
    log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    m = y.shape[1]
    return np.exp(-0.5 * np.einsum("ki,ki->k", z, z) - 0.5 * (m * math.log(2.0 * math.pi) + log_det))


def _omegas(sl: np.ndarray, sr: np.ndarray, criterion: str) -> np.ndarray:
    try:
        return solve_omega_cov_many(sl, sr, criterion)
    except NumericSingularityError:
        pass
    # Some pair is near-singular: solve one by one through the jittered
    # information form.
    m = sr.shape[-1]
    out = []
    for a, b in zip(sl, sr):
        projected_info = np.zeros((STATE_DIM, STATE_DIM))
        projected_info[:m, :m] = inverse_spd(b)
        out.append(solve_omega(inverse_spd(a), projected_info, criterion))
    return np.array(out)


def ci_track_update(
    local: LocalTrack,
    remote: RemoteTrack,
    remote_model: Callable[[np.ndarray], float],
    criterion: str = "det",
    likelihood: str = "independent",
):
    """Covariance-intersection update of one local track by one remote track.

    Returns ``(mean, cov, weight, omega)``. With ``w`` the determinant-optimal
    CI weight, the update inflates ``Sl* = Sl / w`` and ``Sr* = Sr / (1-w)``
    and runs a Joseph-form Kalman step with them. The unnormalised weight is
    ``p_D(x_l) * q * weight`` where ``q`` is the density of the innovation.
    By default (``likelihood="independent"``) the innovation is scored under
    ``N(0, Sr + H Sl H')``, its spread when both estimates are taken at face
    value; ``likelihood="inflated"`` scores it under the CI-inflated
    ``S = Sr* + H Sl* H'`` used by the update itself.
    """
    return ci_track_updates([(local, remote)], remote_model, criterion, likelihood)[0]


def ci_track_updates(
    pairs: Sequence[tuple[LocalTrack, RemoteTrack]],
    remote_model: Callable[[np.ndarray], float],
    criterion: str = "det",
    likelihood: str = "independent",
) -> list[tuple[np.ndarray, np.ndarray, float, float]]:
    """:func:`ci_track_update` for many pairs, vectorised over the pairs."""
    if likelihood not in ("independent", "inflated"):
        raise InvalidArgumentError(f"unknown likelihood covariance {likelihood!r}")
    out: list = [None] * len(pairs)
    by_dim: dict[int, list[int]] = {}
    for idx, (_, remote) in enumerate(pairs):
        by_dim.setdefault(remote.mean.size, []).append(idx)
    for m, idxs in by_dim.items():
        locals_ = [pairs[i][0] for i in idxs]
        remotes = [pairs[i][1] for i in idxs]
        xl = np.array([t.mean for t in locals_])
        sl = np.array([t.cov for t in locals_])
        xr = np.array([r.mean for r in remotes])
        sr = np.array([r.cov for r in remotes])
        omegas = _omegas(sl, sr, criterion)
        w = np.clip(omegas, OMEGA_CLAMP, 1.0 - OMEGA_CLAMP)[:, None, None]
        sl_star = sl / w
        sr_star = sr / (1.0 - w)
        # H = [I 0] selects the leading block, so H S H' and S H' are slices.
        y = xr - xl[:, :m]
        s = sr_star + sl_star[:, :m, :m]
        try:
            k = np.swapaxes(np.linalg.solve(s, sl_star[:, :m, :]), 1, 2)
        except np.linalg.LinAlgError as exc:
            raise NumericSingularityError("innovation covariance is singular") from exc
        means = xl + np.einsum("kim,km->ki", k, y)
        ikh = np.broadcast_to(np.eye(STATE_DIM), sl.shape).copy()
        ikh[:, :, :m] -= k
        covs = ikh @ sl_star @ np.swapaxes(ikh, 1, 2) + k @ sr_star @ np.swapaxes(k, 1, 2)
        covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
        q = _gaussian_densities(y, s if likelihood == "inflated" else sr + sl[:, :m, :m])
        for row, i in enumerate(idxs):
            local = locals_[row]
            weight = remote_model(local.mean) * float(q[row]) * local.weight
            out[i] = (means[row], covs[row], weight, float(omegas[row]))
    return out


def _position_gate(local: LocalTrack, remote: RemoteTrack) -> float:
    """Squared Mahalanobis distance between the position parts."""
    d = remote.mean[:2] - local.mean[:2]
    s = remote.cov[:2, :2] + local.cov[:2, :2]
    a, b, c = s[0, 0], s[0, 1], s[1, 1]
    det = a * c - b * b
    if det <= 0.0:
        return math.inf
    return (c * d[0] * d[0] - 2.0 * b * d[0] * d[1] + a * d[1] * d[1]) / det


def _normalise(group: list[LocalTrack]) -> None:
    total = sum(t.weight for t in group)
    if total > 0.0:
        for t in group:
            t.weight = float(t.weight / total)


def _check_remotes(remotes: Sequence[RemoteTrack]) -> int | None:
    ids = {r.station_id for r in remotes}
    if len(ids) > 1:
        raise InvalidArgumentError(f"remotes mix station ids {sorted(ids)}")
    return ids.pop() if ids else None


def _check_remote_covariances(remotes: Sequence[RemoteTrack]) -> None:
    for n in (2, 4):
        covs = [r.cov for r in remotes if r.mean.size == n]
        if not covs:
            continue
        stack = np.array(covs)
        symmetric = np.allclose(stack, np.swapaxes(stack, 1, 2), rtol=0.0, atol=1e-12)
        if symmetric and np.all(np.isfinite(stack)):
            try:
                np.linalg.cholesky(stack)
                continue
            except np.linalg.LinAlgError:
                pass
        # Slow path names the offending matrix or accepts PSD-but-singular ones.
        for c in covs:
            check_covariance(c, "remote cov")


def _remote_birth(remote: RemoteTrack, weight: float, local_id: int, config: TrackerConfig):
    alias = {remote.station_id: remote.remote_track_id}
    if remote.mean.size == STATE_DIM:
        return LocalTrack(remote.mean.copy(), remote.cov.copy(), weight, local_id, alias)
    return birth_track(remote.mean, remote.cov, weight, local_id, config, alias)


def fuse_station_subsets(
    locals_: Sequence[LocalTrack],
    remotes: Sequence[RemoteTrack],
    remote_model: Callable[[np.ndarray], float],
    config: TrackerConfig,
    new_id: Callable[[], int] | None = None,
) -> FusionSubsets:
    """Run the matched, unmatched and undetected passes for one station."""
    _check_remotes(remotes)
    _check_remote_covariances(remotes)
    if new_id is None:
        new_id = IdAllocator(max((t.local_id for t in locals_), default=0) + 1)
    report = FusionReport()
    criterion = config.omega_criterion
    likelihood = config.likelihood_covariance

    unmatched_local = [True] * len(locals_)
    unmatched_remote = [True] * len(remotes)
    matched: list[LocalTrack] = []
    pairs = [
        (j, i)
        for j, remote in enumerate(remotes)
        for i, local in enumerate(locals_)
        if local.alias_ids.get(remote.station_id) == remote.remote_track_id
    ]
    results = ci_track_updates(
        [(locals_[i], remotes[j]) for j, i in pairs], remote_model, criterion, likelihood
    )
    groups: dict[int, list[LocalTrack]] = {}
    for (j, i), (mean, cov, weight, omega) in zip(pairs, results):
        groups.setdefault(j, []).append(locals_[i].copy(mean=mean, cov=cov, weight=weight))
        report.omegas.append(omega)
        unmatched_local[i] = False
        unmatched_remote[j] = False
    for j in sorted(groups):
        _normalise(groups[j])
        matched.extend(groups[j])
    report.matched_count = len(matched)

    pool = [t for t, free in zip(locals_, unmatched_local) if free]
    unmatched: list[LocalTrack] = []
    gate = config.gate_mahalanobis_sq
    free_remotes = [r for r, free in zip(remotes, unmatched_remote) if free]
    pairs = [
        (j, local)
        for j, remote in enumerate(free_remotes)
        for local in pool
        if remote.station_id not in local.alias_ids
        and (gate is None or _position_gate(local, remote) <= gate)
    ]
    results = ci_track_updates(
        [(local, free_remotes[j]) for j, local in pairs], remote_model, criterion, likelihood
    )
    groups = {}
    for (j, local), (mean, cov, weight, omega) in zip(pairs, results):
        remote = free_remotes[j]
        aliases = dict(local.alias_ids)
        aliases[remote.station_id] = remote.remote_track_id
        groups.setdefault(j, []).append(
            local.copy(mean=mean, cov=cov, weight=weight, alias_ids=aliases)
        )
        report.omegas.append(omega)
    for j, remote in enumerate(free_remotes):
        group = [_remote_birth(remote, config.birth_weight, new_id(), config)]
        report.new_track_count += 1
        group.extend(groups.get(j, []))
        _normalise(group)
        unmatched.extend(group)

    undetected = [t.copy(weight=(1.0 - remote_model(t.mean)) * t.weight) for t in pool]
    report.undetected_count = len(undetected)
    return FusionSubsets(matched, unmatched, undetected, report)


def fuse_station(
    locals_: Sequence[LocalTrack],
    remotes: Sequence[RemoteTrack],
    remote_model: Callable[[np.ndarray], float],
    config: TrackerConfig,
    new_id: Callable[[], int] | None = None,
) -> tuple[list[LocalTrack], FusionReport]:
    """Fuse one station's remote tracks, then prune, merge and cap."""
    if new_id is None:
        new_id = IdAllocator(max((t.local_id for t in locals_), default=0) + 1)
    subsets = fuse_station_subsets(locals_, remotes, remote_model, config, new_id)
    return prune_merge_cap(subsets.union(), config, new_id), subsets.report


def refresh_aliases(
    locals_: Sequence[LocalTrack], station_id: int, reported_ids: Iterable[int]
) -> list[LocalTrack]:
    """Drop alias entries for ``station_id`` whose remote id is not reported.

    A station may retire or renumber a track. Without this step a local
    track holding the retired id could never pair with that station again,
    because the unmatched pass skips locals that already know the station.
    """
    reported = set(reported_ids)
    out = []
    for t in locals_:
        rid = t.alias_ids.get(station_id)
        if rid is not None and rid not in reported:
            aliases = dict(t.alias_ids)
            del aliases[station_id]
            t = t.copy(alias_ids=aliases)
        out.append(t)
    return out


def fuse_all_stations(
    locals_: Sequence[LocalTrack],
    per_station_remotes: Sequence[tuple[int, Sequence[RemoteTrack], Callable[[np.ndarray], float]]],
    config: TrackerConfig,
    new_id: Callable[[], int] | None = None,
    refresh: bool = True,
    reports: list[FusionReport] | None = None,
) -> list[LocalTrack]:
    """Apply :func:`fuse_station` for each station batch in the given order.

    Batches should be ordered by arrival time, ties broken by ascending
    station id. With ``refresh`` set, stale aliases of each station are
    dropped before its batch is fused (see :func:`refresh_aliases`). Per
    station reports are appended to ``reports`` when a list is supplied.
    """
    seen = set()
    for station_id, remotes, _model in per_station_remotes:
        if station_id in seen:
            raise InvalidArgumentError(f"station {station_id} appears twice in one cycle")
        seen.add(station_id)
        for r in remotes:
            if r.station_id != station_id:
                raise InvalidArgumentError(
                    f"batch for station {station_id} holds a track from station {r.station_id}"
                )
    if new_id is None:
        new_id = IdAllocator(max((t.local_id for t in locals_), default=0) + 1)
    tracks = list(locals_)
    for station_id, remotes, model in per_station_remotes:
        if refresh:
            tracks = refresh_aliases(tracks, station_id, (r.remote_track_id for r in remotes))
        tracks, report = fuse_station(tracks, remotes, model, config, new_id)
        if reports is not None:
            reports.append(report)
    return tracks
