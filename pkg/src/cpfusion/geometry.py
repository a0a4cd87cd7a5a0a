"""SE(2) poses and covariance-carrying frame transforms.

Perceived objects arrive in the frame of the station that observed them. To
fuse them, the receiver moves each estimate into its own frame and has to
account for three sources of uncertainty: the estimate itself, the pose of
the sender, and its own pose. Propagation is first order (Jacobians of the
compound transform); the test-suite checks it against a sigma-point oracle.

Estimate layouts are ``(x, y)`` or ``(x, y, vx, vy)``. Velocities rotate with
the frame but pick up no lever-arm terms, since station yaw rates are not
carried in the messages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap ``theta`` into the half-open interval (-pi, pi]."""
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta!r}")
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotation_derivative(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[-s, -c], [c, -s]])


def symmetrize(cov: np.ndarray) -> np.ndarray:
    return 0.5 * (cov + cov.T)


def check_covariance(cov: np.ndarray, name: str = "cov") -> np.ndarray:
    """Return ``cov`` as a float array after checking symmetry and PSD-ness.

    Symmetry is checked to 1e-9 relative to the largest entry; the smallest
    eigenvalue may dip to -1e-9 * trace to absorb round-off.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    scale = max(float(np.max(np.abs(cov))), 1e-300)
    if np.max(np.abs(cov - cov.T)) > 1e-9 * scale:
        raise InvalidArgumentError(f"{name} is not symmetric")
    if cov.size:
        try:
            np.linalg.cholesky(cov)
            return cov
        except np.linalg.LinAlgError:
            pass
        lowest = float(np.linalg.eigvalsh(symmetrize(cov))[0])
        if lowest < -1e-9 * max(float(np.trace(cov)), 1e-300):
            raise InvalidArgumentError(
                f"{name} is not positive semi-definite (eigenvalue {lowest:.3e})"
            )
    return cov


@dataclass(frozen=True)
class Pose2D:
    """Planar pose of a station with a 3x3 covariance over (x, y, theta)."""

    x: float
    y: float
    theta: float
    cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        for name in ("x", "y"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"pose {name} must be finite")
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))
        cov = check_covariance(self.cov, "pose cov")
        if cov.shape != (3, 3):
            raise InvalidArgumentError("pose cov must be 3x3")
        object.__setattr__(self, "cov", cov)

    @classmethod
    def identity(cls) -> Pose2D:
        return cls(0.0, 0.0, 0.0)

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def rotation(self) -> np.ndarray:
        return rotation(self.theta)

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        """Map world points (N x 2 or 2,) into this pose's frame (mean only)."""
        pts = np.asarray(points, dtype=float)
        return (pts - self.translation) @ self.rotation()

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map points in this pose's frame into the world frame (mean only)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation().T + self.translation


@dataclass(frozen=True)
class GaussianEstimate:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mean)):
            raise InvalidArgumentError("estimate mean must be finite")
        cov = check_covariance(self.cov, "estimate cov")
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def transform_jacobians(source_pose: Pose2D, mean: np.ndarray, target_pose: Pose2D):
    """Transformed mean plus Jacobians w.r.t. source pose, target pose, estimate.

    Returns ``(mean_t, J_source, J_target, J_estimate)``; the pose Jacobians
    are ``n x 3`` and the estimate Jacobian is ``n x n``.
    """
    mean = np.asarray(mean, dtype=float)
    n = mean.size
    if n not in (2, 4):
        raise InvalidArgumentError(f"estimate layout must have 2 or 4 entries, got {n}")
    r_s = rotation(source_pose.theta)
    r_t_inv = rotation(target_pose.theta).T
    dr_s = _rotation_derivative(source_pose.theta)
    dr_t_inv = _rotation_derivative(target_pose.theta).T
    rel = r_t_inv @ r_s

    p = mean[:2]
    world = r_s @ p + source_pose.translation
    offset = world - target_pose.translation

    out = np.empty(n)
    out[:2] = r_t_inv @ offset
    j_src = np.zeros((n, 3))
    j_src[:2, :2] = r_t_inv
    j_src[:2, 2] = r_t_inv @ (dr_s @ p)
    j_tgt = np.zeros((n, 3))
    j_tgt[:2, :2] = -r_t_inv
    j_tgt[:2, 2] = dr_t_inv @ offset
    j_est = np.zeros((n, n))
    j_est[:2, :2] = rel
    if n == 4:
        v = mean[2:]
        out[2:] = rel @ v
        j_src[2:, 2] = r_t_inv @ (dr_s @ v)
        j_tgt[2:, 2] = dr_t_inv @ (r_s @ v)
        j_est[2:, 2:] = rel
    return out, j_src, j_tgt, j_est


def transform_estimate(
    source_pose: Pose2D, estimate: GaussianEstimate, target_pose: Pose2D
) -> GaussianEstimate:
    """Move ``estimate`` from the source station frame into the target frame.

    The output covariance is ``Js Ps Js' + Jt Pt Jt' + Je P Je'``; the three
    error sources are treated as independent.
    """
    if estimate.dim not in (2, 4):
        raise InvalidArgumentError(
            f"estimate layout must have 2 or 4 entries, got {estimate.dim}"
        )
    mean, cov = transform_mean_cov(source_pose, estimate.mean, estimate.cov, target_pose)
    return GaussianEstimate(mean, cov)


def transform_mean_cov(
    source_pose: Pose2D, mean: np.ndarray, cov: np.ndarray, target_pose: Pose2D
) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`transform_estimate` without input validation."""
    out, j_src, j_tgt, j_est = transform_jacobians(source_pose, mean, target_pose)
    new_cov = (
        j_src @ source_pose.cov @ j_src.T
        + j_tgt @ target_pose.cov @ j_tgt.T
        + j_est @ cov @ j_est.T
    )
    return out, symmetrize(new_cov)


def transform_mean_covs(
    source_pose: Pose2D, means: np.ndarray, covs: np.ndarray, target_pose: Pose2D
) -> tuple[np.ndarray, np.ndarray]:
    """:func:`transform_mean_cov` for a stack of same-layout estimates.

    ``means`` is ``k x n`` and ``covs`` is ``k x n x n`` with ``n`` 2 or 4.
    """
    means = np.asarray(means, dtype=float)
    covs = np.asarray(covs, dtype=float)
    k, n = means.shape
    if n not in (2, 4):
        raise InvalidArgumentError(f"estimate layout must have 2 or 4 entries, got {n}")
    r_s = rotation(source_pose.theta)
    r_t_inv = rotation(target_pose.theta).T
    dr_s = _rotation_derivative(source_pose.theta)
    dr_t_inv = _rotation_derivative(target_pose.theta).T
    rel = r_t_inv @ r_s

    p = means[:, :2]
    offset = p @ r_s.T + (source_pose.translation - target_pose.translation)
    out = np.empty((k, n))
    out[:, :2] = offset @ r_t_inv.T
    j_src = np.zeros((k, n, 3))
    j_src[:, :2, :2] = r_t_inv
    j_src[:, :2, 2] = p @ (r_t_inv @ dr_s).T
    j_tgt = np.zeros((k, n, 3))
    j_tgt[:, :2, :2] = -r_t_inv
    j_tgt[:, :2, 2] = offset @ dr_t_inv.T
    j_est = np.zeros((n, n))
    j_est[:2, :2] = rel
    if n == 4:
        v = means[:, 2:]
        out[:, 2:] = v @ rel.T
        j_src[:, 2:, 2] = v @ (r_t_inv @ dr_s).T
        j_tgt[:, 2:, 2] = v @ (dr_t_inv @ r_s).T
        j_est[2:, 2:] = rel
    new_cov = (
        j_src @ source_pose.cov @ np.swapaxes(j_src, 1, 2)
        + j_tgt @ target_pose.cov @ np.swapaxes(j_tgt, 1, 2)
        + j_est @ covs @ j_est.T
    )
    return out, 0.5 * (new_cov + np.swapaxes(new_cov, 1, 2))


def relative_pose(reference: Pose2D, other: Pose2D, cov: np.ndarray | None = None) -> Pose2D:
    """Pose of ``other`` expressed in the frame of ``reference`` (means only)."""
    local = reference.inverse_apply(other.translation)
    return Pose2D(
        float(local[0]),
        float(local[1]),
        other.theta - reference.theta,
        np.zeros((3, 3)) if cov is None else cov,
    )


@dataclass(frozen=True)
class DetectionArea:
    """Circle or sector in a station frame where its sensors can detect objects.

    A sector is given by ``start``/``end`` bearings (radians, measured at the
    centre, counter-clockwise from ``start`` to ``end``). Without bearings the
    area is a full circle.
    """

    cx: float
    cy: float
    radius: float
    start: float | None = None
    end: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise InvalidArgumentError(f"detection radius must be positive, got {self.radius}")
        if (self.start is None) != (self.end is None):
            raise InvalidArgumentError("sector needs both start and end bearings")

    @property
    def is_sector(self) -> bool:
        return self.start is not None

    def contains(self, x: float, y: float) -> bool:
        dx, dy = x - self.cx, y - self.cy
        if dx * dx + dy * dy > self.radius * self.radius:
            return False
        if not self.is_sector:
            return True
        span = (self.end - self.start) % TWO_PI
        if span == 0.0 and self.end != self.start:
            span = TWO_PI
        offset = (math.atan2(dy, dx) - self.start) % TWO_PI
        return offset <= span
