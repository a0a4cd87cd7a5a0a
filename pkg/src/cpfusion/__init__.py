"""Consistent track-to-track fusion for V2X collective perception."""

from .ci import CiResult, ci_fuse, optimize_omega
from .errors import (
    CpmError,
    EncodeRangeError,
    InvalidArgumentError,
    MalformedCovarianceError,
    MalformedPayloadError,
    MalformedTruncatedError,
    NumericSingularityError,
    ScenarioError,
    UnsupportedVersionError,
)
from .geometry import DetectionArea, GaussianEstimate, Pose2D, normalize_angle, transform_estimate
from .t2t import (
    FusionReport,
    RemoteDetectionModel,
    RemoteTrack,
    ci_track_update,
    fuse_all_stations,
    fuse_station,
)
from .tracker import (
    Detection,
    LocalTrack,
    Tracker,
    TrackerConfig,
    predict,
    prune_merge_cap,
    update_with_detections,
)

__version__ = "0.1.0"

__all__ = [
    "CiResult",
    "CpmError",
    "Detection",
    "DetectionArea",
    "EncodeRangeError",
    "FusionReport",
    "GaussianEstimate",
    "InvalidArgumentError",
    "LocalTrack",
    "MalformedCovarianceError",
    "MalformedPayloadError",
    "MalformedTruncatedError",
    "NumericSingularityError",
    "Pose2D",
    "RemoteDetectionModel",
    "RemoteTrack",
    "ScenarioError",
    "Tracker",
    "TrackerConfig",
    "UnsupportedVersionError",
    "ci_fuse",
    "ci_track_update",
    "fuse_all_stations",
    "fuse_station",
    "normalize_angle",
    "optimize_omega",
    "predict",
    "prune_merge_cap",
    "transform_estimate",
    "update_with_detections",
]
