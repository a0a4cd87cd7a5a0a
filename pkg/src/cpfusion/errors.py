"""Exception types shared across the package."""

import numpy as np


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class NumericSingularityError(np.linalg.LinAlgError):
    """A matrix that must be inverted is singular or too ill-conditioned."""


class ScenarioError(ValueError):
    """A scenario description failed validation.

    ``field`` names the offending entry using a dotted path such as
    ``stations[2].sensor_range``.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CpmError(Exception):
    """Base class for codec failures."""


class EncodeRangeError(CpmError, ValueError):
    """A value does not fit the wire representation of ``field``."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class MalformedPayloadError(CpmError, ValueError):
    """The payload is structurally invalid."""


class MalformedTruncatedError(MalformedPayloadError):
    """The payload ends before a declared field or container."""


class UnsupportedVersionError(MalformedPayloadError):
    """The magic bytes or protocol version are not recognised."""


class MalformedCovarianceError(MalformedPayloadError):
    """A decoded covariance is not a valid covariance matrix."""
