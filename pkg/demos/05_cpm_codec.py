"""What goes over the air.

Run with ``python demos/05_cpm_codec.py``.

Builds a collective perception message with one shared track and one raw
detection, encodes it, prints the decoded view and the size, then throws a
batch of corrupted payloads at the decoder. Every corrupted payload must be
rejected with a typed error, never a crash.
"""

import numpy as np

from cpfusion import CpmError, cpm
from cpfusion.cli import fuzz_decode
from cpfusion.geometry import DetectionArea, Pose2D

if __name__ == "__main__":
    message = cpm.Cpm(
        station_id=7,
        generation_time=1500,
        management=cpm.ManagementContainer(
            cpm.StationType.ROADSIDE_UNIT, Pose2D(12.5, -3.25, 0.5, np.diag([0.01, 0.01, 1e-4]))
        ),
        sensors=[cpm.SensorInfoContainer(1, cpm.SensorType.LIDAR, DetectionArea(0.0, 0.0, 30.0, -1.0, 1.0))],
        perceived_objects=[
            cpm.PerceivedObjectContainer(
                3, cpm.Abstraction.TRACK, np.array([4.0, 1.0, 0.5, 0.0]), np.diag([0.04, 0.04, 0.25, 0.25])
            ),
            cpm.PerceivedObjectContainer(9, cpm.Abstraction.DETECTION, np.array([-2.0, 6.5]), np.eye(2) * 0.04),
        ],
    )
    payload = cpm.encode(message)
    print(f"encoded size: {len(payload)} bytes")
    print(cpm.describe(cpm.decode(payload)))

    try:
        cpm.decode(payload[:-3])
    except CpmError as exc:
        print(f"truncated payload rejected: {type(exc).__name__}: {exc}")

    report = fuzz_decode(20000, seed=42)
    print(
        f"fuzzing: {report['cases']} payloads, {report['rejected']} rejected, "
        f"{report['accepted']} still valid, {len(report['crashes'])} crashes"
    )
