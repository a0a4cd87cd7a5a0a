"""Information that goes round in circles.

Run with ``python demos/03_double_counting.py``.

Ping-pong: two stations see one pedestrian for a second, then both go
blind and can only echo each other's tracks back and forth. Because the
remote copies are fused by covariance intersection, the echo adds nothing
and the covariance keeps growing with the motion model, as it should.

Relay: station 1 sees a pedestrian, stations 2 and 3 do not. Station 3
hears about it twice, directly and again inside station 2's track. It
should still never claim to know more than station 1 does.
"""

import numpy as np

from cpfusion.sim import build_ping_pong_scenario, build_relay_scenario, run_scenario


def ping_pong() -> None:
    records = run_scenario(build_ping_pong_scenario(seed=0, ticks=200))
    local_id = records[10].station(1).track_for(1).local_id
    print("Ping-pong, station 1's track of the pedestrian")
    print(f"{'time s':>8s}{'trace':>12s}")
    for rec in records[::20]:
        track = next((t for t in rec.station(1).tracks if t.local_id == local_id), None)
        if track is not None:
            print(f"{rec.time:8.1f}{np.trace(track.cov):12.4f}")
    print("   Both stations are blind after 1.0 s; the trace never shrinks back.\n")


def relay() -> None:
    records = run_scenario(build_relay_scenario(seed=0, ticks=60))
    print("Relay, position variance trace")
    print(f"{'time s':>8s}{'station 1':>12s}{'station 3':>12s}")
    for rec in records[5::10]:
        values = []
        for sid in (1, 3):
            track = rec.station(sid).track_for(1)
            values.append(np.trace(track.cov[:2, :2]) if track is not None else float("nan"))
        print(f"{rec.time:8.1f}{values[0]:12.4f}{values[1]:12.4f}")
    print("   Station 3 never reports less uncertainty than the only station that saw it.")


if __name__ == "__main__":
    ping_pong()
    relay()
