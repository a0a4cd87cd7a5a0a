"""Ready-made scenarios.

``build_paper_grid_scenario``
    Four connected vehicles and one roadside unit watch nine static
    pedestrians on a 5 m grid. Sensor ranges are concentric radii picked so
    that every pedestrian is seen by a different set of stations:

    ======  ===================  =========  ======  ==============
    id      position             heading    range   sees
    ======  ===================  =========  ======  ==============
    1 CV1   (-D, 5)              0          D+2.5   column 1
    2 CV2   (5, -6)              pi/2       20      all nine
    3 CV3   (5, 22)              -pi/2      19.8    rows 1 and 2
    4 CV4   (5, 17)              -pi/2      10.3    row 1
    5 IRSU  (-10, 5)             0          18      columns 1 and 2
    ======  ===================  =========  ======  ==============

    Columns sit at x = 0, 5, 10 and rows at y = 10, 5, 0, so the top-left
    pedestrian is seen by all five stations and the bottom-right one only by
    CV2. Results are read in the frame of CV1. The CV1 stand-off ``D``
    controls how much CV1's heading uncertainty inflates remote information.

``build_occlusion_scenario``
    Two vehicles drive towards an intersection. Station 1 cannot see two
    walkers until scripted times; station 2 cannot see a jogger at first.

``build_ping_pong_scenario``
    Two static stations trade tracks of one pedestrian; both sensors go
    blind after one second.

``build_single_station_scenario`` and ``build_relay_scenario`` are small
fixtures for filter and loop-closure checks.
"""

from __future__ import annotations

import math

from .scenario import (
    Link,
    Occlusion,
    PedestrianSpec,
    Scenario,
    StationSpec,
    TrackerSettings,
    VelocityStep,
    Waypoint,
)

GRID_CV1_DISTANCE = 80.0
SENSOR_NOISE_STD = 0.2
CV_LOCALIZATION = (0.25, math.radians(0.5))
IRSU_LOCALIZATION = (0.005, 1e-9)

GRID_COLUMNS = (0.0, 5.0, 10.0)
GRID_ROWS = (10.0, 5.0, 0.0)


def _static(station_id, station_type, x, y, theta, loc, sensor_range, share_mode, noise=SENSOR_NOISE_STD):
    return StationSpec(
        station_id=station_id,
        station_type=station_type,
        trajectory=[Waypoint(0.0, x, y, theta)],
        localization_std=loc,
        sensor_range=sensor_range,
        sensor_noise_std=noise,
        share_mode=share_mode,
    )


def grid_pedestrians() -> list[PedestrianSpec]:
    peds = []
    for r, y in enumerate(GRID_ROWS, start=1):
        for c, x in enumerate(GRID_COLUMNS, start=1):
            peds.append(
                PedestrianSpec(
                    pedestrian_id=(r - 1) * 3 + c,
                    initial_position=(x, y),
                    velocity_profile=[VelocityStep(0.0, 0.0, 0.0)],
                    process_noise_std=0.0,
                    label=f"r{r}c{c}",
                )
            )
    return peds


def build_paper_grid_scenario(
    configuration: str = "A",
    seed: int = 0,
    *,
    cv1_distance: float = GRID_CV1_DISTANCE,
    duration: float = 10.0,
) -> Scenario:
    """Grid experiment; configuration ``A`` shares roadside tracks, ``B`` detections."""
    configuration = configuration.upper()
    if configuration not in ("A", "B"):
        raise ValueError(f"configuration must be 'A' or 'B', got {configuration!r}")
    irsu_mode = "tracks" if configuration == "A" else "detections"
    d = cv1_distance
    stations = [
        _static(1, "vehicle", -d, 5.0, 0.0, CV_LOCALIZATION, d + 2.5, "tracks"),
        _static(2, "vehicle", 5.0, -6.0, math.pi / 2, CV_LOCALIZATION, 20.0, "tracks"),
        _static(3, "vehicle", 5.0, 22.0, -math.pi / 2, CV_LOCALIZATION, 19.8, "tracks"),
        _static(4, "vehicle", 5.0, 17.0, -math.pi / 2, CV_LOCALIZATION, 10.3, "tracks"),
        _static(5, "roadside_unit", -10.0, 5.0, 0.0, IRSU_LOCALIZATION, 18.0, irsu_mode),
    ]
    cvs = [1, 2, 3, 4]
    topology = [Link(a, b) for a in cvs for b in cvs if a != b]
    topology += [Link(5, b) for b in cvs]
    return Scenario(
        stations=stations,
        pedestrians=grid_pedestrians(),
        duration=duration,
        tick_rate=10.0,
        topology=topology,
        rng_seed=seed,
        tracker=TrackerSettings(),
        name=f"paper-grid-{configuration}",
        reference_station=1,
    )


def build_occlusion_scenario(seed: int = 0) -> Scenario:
    """Two approaching vehicles, two walkers and a jogger, scripted blind spots.

    Station 1 drives east at 4 m/s, station 2 north at 2.5 m/s; both head
    for the origin. Station 1 cannot detect walker 1 before 4.0 s or walker
    2 before 5.5 s. Station 2 cannot detect the jogger before 3.0 s. The
    jogger runs west and leaves station 1's 35 m range at about 6 s.
    """
    duration = 10.0
    s1 = StationSpec(
        station_id=1,
        station_type="vehicle",
        trajectory=[Waypoint(0.0, -40.0, -2.0, 0.0), Waypoint(duration, -40.0 + 4.0 * duration, -2.0, 0.0)],
        localization_std=(0.13, 0.01),
        sensor_range=35.0,
        sensor_noise_std=SENSOR_NOISE_STD,
        share_mode="tracks",
    )
    s2 = StationSpec(
        station_id=2,
        station_type="vehicle",
        trajectory=[
            Waypoint(0.0, 3.0, -35.0, math.pi / 2),
            Waypoint(duration, 3.0, -35.0 + 2.5 * duration, math.pi / 2),
        ],
        localization_std=(0.13, 0.01),
        sensor_range=60.0,
        sensor_noise_std=SENSOR_NOISE_STD,
        share_mode="tracks",
    )
    peds = [
        PedestrianSpec(1, (5.0, 8.0), [VelocityStep(0.0, -2.0, 0.0)], 0.1, "walker-1"),
        PedestrianSpec(2, (8.0, -6.0), [VelocityStep(0.0, 0.0, 2.0)], 0.1, "walker-2"),
        PedestrianSpec(3, (-33.0, 3.0), [VelocityStep(0.0, -2.8, 0.0)], 0.1, "jogger"),
    ]
    # Parked-car shadows: each region covers the walker's path while the
    # blind spot lasts.
    occlusions = [
        Occlusion(1, (), 0.0, 4.0, region=(1.0, 8.0, 4.5)),
        Occlusion(1, (), 0.0, 5.5, region=(8.0, -0.5, 6.0)),
        Occlusion(2, (), 0.0, 3.0, region=(-37.2, 3.0, 4.5)),
    ]
    return Scenario(
        stations=[s1, s2],
        pedestrians=peds,
        duration=duration,
        tick_rate=10.0,
        topology=[Link(1, 2), Link(2, 1)],
        rng_seed=seed,
        occlusions=occlusions,
        name="occlusion",
        reference_station=1,
    )


def build_ping_pong_scenario(seed: int = 0, ticks: int = 200, blind_from: float = 1.0) -> Scenario:
    """Two stations exchange tracks of one pedestrian, then both go blind.

    From ``blind_from`` seconds on neither station detects anything, so the
    only information left is what they keep sending each other.
    """
    loc = (0.05, math.radians(0.1))
    stations = [
        _static(1, "vehicle", 0.0, 0.0, 0.0, loc, 20.0, "tracks"),
        _static(2, "vehicle", 10.0, 0.0, math.pi, loc, 20.0, "tracks"),
    ]
    duration = ticks / 10.0
    peds = [PedestrianSpec(1, (5.0, 5.0), [VelocityStep(0.0, 0.0, 0.0)], 0.0, "target")]
    # Each blind region swallows the whole sensor disc. A small one would let
    # a drifting track leave it, where the missed detections rightly kill it.
    occlusions = [
        Occlusion(1, (), blind_from, duration + 1.0, region=(0.0, 0.0, 25.0)),
        Occlusion(2, (), blind_from, duration + 1.0, region=(10.0, 0.0, 25.0)),
    ]
    return Scenario(
        stations=stations,
        pedestrians=peds,
        duration=duration,
        tick_rate=10.0,
        topology=[Link(1, 2), Link(2, 1)],
        rng_seed=seed,
        occlusions=occlusions,
        name="ping-pong",
        reference_station=1,
    )


def build_single_station_scenario(
    seed: int = 0,
    ticks: int = 100,
    pedestrians: int = 1,
    sensor_noise_std: float = SENSOR_NOISE_STD,
) -> Scenario:
    """One static station watching static pedestrians 5 m apart."""
    station = _static(1, "vehicle", 0.0, 0.0, 0.0, (0.0, 0.0), 30.0, "tracks", sensor_noise_std)
    peds = [
        PedestrianSpec(k + 1, (10.0, 5.0 * k), [VelocityStep(0.0, 0.0, 0.0)], 0.0, f"p{k + 1}")
        for k in range(pedestrians)
    ]
    return Scenario(
        stations=[station],
        pedestrians=peds,
        duration=ticks / 10.0,
        tick_rate=10.0,
        topology=[],
        rng_seed=seed,
        name="single-station",
    )


def build_relay_scenario(seed: int = 0, ticks: int = 60) -> Scenario:
    """Station A sees a pedestrian; B and C do not. Links A->B, A->C, B->C.

    C therefore receives A's information twice: directly and folded into
    B's tracks.
    """
    loc = (0.1, math.radians(0.2))
    stations = [
        _static(1, "vehicle", 0.0, 0.0, 0.0, loc, 20.0, "tracks"),
        _static(2, "vehicle", 20.0, 0.0, math.pi / 2, loc, 3.0, "tracks"),
        _static(3, "vehicle", 10.0, 20.0, -math.pi / 2, loc, 3.0, "tracks"),
    ]
    peds = [PedestrianSpec(1, (8.0, 6.0), [VelocityStep(0.0, 0.0, 0.0)], 0.0, "target")]
    return Scenario(
        stations=stations,
        pedestrians=peds,
        duration=ticks / 10.0,
        tick_rate=10.0,
        topology=[Link(1, 2), Link(1, 3), Link(2, 3)],
        rng_seed=seed,
        name="relay",
        reference_station=3,
    )
