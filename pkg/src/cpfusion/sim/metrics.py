"""Summary statistics and CSV export for simulation runs.

All CSV files share one schema version, :data:`CSV_SCHEMA_VERSION`, which is
bumped whenever a column is added, removed or renamed. The column lists
below are the documented contract; :func:`write_manifest` records them next
to the data.

``ticks.csv``
    One row per station, tick and reported track.
``summary.csv``
    One row per pedestrian: steady-state position std at the reference
    station.
``stations.csv``
    One row per station: mean NEES and mean tr(Sigma_xyt) over the window.
``plotdata/trace_station_<id>.csv``
    tr(Sigma_xyt) against time for every track of one station.
``table.csv``
    Grid runs only: the nine stds arranged as rows by columns.

Positions are in the reporting station's body frame. Floats are written
with nine significant digits, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .runner import TickRecord
from .scenario import Scenario

CSV_SCHEMA_VERSION = 1

TICK_COLUMNS = (
    "tick", "time", "station_id", "local_id", "weight", "x", "y", "vx", "vy",
    "var_x", "var_y", "cov_xy", "trace_xyt", "truth_id", "position_error", "nees",
)
SUMMARY_COLUMNS = ("pedestrian_id", "label", "std_x", "std_y", "samples")
STATION_COLUMNS = ("station_id", "mean_nees", "nees_samples", "mean_trace_xyt")
TRACE_COLUMNS = ("tick", "time", "local_id", "truth_id", "trace_xyt")
TABLE_COLUMNS = (
    "row", "col1_std_x", "col1_std_y", "col2_std_x", "col2_std_y", "col3_std_x", "col3_std_y",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return f"{value:.9g}"


@dataclass
class MetricsSummary:
    """Steady-state figures of one run.

    ``pedestrian_std`` maps pedestrian id to the mean reported ``(std_x,
    std_y)`` of the reference station's track over the steady-state window
    (NaN when the pedestrian was never tracked there). ``station_nees`` is
    the mean two-dimensional position NEES of each station over the same
    window. ``trace_series`` holds, per station, the mean tr(Sigma_xyt) over
    its truth-associated tracks at every tick (NaN for ticks without one).
    """

    reference_station: int
    window_start: int
    pedestrian_std: dict[int, tuple[float, float]]
    pedestrian_samples: dict[int, int]
    labels: dict[int, str]
    station_nees: dict[int, float]
    station_nees_samples: dict[int, int]
    trace_series: dict[int, np.ndarray] = field(default_factory=dict)

    def column_means(self, columns: Sequence[Sequence[int]]) -> list[float]:
        """Mean of ``(std_x + std_y) / 2`` over each group of pedestrian ids."""
        out = []
        for ids in columns:
            vals = [0.5 * (self.pedestrian_std[p][0] + self.pedestrian_std[p][1]) for p in ids]
            out.append(float(np.mean(vals)))
        return out


def summarize(scenario: Scenario, records: Sequence[TickRecord]) -> MetricsSummary:
    """Reduce tick records to a :class:`MetricsSummary`."""
    ref = scenario.reference_id
    start = scenario.steady_state_tick(len(records))
    window = records[start:]
    ped_ids = [p.pedestrian_id for p in scenario.pedestrians]
    std_sum = {p: np.zeros(2) for p in ped_ids}
    count = {p: 0 for p in ped_ids}
    nees_sum: dict[int, float] = {s.station_id: 0.0 for s in scenario.stations}
    nees_count: dict[int, int] = {s.station_id: 0 for s in scenario.stations}
    for rec in window:
        for st in rec.stations:
            for tr in st.tracks:
                if tr.truth_id is None:
                    continue
                if math.isfinite(tr.nees):
                    nees_sum[st.station_id] += tr.nees
                    nees_count[st.station_id] += 1
                if st.station_id == ref:
                    std_sum[tr.truth_id] += np.sqrt(np.diag(tr.cov)[:2])
                    count[tr.truth_id] += 1
    pedestrian_std = {}
    for p in ped_ids:
        if count[p]:
            sx, sy = std_sum[p] / count[p]
            pedestrian_std[p] = (float(sx), float(sy))
        else:
            pedestrian_std[p] = (math.nan, math.nan)
    station_nees = {
        s: (nees_sum[s] / nees_count[s] if nees_count[s] else math.nan) for s in nees_sum
    }
    series = {}
    for s in nees_sum:
        values = np.full(len(records), math.nan)
        for k, rec in enumerate(records):
            traces = [t.trace_xyt for t in rec.station(s).tracks if t.truth_id is not None]
            if traces:
                values[k] = float(np.mean(traces))
        series[s] = values
    return MetricsSummary(
        reference_station=ref,
        window_start=start,
        pedestrian_std=pedestrian_std,
        pedestrian_samples=count,
        labels={p.pedestrian_id: p.label for p in scenario.pedestrians},
        station_nees=station_nees,
        station_nees_samples=nees_count,
        trace_series=series,
    )


def _write(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def write_ticks_csv(path: Path, records: Sequence[TickRecord]) -> None:
    def rows():
        for rec in records:
            for st in rec.stations:
                for t in st.tracks:
                    yield (
                        rec.tick, rec.time, st.station_id, t.local_id, t.weight,
                        *t.mean, t.cov[0, 0], t.cov[1, 1], t.cov[0, 1], t.trace_xyt,
                        t.truth_id, t.position_error, t.nees,
                    )

    _write(path, TICK_COLUMNS, rows())


def write_summary_csv(path: Path, summary: MetricsSummary) -> None:
    rows = (
        (p, summary.labels.get(p, ""), *summary.pedestrian_std[p], summary.pedestrian_samples[p])
        for p in sorted(summary.pedestrian_std)
    )
    _write(path, SUMMARY_COLUMNS, rows)


def write_stations_csv(path: Path, summary: MetricsSummary) -> None:
    rows = []
    for s in sorted(summary.station_nees):
        trace = summary.trace_series[s][summary.window_start:]
        finite = trace[np.isfinite(trace)]
        rows.append(
            (
                s,
                summary.station_nees[s],
                summary.station_nees_samples[s],
                float(finite.mean()) if finite.size else math.nan,
            )
        )
    _write(path, STATION_COLUMNS, rows)


def write_trace_plotdata(directory: Path, records: Sequence[TickRecord]) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    station_ids = sorted({st.station_id for rec in records for st in rec.stations})
    paths = []
    for sid in station_ids:
        path = directory / f"trace_station_{sid}.csv"
        rows = (
            (rec.tick, rec.time, t.local_id, t.truth_id, t.trace_xyt)
            for rec in records
            for t in rec.station(sid).tracks
        )
        _write(path, TRACE_COLUMNS, rows)
        paths.append(path)
    return paths


def grid_table(summary: MetricsSummary) -> list[tuple]:
    """Rows ``(label, c1x, c1y, c2x, c2y, c3x, c3y)`` for pedestrian ids 1..9."""
    rows = []
    for r in range(3):
        values = []
        for c in range(3):
            values.extend(summary.pedestrian_std[r * 3 + c + 1])
        rows.append((f"row {r + 1}", *values))
    return rows


def write_table_csv(path: Path, summary: MetricsSummary) -> None:
    _write(path, TABLE_COLUMNS, grid_table(summary))


def write_manifest(path: Path, files: Sequence[str], extra: dict | None = None) -> None:
    columns = {
        "ticks.csv": TICK_COLUMNS,
        "summary.csv": SUMMARY_COLUMNS,
        "stations.csv": STATION_COLUMNS,
        "plotdata/trace_station_<id>.csv": TRACE_COLUMNS,
        "table.csv": TABLE_COLUMNS,
    }
    manifest = {
        "schema_version": CSV_SCHEMA_VERSION,
        "files": sorted(files),
        "columns": {k: list(v) for k, v in columns.items()},
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
