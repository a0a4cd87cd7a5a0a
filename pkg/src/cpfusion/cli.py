"""``cpfusion`` command-line front end.

Exit codes: 0 success, 1 domain error (for example a malformed payload
under ``cpm inspect`` or a fuzz crash), 2 usage or I/O error. Log verbosity
follows the ``CPFUSION_LOG`` environment variable (``error``, ``info`` or
``debug``; default ``error``). Output directories are filled atomically
per file from a scratch directory, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import cpm as cpm_codec
from .errors import CpmError, ScenarioError
from .sim import build_paper_grid_scenario, load_scenario, run_scenario
from .sim import metrics

log = logging.getLogger("cpfusion")

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("CPFUSION_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def _error_kind(exc: Exception) -> str:
    """``MalformedTruncatedError`` -> ``malformed-truncated``."""
    name = type(exc).__name__.removesuffix("Error")
    out = []
    for ch in name:
        if ch.isupper() and out:
            out.append("-")
        out.append(ch.lower())
    return "".join(out)


def _publish(scratch: Path, out: Path) -> list[str]:
    """Move every file from ``scratch`` into ``out``; returns relative names."""
    names = sorted(str(p.relative_to(scratch)) for p in scratch.rglob("*") if p.is_file())
    for name in names:
        target = out / name
        target.parent.mkdir(parents=True, exist_ok=True)
        os.replace(scratch / name, target)
    return names


def _emit_run(scenario, records, out: Path, *, table: bool, extra: dict) -> metrics.MetricsSummary:
    summary = metrics.summarize(scenario, records)
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".cpfusion-", dir=out.parent))
    try:
        metrics.write_ticks_csv(scratch / "ticks.csv", records)
        metrics.write_summary_csv(scratch / "summary.csv", summary)
        metrics.write_stations_csv(scratch / "stations.csv", summary)
        metrics.write_trace_plotdata(scratch / "plotdata", records)
        if table:
            metrics.write_table_csv(scratch / "table.csv", summary)
        files = sorted(str(p.relative_to(scratch)) for p in scratch.rglob("*") if p.is_file())
        metrics.write_manifest(scratch / "manifest.json", files + ["manifest.json"], extra)
        out.mkdir(parents=True, exist_ok=True)
        _publish(scratch, out)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return summary


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario {args.scenario}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"error: invalid scenario {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        scenario.rng_seed = args.seed
    if args.ticks is not None and args.ticks < 1:
        print("error: --ticks must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    records = run_scenario(scenario, ticks=args.ticks)
    log.info("ran %d ticks in %.2f s", len(records), time.perf_counter() - started)
    extra = {"scenario": scenario.name, "seed": scenario.rng_seed, "ticks": len(records)}
    try:
        summary = _emit_run(scenario, records, Path(args.out), table=False, extra=extra)
    except OSError as exc:
        print(f"error: cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {args.out} ({len(records)} ticks, reference station {summary.reference_station})")
    return EXIT_OK


def _format_table(summary: metrics.MetricsSummary, configuration: str) -> str:
    lines = [
        f"Configuration {configuration}: position std x/y (m) at station {summary.reference_station}",
        f"{'':8s}{'Column 1':>18s}{'Column 2':>18s}{'Column 3':>18s}",
    ]
    for row in metrics.grid_table(summary):
        cells = [f"{row[1 + 2 * c]:.4f}/{row[2 + 2 * c]:.4f}" for c in range(3)]
        lines.append(f"{row[0]:8s}" + "".join(f"{cell:>18s}" for cell in cells))
    return "\n".join(lines)


def cmd_paper_grid(args) -> int:
    configuration = args.config.upper()
    if configuration not in ("A", "B"):
        print(f"error: unknown configuration {args.config!r} (expected A or B)", file=sys.stderr)
        return EXIT_USAGE
    if args.ticks is not None and args.ticks < 1:
        print("error: --ticks must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    scenario = build_paper_grid_scenario(configuration, args.seed)
    records = run_scenario(scenario, ticks=args.ticks)
    extra = {"scenario": scenario.name, "seed": args.seed, "ticks": len(records)}
    try:
        summary = _emit_run(scenario, records, Path(args.out), table=True, extra=extra)
    except OSError as exc:
        print(f"error: cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(_format_table(summary, configuration))
    return EXIT_OK


def cmd_cpm_inspect(args) -> int:
    try:
        payload = Path(args.path).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        message = cpm_codec.decode(payload)
    except CpmError as exc:
        print(f"error: {_error_kind(exc)}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(cpm_codec.describe(message))
    return EXIT_OK


def _mutate(payload: bytes, rng: np.random.Generator) -> bytes:
    data = bytearray(payload)
    choice = int(rng.integers(0, 5))
    if choice == 0 and data:
        for _ in range(int(rng.integers(1, 8))):
            i = int(rng.integers(0, len(data)))
            data[i] ^= 1 << int(rng.integers(0, 8))
    elif choice == 1:
        del data[int(rng.integers(0, len(data) + 1)) :]
    elif choice == 2:
        i = int(rng.integers(0, len(data) + 1))
        data[i:i] = rng.bytes(int(rng.integers(1, 16)))
    elif choice == 3 and data:
        i = int(rng.integers(0, len(data)))
        data[i] = int(rng.integers(0, 256))
    else:
        i = int(rng.integers(0, len(data) + 1))
        j = int(rng.integers(i, len(data) + 1))
        del data[i:j]
    return bytes(data)


def fuzz_decode(cases: int, seed: int = 0) -> dict:
    """Feed ``cases`` hostile payloads to the decoder and tally the outcomes.

    A third are random bytes (half of them behind a valid header prefix);
    the rest are valid messages with bit flips, truncations, insertions or
    deletions. Any exception other than a codec error counts as a crash.
    """
    rng = np.random.default_rng(seed)
    seeds = [cpm_codec.encode(cpm_codec.random_cpm(rng)) for _ in range(32)]
    accepted = rejected = 0
    crashes: list[str] = []
    for k in range(cases):
        if k % 3 == 0:
            payload = rng.bytes(int(rng.integers(0, 200)))
            if rng.random() < 0.5:
                payload = seeds[k % len(seeds)][:22] + payload
        else:
            payload = _mutate(seeds[int(rng.integers(0, len(seeds)))], rng)
        try:
            cpm_codec.decode(payload)
            accepted += 1
        except CpmError:
            rejected += 1
        except Exception as exc:  # noqa: BLE001 - every other failure is a crash
            crashes.append(f"case {k}: {type(exc).__name__}: {exc}")
    return {"cases": cases, "accepted": accepted, "rejected": rejected, "crashes": crashes}


def cmd_cpm_fuzz(args) -> int:
    if args.cases < 0:
        print("error: --cases must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    result = fuzz_decode(args.cases, args.seed)
    elapsed = time.perf_counter() - started
    print(
        f"{result['cases']} cases: {result['accepted']} decoded, "
        f"{result['rejected']} rejected with codec errors ({elapsed:.1f} s)"
    )
    for line in result["crashes"][:20]:
        print(line, file=sys.stderr)
    print(f"{len(result['crashes'])} crashes")
    return EXIT_OK if not result["crashes"] else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpfusion", description="Cooperative perception fusion simulator and CPM tools."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file and write CSV metrics")
    run.add_argument("--scenario", required=True, help="scenario file (.json, .yaml, .yml)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the scenario's rng_seed")
    run.add_argument("--ticks", type=int, help="override the number of ticks")
    run.set_defaults(func=cmd_run)

    grid = sub.add_parser("paper-grid", help="run the 3x3 pedestrian grid experiment")
    grid.add_argument("--config", required=True, help="A (roadside tracks) or B (roadside detections)")
    grid.add_argument("--seed", type=int, default=0)
    grid.add_argument("--out", required=True, help="output directory")
    grid.add_argument("--ticks", type=int, help="override the number of ticks")
    grid.set_defaults(func=cmd_paper_grid)

    cpm = sub.add_parser("cpm", help="codec utilities")
    cpm_sub = cpm.add_subparsers(dest="cpm_command", required=True)
    inspect = cpm_sub.add_parser("inspect", help="decode a payload file and print its containers")
    inspect.add_argument("path")
    inspect.set_defaults(func=cmd_cpm_inspect)
    fuzz = cpm_sub.add_parser("fuzz", help="throw hostile payloads at the decoder")
    fuzz.add_argument("--cases", type=int, default=10_000)
    fuzz.add_argument("--seed", type=int, default=0)
    fuzz.set_defaults(func=cmd_cpm_fuzz)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
