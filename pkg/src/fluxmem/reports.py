"""Machine-readable run reports: per-frame CSV rows plus a JSON summary.

Per-frame records capture tier occupancy, drop ratio, trigger state and
per-stage microseconds; aggregates are recomputable from the records (a
test enforces this). Timing fields are wall-clock and excluded from
determinism guarantees; zero_timing() supports byte-exact comparisons.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable

FRAME_COLUMNS = [
    "frame",
    "short_frames",
    "mid_entries",
    "mid_tokens",
    "long_entries",
    "long_tokens",
    "held_tokens",
    "ingested_tokens",
    "drop_ratio",
    "trigger_ratio",
    "trigger_threshold",
    "trigger_fired",
    "query",
    "scoring_us",
    "otsu_us",
    "tas_us",
    "sdc_us",
    "ingest_us",
]

BENCH_COLUMNS = [
    "policy",
    "param_kind",
    "param",
    "frames_scored",
    "tokens_total",
    "tokens_kept",
    "drop_ratio",
    # invented diagnostic, not a benchmark score: mean cosine distance from
    # each dropped token to its nearest kept token in the same frame
    "proxy_fidelity_dropped_to_kept",
]


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    short_frames: int
    mid_entries: int
    mid_tokens: int
    long_entries: int
    long_tokens: int
    held_tokens: int
    ingested_tokens: int
    drop_ratio: float
    trigger_ratio: float
    trigger_threshold: float
    trigger_fired: bool
    query: bool
    scoring_us: float
    otsu_us: float
    tas_us: float
    sdc_us: float
    ingest_us: float


@dataclass
class RunReport:
    config: dict
    records: list[FrameRecord] = field(default_factory=list)

    def aggregates(self) -> dict:
        return compute_aggregates(self.records)

    def zero_timing(self) -> "RunReport":
        zeroed = [
            replace(r, scoring_us=0.0, otsu_us=0.0, tas_us=0.0, sdc_us=0.0, ingest_us=0.0)
            for r in self.records
        ]
        return RunReport(config=dict(self.config), records=zeroed)


def compute_aggregates(records: Iterable[FrameRecord]) -> dict:
    records = list(records)
    if not records:
        return {
            "frames": 0,
            "tokens_ingested": 0,
            "tokens_held": 0,
            "final_drop_ratio": 0.0,
            "trigger_fires": 0,
            "queries": 0,
            "total_anchors": 0,
            "mean_ingest_us": 0.0,
            "p95_ingest_us": 0.0,
        }
    last = records[-1]
    latencies = sorted(r.ingest_us for r in records)
    p95_idx = min(len(latencies) - 1, math.ceil(0.95 * len(latencies)) - 1)
    return {
        "frames": len(records),
        "tokens_ingested": last.ingested_tokens,
        "tokens_held": last.held_tokens,
        "final_drop_ratio": last.drop_ratio,
        "trigger_fires": sum(1 for r in records if r.trigger_fired),
        "queries": sum(1 for r in records if r.query),
        "total_anchors": last.long_tokens,
        "mean_ingest_us": sum(latencies) / len(latencies),
        "p95_ingest_us": latencies[p95_idx],
    }


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".10g")
    return str(value)


def write_frames_csv(report: RunReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FRAME_COLUMNS)
        for rec in report.records:
            row = asdict(rec)
            writer.writerow([_format_cell(row[c]) for c in FRAME_COLUMNS])


def write_summary_json(report: RunReport, path) -> None:
    payload = {"config": report.config, "aggregates": report.aggregates()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_bench_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            "# proxy_fidelity_dropped_to_kept is an invented diagnostic: mean cosine "
            "distance from each dropped token to its nearest kept token in the frame\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in BENCH_COLUMNS])
