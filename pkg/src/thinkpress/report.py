"""Batch evaluation, aggregation, and report files."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence, Union

from .backend import ChatBackend
from .data import Dataset
from .errors import EmptyDataset, InvalidInput, SampleFailed
from .pipeline import CompressionRecord, RunSettings, run_sample

log = logging.getLogger(__name__)

CSV_HEADER = ("dataset", "ratio", "n", "f1", "em", "act_ratio", "hack_rate", "fmt_fail", "e2e_ms")


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    ratio_target: int
    n: int
    f1_avg: float
    em_avg: float
    actual_ratio_avg: float
    hack_rate: float
    format_fail_rate: float
    latency_e2e_avg_ms: float

    def csv_fields(self) -> list[str]:
        # act_ratio is written as a percentage; every other rate stays a fraction
        return [
            self.dataset,
            str(self.ratio_target),
            str(self.n),
            f"{self.f1_avg:.4f}",
            f"{self.em_avg:.4f}",
            f"{100 * self.actual_ratio_avg:.4f}",
            f"{self.hack_rate:.4f}",
            f"{self.format_fail_rate:.4f}",
            f"{self.latency_e2e_avg_ms:.3f}",
        ]


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...]
    errors: tuple[dict, ...] = ()
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "errors": list(self.errors),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            rows=tuple(ReportRow(**r) for r in d["rows"]),
            errors=tuple(d.get("errors", ())),
            config=d.get("config", {}),
        )


def aggregate(records: Sequence[CompressionRecord], dataset: str, ratio: int) -> ReportRow:
    if not records:
        raise EmptyDataset("no records to aggregate")
    return ReportRow(
        dataset=dataset,
        ratio_target=ratio,
        n=len(records),
        f1_avg=fmean(r.score.f1 for r in records),
        em_avg=fmean(r.score.em for r in records),
        actual_ratio_avg=fmean(r.actual_ratio for r in records),
        hack_rate=fmean(1 - r.reward.hack_gate for r in records),
        format_fail_rate=fmean(1 - r.reward.format for r in records),
        latency_e2e_avg_ms=fmean(r.latency_e2e_ms for r in records),
    )


def evaluate(
    ds: Dataset,
    ratio: int,
    thinker: ChatBackend,
    answerer: ChatBackend,
    settings: RunSettings = RunSettings(),
    max_concurrency: int = 4,
    config: dict | None = None,
) -> tuple[EvalReport, list[CompressionRecord]]:
    """Run every sample at a fixed ratio with bounded concurrency.

    Per-sample backend failures are collected into ``report.errors`` and
    excluded from the averages. Records come back sorted by sample id.
    """
    if not ds.samples:
        raise EmptyDataset(f"dataset {ds.name!r} is empty")
    if max_concurrency < 1:
        raise InvalidInput("max_concurrency must be >= 1")

    def one(sample):
        try:
            return run_sample(sample, ratio, thinker, answerer, settings)
        except SampleFailed as e:
            log.warning("%s", e)
            return e

    with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
        results = list(pool.map(one, ds.samples))

    records = sorted((r for r in results if isinstance(r, CompressionRecord)), key=lambda r: r.sample_id)
    errors = sorted(
        (
            {"sample_id": e.sample_id, "error": f"{type(e.cause).__name__}: {e.cause}"}
            for e in results
            if isinstance(e, SampleFailed)
        ),
        key=lambda d: d["sample_id"],
    )
    rows = (aggregate(records, ds.name, ratio),) if records else ()
    return EvalReport(rows, tuple(errors), dict(config or {})), records


def emit_report(report: EvalReport, fmt: str, path: Union[str, Path]) -> None:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in report.rows:
                writer.writerow(row.csv_fields())
    elif fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    else:
        raise InvalidInput(f"unknown report format {fmt!r}")


def write_records(records: Iterable[CompressionRecord], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records(path: Union[str, Path]) -> list[CompressionRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [CompressionRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_outputs(out_dir: Union[str, Path], report: EvalReport, records: Sequence[CompressionRecord]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, "csv", out / "report.csv")
    emit_report(report, "json", out / "report.json")
    write_records(records, out / "records.jsonl")
