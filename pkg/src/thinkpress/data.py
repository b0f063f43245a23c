"""Canonical QA dataset format: loading, validation, statistics, subsampling.

Each line of a dataset file is::

    {"id": str, "question": str, "context": [{"title": str, "text": str}], "answers": [str]}
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable, Union

from .errors import DuplicateId, EmptyDataset, SampleTooLarge, SchemaError
from .pipeline import CompressionSample, Document, concat_context

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Dataset:
    name: str
    samples: tuple[CompressionSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise DuplicateId(s.id)
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class DataStats:
    n_samples: int
    avg_tokens: float
    min_tokens: int
    max_tokens: int


def _require(obj: dict, key: str, kind, line_no: int):
    if key not in obj:
        raise SchemaError(line_no, key, "missing")
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(line_no, key, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def parse_sample(obj, line_no: int = 0) -> CompressionSample:
    if not isinstance(obj, dict):
        raise SchemaError(line_no, "<root>", "expected a JSON object")
    sample_id = _require(obj, "id", str, line_no)
    question = _require(obj, "question", str, line_no)
    if not question.strip():
        raise SchemaError(line_no, "question", "empty")
    docs = []
    for i, d in enumerate(_require(obj, "context", list, line_no)):
        if not isinstance(d, dict):
            raise SchemaError(line_no, f"context[{i}]", "expected an object")
        docs.append(
            Document(
                title=_require(d, "title", str, line_no),
                text=_require(d, "text", str, line_no),
            )
        )
    answers = _require(obj, "answers", list, line_no)
    if not answers:
        raise SchemaError(line_no, "answers", "empty")
    if not all(isinstance(a, str) for a in answers):
        raise SchemaError(line_no, "answers", "every answer must be a string")
    return CompressionSample(sample_id, question, tuple(docs), tuple(answers))


def sample_to_json(s: CompressionSample) -> dict:
    return {
        "id": s.id,
        "question": s.question,
        "context": [{"title": d.title, "text": d.text} for d in s.documents],
        "answers": list(s.golds),
    }


def load_jsonl(path: PathLike, name: str | None = None) -> Dataset:
    """Read and validate a whole dataset file; raises on the first bad line."""
    path = Path(path)
    samples = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(line_no, "<json>", str(e)) from None
            sample = parse_sample(obj, line_no)
            if sample.id in seen:
                raise DuplicateId(sample.id)
            seen.add(sample.id)
            samples.append(sample)
    return Dataset(name or path.stem, tuple(samples))


def save_jsonl(ds: Dataset, path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for s in ds.samples:
            fh.write(json.dumps(sample_to_json(s), ensure_ascii=False) + "\n")


def context_lengths(samples: Iterable[CompressionSample]) -> list[int]:
    return [concat_context(s.documents)[1] for s in samples]


def stats(ds: Dataset) -> DataStats:
    if not ds.samples:
        raise EmptyDataset(f"dataset {ds.name!r} is empty")
    lengths = context_lengths(ds.samples)
    return DataStats(len(lengths), fmean(lengths), min(lengths), max(lengths))


def subsample(ds: Dataset, n: int, seed: int) -> Dataset:
    """Seeded sample of ``n`` items without replacement, in original order."""
    if not 1 <= n <= len(ds):
        raise SampleTooLarge(f"cannot draw {n} samples from {len(ds)}")
    keep = sorted(random.Random(seed).sample(range(len(ds)), n))
    return Dataset(ds.name, tuple(ds.samples[i] for i in keep))
