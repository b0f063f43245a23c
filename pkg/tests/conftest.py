from __future__ import annotations

import json
from pathlib import Path

import pytest

from thinkpress.backend import ChatRequest, MockBackend, MockScript
from thinkpress.pipeline import CompressionSample, Document

FIXTURES = Path(__file__).parent / "fixtures"


def answer_from_trace(req: ChatRequest) -> str:
    """Toy Answerer: echoes the first word after 'Context:' or says 'unknown'."""
    prompt = req.messages[-1].content
    context = prompt.split("Context: ", 1)[1].split("\nQuestion:", 1)[0]
    words = context.split()
    return words[0].strip(".,") if words else "unknown"


@pytest.fixture
def sample() -> CompressionSample:
    return CompressionSample(
        id="s1",
        question="Who owns the record label of the Shake What God Gave Ya performer?",
        documents=(
            Document("Shake What God Gave Ya", "Shake What God Gave Ya is an album by James Otto."),
            Document(
                "Warner Bros. Nashville.",
                "Warner Bros. Nashville is an American record label, part of Warner Music Group.",
            ),
        ),
        golds=("Warner Music Group",),
    )


@pytest.fixture
def seq_backend():
    def make(*texts: str, name: str = "mock") -> MockBackend:
        return MockBackend(script=MockScript([{"key": None, "text": t} for t in texts]), name=name)

    return make


@pytest.fixture
def metrics_cases() -> list[dict]:
    with (FIXTURES / "metrics_cases.jsonl").open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]
