from __future__ import annotations

import random
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import answer_from_trace
from thinkpress.backend import MockBackend
from thinkpress.errors import EmptyRatioSet, HttpStatus, InvalidInput, SampleFailed
from thinkpress.pipeline import (
    CompressionRecord,
    CompressionSample,
    Document,
    RunSettings,
    build_answer_prompt,
    build_thinker_prompt,
    concat_context,
    run_closed_book,
    run_sample,
    sample_ratio,
)
from thinkpress.prompts import ANSWER_TEMPLATE_HASH, THINKER_TEMPLATE_HASH, fill
from thinkpress.trace import BudgetSpec, TokenizerSpec, compute_budget, count_tokens

PINNED = RunSettings(clock="virtual")
GOOD_TRACE = "<think>Warner Music Group owns Otto's label.</think>"


def test_thinker_prompt_budget_lines():
    text = build_thinker_prompt("Q", "X", BudgetSpec(400, 4, 100))
    lines = text.splitlines()
    assert "- Maximum <think> length: 100 tokens." in lines
    assert "- Compression ratio: 4x from the original 400 context tokens." in lines
    assert "Context: X" in lines and "Information Need: Q" in lines
    assert text.startswith("You are a query-conditioned context compressor.")
    for slot in ("{context}", "{question}", "{target_think_len}", "{comp_ratio}", "{context_token_len}"):
        assert slot not in text


def test_thinker_prompt_empty_context():
    text = build_thinker_prompt("Q", "", BudgetSpec(4, 4, 1))
    assert "Context: \n" in text
    assert "{context}" not in text


def test_fill_is_single_pass():
    # document text that happens to look like a slot must survive verbatim
    out = build_thinker_prompt("real question", "see {question} here", BudgetSpec(8, 4, 2))
    assert "see {question} here" in out
    with pytest.raises(KeyError):
        fill("{a} {b}", {"a": 1})


def test_answer_prompt_exact():
    assert build_answer_prompt("Who?", "trace text") == (
        "Answer the question based only on the following context.\n"
        "Context: trace text\nQuestion: Who?\nAnswer:"
    )
    p = build_answer_prompt("Who?", "")
    assert "Context: \n" in p


words = st.text(alphabet="abcdefghij ", min_size=1, max_size=30).map(str.strip).filter(bool)


@given(words, words)
def test_answer_prompt_contains_parts_once(q, trace):
    q, trace = f"<<{q}>>", f"[[{trace}]]"
    p = build_answer_prompt(q, trace)
    assert p.count(q) == 1
    assert p.count(trace) == 1


def test_concat_context_shapes():
    docs = [Document("13 at a Table.", "A 2004 film."), Document("Other", "Body text.")]
    text, L = concat_context(docs)
    assert text == "Document: 13 at a Table.\nA 2004 film.\n\nDocument: Other.\nBody text."
    assert text.count("\n\n") == 1
    assert L == count_tokens(text)
    assert concat_context([]) == ("", 0)


def test_sample_ratio():
    rng = random.Random(0)
    assert all(sample_ratio(rng) in (4, 8) for _ in range(100))
    assert {sample_ratio(rng, [4]) for _ in range(50)} == {4}
    with pytest.raises(EmptyRatioSet):
        sample_ratio(rng, [])


def test_sample_ratio_uniform_within_3_sigma():
    rng = random.Random(1234)
    n = 10_000
    fours = sum(sample_ratio(rng) == 4 for _ in range(n))
    sigma = (n * 0.25) ** 0.5
    assert abs(fours - n / 2) <= 3 * sigma


def test_perfect_run_scores_one(sample, seq_backend):
    thinker = seq_backend(GOOD_TRACE)
    answerer = seq_backend("Warner Music Group")
    rec = run_sample(sample, 4, thinker, answerer, PINNED)
    assert rec.reward.total == pytest.approx(1.0, abs=1e-12)
    assert rec.score.em == 1 and rec.score.f1 == 1.0
    assert rec.reward.format == 1 and rec.reward.hack_gate == 1
    assert rec.thinker_template_hash == THINKER_TEMPLATE_HASH
    assert rec.answer_template_hash == ANSWER_TEMPLATE_HASH


def test_missing_think_block_zero_record(sample, seq_backend):
    answerer = seq_backend("unknown")
    rec = run_sample(sample, 4, seq_backend("Warner Music Group"), answerer, PINNED)
    assert rec.reward.format == 0
    assert rec.trace.raw_text == "" and rec.trace.raw_tokens == 0
    assert rec.reward.budget == 0.0
    assert rec.reward.total == 0.0
    # the Answerer is still consulted, with an empty context slot
    assert "Context: \n" in answerer.requests[0].messages[-1].content


def test_overlong_trace_budget_zero_but_prefix_answered(sample, seq_backend):
    _, L = concat_context(sample.documents)
    budget = compute_budget(L, 4).budget
    words = [f"w{i}" for i in range(3 * budget)]
    answerer = MockBackend(responder=answer_from_trace)
    rec = run_sample(sample, 4, seq_backend(f"<think>{' '.join(words)}</think>"), answerer, PINNED)
    assert rec.trace.raw_tokens == 3 * budget
    assert rec.reward.budget == 0.0
    assert rec.trace.truncated_tokens == budget
    assert rec.trace.truncated_text == " ".join(words[:budget])
    sent = answerer.requests[0].messages[-1].content
    assert " ".join(words[:budget]) in sent
    assert words[budget] not in sent.split()


def test_answerer_never_sees_documents(sample, seq_backend):
    answerer = seq_backend("Warner Music Group")
    run_sample(sample, 4, seq_backend("<think>label owned by a big group</think>"), answerer, PINNED)
    body = str(answerer.requests[0].body())
    for doc in sample.documents:
        assert doc.text not in body
        for sentence in doc.text.split(". "):
            assert sentence not in body


def test_record_invariants(sample, seq_backend):
    rec = run_sample(sample, 8, seq_backend(GOOD_TRACE), seq_backend("Warner"), RunSettings())
    _, L = concat_context(sample.documents)
    assert rec.actual_ratio == rec.trace.raw_tokens / L
    assert rec.trace.truncated_tokens <= rec.budget.budget
    assert rec.latency_e2e_ms >= rec.latency_thinker_ms + rec.latency_answerer_ms - 1.0
    assert rec.budget == compute_budget(L, 8)


def test_golden_record_is_byte_identical(sample, seq_backend):
    runs = [
        run_sample(sample, 4, seq_backend(GOOD_TRACE), seq_backend("Warner Music Group"), PINNED).to_json()
        for _ in range(3)
    ]
    assert runs[0] == runs[1] == runs[2]
    assert CompressionRecord.from_dict(__import__("json").loads(runs[0])).to_json() == runs[0]


def test_backend_failure_carries_sample_id(sample, seq_backend):
    class Broken(MockBackend):
        def complete(self, req):
            raise HttpStatus(503, "down")

    with pytest.raises(SampleFailed) as info:
        run_sample(sample, 4, Broken(responder=str), seq_backend("x"), PINNED)
    assert info.value.sample_id == "s1"
    assert isinstance(info.value.cause, HttpStatus)


def test_empty_context_rejected(seq_backend):
    s = CompressionSample("e", "q?", (), ("a",))
    with pytest.raises(InvalidInput):
        run_sample(s, 4, seq_backend(GOOD_TRACE), seq_backend("a"), PINNED)


def test_closed_book(sample, seq_backend):
    answerer = seq_backend("Warner Music Group")
    assert run_closed_book(sample, answerer).em == 1
    assert "Context: \n" in answerer.requests[0].messages[-1].content


def test_backend_reported_tokenizer(sample):
    from thinkpress.backend import ChatResponse

    class Counting(MockBackend):
        def complete(self, req):
            return ChatResponse(GOOD_TRACE, 10, 5, 1.0)

    settings = replace(PINNED, tokenizer=TokenizerSpec("backend-reported", "model-x"))
    rec = run_sample(sample, 4, Counting(responder=str), MockBackend(responder=lambda r: "Warner"), settings)
    assert rec.trace.raw_tokens == 5
    assert rec.tokenizer == "model-x"


def test_sample_validation():
    with pytest.raises(InvalidInput):
        CompressionSample("x", "  ", (), ("a",))
    with pytest.raises(InvalidInput):
        CompressionSample("x", "q", (), ())
    s = CompressionSample("x", "q", ({"title": "t", "text": "b"},), ["a"])
    assert s.documents == (Document("t", "b"),)
