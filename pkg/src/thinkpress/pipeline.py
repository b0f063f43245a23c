"""Thinker -> trace -> truncate -> Answerer flow for one sample.

:func:`assess_response` is the scoring core: given a Thinker response it
extracts and truncates the trace, queries the Answerer with only the
question and the truncated trace, and assembles the reward breakdown. Both
:func:`run_sample` and the reward service go through it.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

from .backend import ChatBackend, ChatRequest, ChatResponse
from .errors import (
    BackendError,
    EmptyRatioSet,
    EmptyThinkBlock,
    InvalidInput,
    MissingThinkBlock,
    SampleFailed,
)
from .metrics import ScorePair, score_against_golds
from .prompts import (
    ANSWER_TEMPLATE,
    ANSWER_TEMPLATE_HASH,
    THINKER_TEMPLATE,
    THINKER_TEMPLATE_HASH,
    fill,
)
from .rewards import (
    DEFAULT_GAMMA,
    BudgetGate,
    HackRules,
    RewardBreakdown,
    RewardWeights,
    budget_reward,
    combined_reward,
    hack_gate,
    utility_reward,
)
from .trace import (
    REFERENCE,
    BudgetSpec,
    ThinkTrace,
    TokenizerSpec,
    actual_ratio,
    compute_budget,
    count_tokens,
    extract_think,
)

DEFAULT_RATIOS = (4, 8)


@dataclass(frozen=True)
class Document:
    title: str
    text: str


@dataclass(frozen=True)
class CompressionSample:
    id: str
    question: str
    documents: tuple[Document, ...]
    golds: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "documents",
            tuple(d if isinstance(d, Document) else Document(**d) for d in self.documents),
        )
        object.__setattr__(self, "golds", tuple(self.golds))
        if not self.question.strip():
            raise InvalidInput(f"sample {self.id!r}: empty question")
        if not self.golds:
            raise InvalidInput(f"sample {self.id!r}: no gold answers")


@dataclass(frozen=True)
class RunSettings:
    """Everything about a run that is not the sample or the backends."""

    gamma: float = DEFAULT_GAMMA
    weights: RewardWeights = field(default_factory=RewardWeights)
    hack_rules: HackRules = field(default_factory=HackRules)
    tokenizer: TokenizerSpec = REFERENCE
    thinker_temperature: float = 0.0
    thinker_max_output_tokens: int = 2048
    answerer_temperature: float = 0.0
    answerer_max_output_tokens: int = 64
    # "wall": measure latencies; "virtual": use backend-reported latencies only
    clock: str = "wall"

    def __post_init__(self):
        if self.clock not in ("wall", "virtual"):
            raise InvalidInput(f"clock must be 'wall' or 'virtual', got {self.clock!r}")


def render_document(doc: Document) -> str:
    title = doc.title.strip()
    if not title.endswith("."):
        title += "."
    return f"Document: {title}\n{doc.text}"


def concat_context(documents: Sequence[Document]) -> tuple[str, int]:
    """Render documents as blank-line separated blocks; returns (text, reference token length).

    No backend has seen the context yet, so its length always comes from the
    reference tokenizer.
    """
    text = "\n\n".join(render_document(d) for d in documents)
    return text, count_tokens(text)


def build_thinker_prompt(question: str, context_text: str, budget: BudgetSpec) -> str:
    return fill(
        THINKER_TEMPLATE,
        {
            "context": context_text,
            "question": question,
            "target_think_len": budget.budget,
            "comp_ratio": budget.ratio,
            "context_token_len": budget.context_tokens,
        },
    )


def build_answer_prompt(question: str, trace_text: str) -> str:
    return fill(ANSWER_TEMPLATE, {"trace": trace_text, "question": question})


def sample_ratio(rng: random.Random, ratios: Sequence[int] = DEFAULT_RATIOS) -> int:
    if not ratios:
        raise EmptyRatioSet("ratio set is empty")
    return rng.choice(sorted(ratios))


@dataclass(frozen=True)
class Assessment:
    trace: ThinkTrace
    answer_prompt: str
    prediction: str
    score: ScorePair
    reward: RewardBreakdown
    answerer_latency_ms: float


def _timed(backend: ChatBackend, req: ChatRequest, clock: str) -> tuple[ChatResponse, float]:
    t0 = time.perf_counter()
    resp = backend.complete(req)
    if clock == "virtual":
        return resp, resp.latency_ms
    return resp, (time.perf_counter() - t0) * 1000.0


def assess_response(
    response_text: str,
    question: str,
    golds: Sequence[str],
    budget: BudgetSpec,
    answerer: ChatBackend,
    settings: RunSettings = RunSettings(),
    reported_trace_tokens: Optional[int] = None,
) -> Assessment:
    """Score one Thinker response end to end (format, utility, budget, hack gate)."""
    try:
        trace = extract_think(response_text, settings.tokenizer, reported_trace_tokens)
        fmt = 1
    except (MissingThinkBlock, EmptyThinkBlock):
        trace, fmt = ThinkTrace.empty(), 0
    if trace.raw_text:
        trace = trace.truncate(budget.budget, settings.tokenizer)

    answer_prompt = build_answer_prompt(question, trace.truncated_text)
    req = ChatRequest.user(
        answerer.model,
        answer_prompt,
        temperature=settings.answerer_temperature,
        max_output_tokens=settings.answerer_max_output_tokens,
    )
    resp, latency = _timed(answerer, req, settings.clock)
    prediction = resp.text.strip()

    score = score_against_golds(prediction, golds)
    reward = combined_reward(
        format=fmt,
        utility=utility_reward(score),
        # scored on the raw length; the Answerer only ever saw the truncated prefix
        budget=budget_reward(trace.raw_tokens, BudgetGate(budget.budget, settings.gamma)),
        gate=hack_gate(trace.raw_text, settings.hack_rules, golds),
        w=settings.weights,
    )
    return Assessment(trace, answer_prompt, prediction, score, reward, latency)


@dataclass(frozen=True)
class CompressionRecord:
    sample_id: str
    ratio_target: int
    budget: BudgetSpec
    thinker_prompt: str
    thinker_response_raw: str
    trace: ThinkTrace
    answerer_prompt: str
    prediction: str
    score: ScorePair
    reward: RewardBreakdown
    actual_ratio: float
    latency_thinker_ms: float
    latency_answerer_ms: float
    latency_e2e_ms: float
    thinker_template_hash: str = THINKER_TEMPLATE_HASH
    answer_template_hash: str = ANSWER_TEMPLATE_HASH
    tokenizer: str = REFERENCE.identifier

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "CompressionRecord":
        d = dict(d)
        d["budget"] = BudgetSpec(**d["budget"])
        d["trace"] = ThinkTrace(**d["trace"])
        d["score"] = ScorePair(**d["score"])
        r = dict(d["reward"])
        r["weights"] = RewardWeights(**r["weights"])
        d["reward"] = RewardBreakdown(**r)
        return cls(**d)


def run_sample(
    sample: CompressionSample,
    ratio: int,
    thinker: ChatBackend,
    answerer: ChatBackend,
    settings: RunSettings = RunSettings(),
) -> CompressionRecord:
    """Compress one sample with the Thinker and score the result.

    A response without a usable think block yields a zero-reward record.
    Backend failures are re-raised as :class:`SampleFailed`.
    """
    t_start = time.perf_counter()
    context_text, context_tokens = concat_context(sample.documents)
    if context_tokens == 0:
        raise InvalidInput(f"sample {sample.id!r} has an empty context")
    budget = compute_budget(context_tokens, ratio)
    prompt = build_thinker_prompt(sample.question, context_text, budget)

    try:
        resp, thinker_ms = _timed(
            thinker,
            ChatRequest.user(
                thinker.model,
                prompt,
                temperature=settings.thinker_temperature,
                max_output_tokens=settings.thinker_max_output_tokens,
            ),
            settings.clock,
        )
        reported = resp.completion_tokens if settings.tokenizer.kind == "backend-reported" else None
        tokenizer = settings.tokenizer
        if tokenizer.kind == "backend-reported" and reported is None:
            tokenizer = REFERENCE
        assessment = assess_response(
            resp.text,
            sample.question,
            sample.golds,
            budget,
            answerer,
            replace(settings, tokenizer=tokenizer),
            reported_trace_tokens=reported,
        )
    except BackendError as e:
        raise SampleFailed(sample.id, e) from e

    if settings.clock == "virtual":
        e2e = thinker_ms + assessment.answerer_latency_ms
    else:
        e2e = (time.perf_counter() - t_start) * 1000.0

    return CompressionRecord(
        sample_id=sample.id,
        ratio_target=ratio,
        budget=budget,
        thinker_prompt=prompt,
        thinker_response_raw=resp.text,
        trace=assessment.trace,
        answerer_prompt=assessment.answer_prompt,
        prediction=assessment.prediction,
        score=assessment.score,
        reward=assessment.reward,
        actual_ratio=actual_ratio(assessment.trace.raw_tokens, context_tokens),
        latency_thinker_ms=thinker_ms,
        latency_answerer_ms=assessment.answerer_latency_ms,
        latency_e2e_ms=e2e,
        tokenizer=settings.tokenizer.identifier,
    )


def run_closed_book(
    sample: CompressionSample, answerer: ChatBackend, settings: RunSettings = RunSettings()
) -> ScorePair:
    """Answer from the question alone (no context, no trace)."""
    req = ChatRequest.user(
        answerer.model,
        build_answer_prompt(sample.question, ""),
        temperature=settings.answerer_temperature,
        max_output_tokens=settings.answerer_max_output_tokens,
    )
    return score_against_golds(answerer.complete(req).text.strip(), sample.golds)
