"""Thinking-trace extraction, token counting, budgets and truncation.

The reference tokenizer splits on whitespace and additionally makes every
punctuation character its own token, so ``"end."`` is two tokens. It is
deterministic and model-agnostic; real runs can switch to token usage
reported by the serving backend via :class:`TokenizerSpec`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal, Optional

from .errors import (
    BackendCountUnavailable,
    EmptyThinkBlock,
    InvalidBudget,
    InvalidInput,
    MissingThinkBlock,
)
from .metrics import is_punct

OPEN_TAG = "<think>"
CLOSE_TAG = "</think>"

_NON_WS = re.compile(r"\S+")


@dataclass(frozen=True)
class TokenizerSpec:
    kind: Literal["reference", "backend-reported"] = "reference"
    identifier: str = "ws-punct-v1"

    def __post_init__(self):
        if self.kind not in ("reference", "backend-reported"):
            raise InvalidInput(f"unknown tokenizer kind {self.kind!r}")


REFERENCE = TokenizerSpec()


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of reference tokens, in order."""
    spans = []
    for m in _NON_WS.finditer(text):
        start, end = m.span()
        run_start = start
        for i in range(start, end):
            if is_punct(text[i]):
                if run_start < i:
                    spans.append((run_start, i))
                spans.append((i, i + 1))
                run_start = i + 1
        if run_start < end:
            spans.append((run_start, end))
    return spans


def count_tokens(
    text: str, tok: TokenizerSpec = REFERENCE, reported: Optional[int] = None
) -> int:
    """Token length of ``text``.

    For a ``backend-reported`` tokenizer the count comes from ``reported``
    (usage data returned by the server); ``text`` is ignored.
    """
    if tok.kind == "backend-reported":
        if reported is None:
            raise BackendCountUnavailable(
                f"tokenizer {tok.identifier!r} needs a backend-reported count"
            )
        return int(reported)
    return len(token_spans(text))


def truncate_to_budget(text: str, budget: int, tok: TokenizerSpec = REFERENCE) -> str:
    """Longest token-prefix of ``text`` holding at most ``budget`` tokens.

    Cuts always fall on reference-token boundaries, whatever ``tok`` says,
    since text cannot be cut on a count the server reported.
    """
    if budget < 1:
        raise InvalidBudget(f"budget must be >= 1, got {budget}")
    spans = token_spans(text)
    if len(spans) <= budget:
        return text
    return text[: spans[budget - 1][1]]


@dataclass(frozen=True)
class ThinkTrace:
    raw_text: str
    raw_tokens: int
    truncated_text: str
    truncated_tokens: int

    @classmethod
    def empty(cls) -> "ThinkTrace":
        return cls("", 0, "", 0)

    def truncate(self, budget: int, tok: TokenizerSpec = REFERENCE) -> "ThinkTrace":
        cut = truncate_to_budget(self.raw_text, budget, tok)
        return ThinkTrace(self.raw_text, self.raw_tokens, cut, count_tokens(cut))


def find_think(response: str) -> str:
    """Trimmed contents of the first closed think block in ``response``."""
    start = response.find(OPEN_TAG)
    if start < 0:
        raise MissingThinkBlock("no <think> tag in response")
    body_start = start + len(OPEN_TAG)
    end = response.find(CLOSE_TAG, body_start)
    if end < 0:
        raise MissingThinkBlock("<think> block is never closed")
    body = response[body_start:end].strip()
    if not body:
        raise EmptyThinkBlock("<think> block is empty")
    return body


def extract_think(
    response: str,
    tok: TokenizerSpec = REFERENCE,
    reported_tokens: Optional[int] = None,
) -> ThinkTrace:
    """Pull the first ``<think>...</think>`` block out of a Thinker response.

    The returned trace is not yet truncated: ``truncated_*`` mirror the raw
    fields until :meth:`ThinkTrace.truncate` is applied.
    """
    body = find_think(response)
    raw_tokens = count_tokens(body, tok, reported_tokens)
    return ThinkTrace(body, raw_tokens, body, count_tokens(body))


def format_reward(response: str) -> int:
    try:
        find_think(response)
    except (MissingThinkBlock, EmptyThinkBlock):
        return 0
    return 1


@dataclass(frozen=True)
class BudgetSpec:
    context_tokens: int
    ratio: int
    budget: int


def compute_budget(context_tokens: int, ratio: int) -> BudgetSpec:
    if context_tokens < 1 or ratio < 1:
        raise InvalidInput(
            f"context_tokens and ratio must be >= 1, got {context_tokens}, {ratio}"
        )
    return BudgetSpec(context_tokens, ratio, max(1, context_tokens // ratio))


def actual_ratio(trace_tokens: int, context_tokens: int) -> float:
    """Trace length over context length (fraction, not percent)."""
    if context_tokens == 0:
        raise ZeroDivisionError("context has zero tokens")
    return trace_tokens / context_tokens

