"""Answer normalization and EM / token-F1 scoring."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import EmptyGoldList

ARTICLES = frozenset({"a", "an", "the"})


@lru_cache(maxsize=65536)
def is_punct(ch: str) -> bool:
    """True for any character in a Unicode punctuation category (Pc, Pd, Ps, ...)."""
    return unicodedata.category(ch).startswith("P")


def normalize_answer(text: str) -> list[str]:
    """Lowercase, drop punctuation characters, split on whitespace, drop articles."""
    stripped = "".join(ch for ch in text.lower() if not is_punct(ch))
    return [tok for tok in stripped.split() if tok not in ARTICLES]


def exact_match(pred: str, gold: str) -> int:
    return int(normalize_answer(pred) == normalize_answer(gold))


def token_f1(pred: str, gold: str) -> float:
    pred_toks = normalize_answer(pred)
    gold_toks = normalize_answer(gold)
    if not pred_toks and not gold_toks:
        return 1.0
    if not pred_toks or not gold_toks:
        return 0.0
    overlap = sum((Counter(pred_toks) & Counter(gold_toks)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_toks)
    recall = overlap / len(gold_toks)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ScorePair:
    em: int
    f1: float

    def __post_init__(self):
        if self.em not in (0, 1):
            raise ValueError(f"em must be 0 or 1, got {self.em!r}")
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 must lie in [0, 1], got {self.f1!r}")


def score_against_golds(pred: str, golds: Sequence[str]) -> ScorePair:
    """Best EM and best F1 of ``pred`` over all gold aliases (taken independently)."""
    if not golds:
        raise EmptyGoldList("at least one gold answer is required")
    em = max(exact_match(pred, g) for g in golds)
    f1 = max(token_f1(pred, g) for g in golds)
    return ScorePair(em=em, f1=f1)
