"""Reward stack for a Thinker rollout: budget gate, utility, hack gate, total."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Sequence

from .errors import InvalidInput, OutOfRange
from .metrics import ScorePair, normalize_answer

DEFAULT_GAMMA = 0.2
DEFAULT_HACK_PATTERNS = ("the answer is", "final answer", "answer:")

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class BudgetGate:
    budget: int
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidInput(f"budget must be >= 1, got {self.budget}")
        if not self.gamma > 0:
            raise InvalidInput(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class RewardWeights:
    lambda_fmt: float = 0.05
    lambda_utility: float = 0.95

    def __post_init__(self):
        for name in ("lambda_fmt", "lambda_utility"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInput(f"{name} must lie in [0, 1], got {v}")
        if self.lambda_fmt + self.lambda_utility > 1.0 + 1e-12:
            raise InvalidInput("lambda_fmt + lambda_utility must not exceed 1")


@dataclass(frozen=True)
class HackRules:
    """Phrase patterns (case-insensitive regexes) plus the tail-declaration check."""

    patterns: tuple[str, ...] = DEFAULT_HACK_PATTERNS
    check_tail_declaration: bool = True

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if not self.patterns:
            raise InvalidInput("hack rules need at least one pattern")

    @cached_property
    def compiled(self) -> tuple[re.Pattern, ...]:
        return tuple(re.compile(p, re.IGNORECASE) for p in self.patterns)


@dataclass(frozen=True)
class RewardBreakdown:
    format: int
    utility: float
    budget: float
    hack_gate: int
    total: float
    weights: RewardWeights = field(default_factory=RewardWeights)

    def to_dict(self) -> dict:
        return asdict(self)


def budget_reward(length: int, gate: BudgetGate) -> float:
    """Soft budget gate: full credit up to the budget, linear decay over a gamma-wide zone."""
    b = gate.budget
    if length <= 0 or length >= b * (1 + gate.gamma):
        return 0.0
    if length <= b:
        return 1.0
    return 1.0 - (length - b) / (gate.gamma * b)


def utility_reward(score: ScorePair) -> float:
    return float(max(score.em, score.f1))


def final_sentence(text: str) -> str:
    parts = [p for p in _SENTENCE_END.split(text.strip()) if p.strip()]
    return parts[-1] if parts else ""


def detect_hack(
    trace_text: str, rules: HackRules = HackRules(), golds: Sequence[str] = ()
) -> bool:
    """Flag traces that disclose the answer instead of carrying evidence.

    A gold answer appearing inside evidence is fine; only a phrase pattern
    or a closing sentence that is nothing but the answer counts as a hack.
    """
    if any(p.search(trace_text) for p in rules.compiled):
        return True
    if rules.check_tail_declaration and golds:
        tail = normalize_answer(final_sentence(trace_text))
        if tail and any(tail == normalize_answer(g) for g in golds):
            return True
    return False


def hack_gate(
    trace_text: str, rules: HackRules = HackRules(), golds: Sequence[str] = ()
) -> int:
    return 0 if detect_hack(trace_text, rules, golds) else 1


def combined_reward(
    format: int,
    utility: float,
    budget: float,
    gate: int,
    w: RewardWeights = RewardWeights(),
) -> RewardBreakdown:
    if format not in (0, 1):
        raise OutOfRange(f"format must be 0 or 1, got {format!r}")
    if gate not in (0, 1):
        raise OutOfRange(f"hack gate must be 0 or 1, got {gate!r}")
    if not 0.0 <= utility <= 1.0:
        raise OutOfRange(f"utility must lie in [0, 1], got {utility!r}")
    if not 0.0 <= budget <= 1.0:
        raise OutOfRange(f"budget reward must lie in [0, 1], got {budget!r}")
    total = gate * (w.lambda_fmt * format + w.lambda_utility * utility * budget)
    return RewardBreakdown(format, float(utility), float(budget), gate, total, w)
