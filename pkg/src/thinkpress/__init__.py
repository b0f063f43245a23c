"""Reasoning traces as compressed context: pipeline, rewards, and a toy GRPO sim."""

from .metrics import ScorePair, exact_match, normalize_answer, score_against_golds, token_f1
from .pipeline import CompressionRecord, CompressionSample, Document, RunSettings, run_sample
from .rewards import (
    BudgetGate,
    HackRules,
    RewardBreakdown,
    RewardWeights,
    budget_reward,
    combined_reward,
    detect_hack,
)
from .trace import BudgetSpec, ThinkTrace, TokenizerSpec, compute_budget, count_tokens

__version__ = "0.1.0"
