"""Group-relative advantages, KL to a reference policy, and a single policy-gradient step.

The policy here is the toy sentence selector: one independent Bernoulli per
sentence, parameterized by a logit. Its score function and KL gradient are
closed form, which keeps the update exactly checkable by finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    GroupTooSmall,
    InvalidInput,
    LengthMismatch,
    NonFiniteGradient,
    NonFiniteLogProb,
    NonFiniteReward,
)


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    kl_coeff: float = 0.01
    learning_rate: float = 1e-5
    epsilon_std: float = 1e-8
    # recorded for provenance only; the toy trainer does not batch this way
    train_batch_size: int = 128
    ppo_mini_batch_size: int = 64
    micro_batch_size_per_gpu: int = 4

    def __post_init__(self):
        if self.group_size < 2:
            raise GroupTooSmall(f"group_size must be >= 2, got {self.group_size}")
        if self.kl_coeff < 0:
            raise InvalidInput("kl_coeff must be >= 0")
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be > 0")
        if not self.epsilon_std > 0:
            raise InvalidInput("epsilon_std must be > 0")


def group_advantages(rewards: Sequence[float], epsilon_std: float = 1e-8) -> np.ndarray:
    """(r - mean) / (population std + eps); a constant group maps to exact zeros."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise GroupTooSmall(f"need at least 2 rewards, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise NonFiniteReward("rewards must be finite")
    if np.all(r == r[0]):
        return np.zeros_like(r)
    centered = r - r.mean()
    return centered / (r.std() + epsilon_std)


def kl_to_reference(logp_new: Sequence[float], logp_ref: Sequence[float]) -> float:
    """Mean k3 estimate of KL(new || ref) from per-position log-probs."""
    new = np.asarray(logp_new, dtype=np.float64)
    ref = np.asarray(logp_ref, dtype=np.float64)
    if new.shape != ref.shape or new.ndim != 1:
        raise LengthMismatch(f"shapes differ: {new.shape} vs {ref.shape}")
    if new.size == 0:
        raise LengthMismatch("need at least one position")
    if not (np.all(np.isfinite(new)) and np.all(np.isfinite(ref))):
        raise NonFiniteLogProb("log-probs must be finite")
    d = ref - new
    return float(max(0.0, np.mean(np.expm1(d) - d)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


@dataclass
class SelectionPolicy:
    """Independent Bernoulli inclusion per sentence; p_i = sigmoid(logits[i])."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64).copy()

    @classmethod
    def uniform(cls, n: int, logit: float = 0.0) -> "SelectionPolicy":
        return cls(np.full(n, logit, dtype=np.float64))

    @property
    def probs(self) -> np.ndarray:
        return sigmoid(self.logits)

    def log_prob(self, actions: np.ndarray) -> np.ndarray:
        """Per-sentence log-probability of the 0/1 ``actions``."""
        a = np.asarray(actions, dtype=np.float64)
        # log sigmoid(x) = x - softplus(x); log(1 - sigmoid(x)) = -softplus(x)
        return a * self.logits - np.logaddexp(0.0, self.logits)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.logits.shape) < self.probs).astype(np.int8)

    def copy(self) -> "SelectionPolicy":
        return SelectionPolicy(self.logits)


@dataclass
class Episode:
    actions: np.ndarray
    logps: np.ndarray
    advantage: float = 0.0
    info: dict = field(default_factory=dict)


def bernoulli_kl(policy: SelectionPolicy, ref: SelectionPolicy) -> float:
    """Exact KL(policy || ref), summed over sentences."""
    p, q = policy.probs, ref.probs
    lp, lq = policy.logits, ref.logits
    # log p - log q and log(1-p) - log(1-q) via softplus for stability
    log_p = lp - np.logaddexp(0.0, lp)
    log_q = lq - np.logaddexp(0.0, lq)
    log_1p = -np.logaddexp(0.0, lp)
    log_1q = -np.logaddexp(0.0, lq)
    return float(np.sum(p * (log_p - log_q) + (1 - p) * (log_1p - log_1q)))


def surrogate_objective(
    policy: SelectionPolicy,
    episodes: Sequence[Episode],
    kl_coeff: float,
    ref: SelectionPolicy,
) -> float:
    """sum_i A_i log pi(actions_i) - kl_coeff * KL(pi || ref)."""
    score = sum(ep.advantage * float(np.sum(policy.log_prob(ep.actions))) for ep in episodes)
    return score - kl_coeff * bernoulli_kl(policy, ref)


def surrogate_gradient(
    policy: SelectionPolicy,
    episodes: Sequence[Episode],
    kl_coeff: float,
    ref: SelectionPolicy,
) -> np.ndarray:
    """Closed-form gradient of :func:`surrogate_objective` w.r.t. the logits."""
    p = policy.probs
    grad = np.zeros_like(policy.logits)
    for ep in episodes:
        grad += ep.advantage * (np.asarray(ep.actions, dtype=np.float64) - p)
    # d KL / d logit = p (1 - p) (logit - ref_logit)
    grad -= kl_coeff * p * (1 - p) * (policy.logits - ref.logits)
    return grad


def policy_gradient_step(
    policy: SelectionPolicy,
    episodes: Sequence[Episode],
    cfg: GrpoConfig,
    ref: SelectionPolicy,
) -> SelectionPolicy:
    """One ascent step on the surrogate; returns a new policy."""
    grad = surrogate_gradient(policy, episodes, cfg.kl_coeff, ref)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("policy gradient has non-finite entries")
    updated = policy.logits + cfg.learning_rate * grad
    if not np.all(np.isfinite(updated)):
        raise NonFiniteGradient("updated logits are non-finite")
    return SelectionPolicy(updated)
