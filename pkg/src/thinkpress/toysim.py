"""Desk-scale training simulation for the compression reward stack.

A synthetic fact-extraction task: each instance is a handful of sentences,
one of which answers the query and one of which is a leak (``"ANSWER: x"``).
A Bernoulli sentence-selection policy per instance plays the Thinker, a rule
answerer plays the frozen Answerer, and the full reward stack plus GRPO
advantages drive the updates. The leak makes answer disclosure a cheap
shortcut, so the hack gate has something to suppress.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .grpo import (
    Episode,
    GrpoConfig,
    SelectionPolicy,
    group_advantages,
    policy_gradient_step,
)
from .metrics import score_against_golds
from .rewards import (
    BudgetGate,
    HackRules,
    RewardBreakdown,
    RewardWeights,
    budget_reward,
    combined_reward,
    detect_hack,
    utility_reward,
)
from .trace import count_tokens

UNKNOWN = "unknown"

_SUBJECTS = [
    "Zorvath", "Kelbrin", "Tamsworth", "Orlane", "Vessik", "Marrow", "Quillon",
    "Daveth", "Ysolde", "Brannock", "Corvel", "Ithrin", "Pellam", "Sarnow",
    "Eldric", "Fennick", "Gorwen", "Halvar", "Juneth", "Lorcan",
]
_CITIES = [
    "Kelmora", "Astravel", "Brightwater", "Dunhollow", "Fairhaven", "Greymarsh",
    "Highcliff", "Ironvale", "Lowmere", "Northwatch", "Oakridge", "Redfern",
    "Silverbank", "Thornbury", "Westmarch", "Windholm",
]
_THINGS = ["festival", "market", "regatta", "library", "observatory", "choir"]
_MONTHS = ["March", "April", "June", "August", "October", "December"]


@dataclass(frozen=True)
class SyntheticInstance:
    sentences: tuple[str, ...]
    gold_index: int
    query: str
    gold_answer: str
    leak_index: int

    @property
    def gold_sentence(self) -> str:
        return self.sentences[self.gold_index]

    @property
    def leak_sentence(self) -> str:
        return self.sentences[self.leak_index]

    def trace_text(self, actions) -> str:
        return " ".join(s for s, a in zip(self.sentences, actions) if a)


def synthesize(seed: int, n_distractors: int) -> SyntheticInstance:
    if n_distractors < 0:
        raise ValueError("n_distractors must be >= 0")
    rng = np.random.default_rng(seed)
    subjects = rng.permutation(_SUBJECTS)
    cities = rng.permutation(_CITIES)
    subject, city = str(subjects[0]), str(cities[0])
    gold = f"{subject} was founded in {city} in {int(rng.integers(1700, 1990))}."
    leak = f"ANSWER: {city}"

    distractors = []
    for k in range(n_distractors):
        other = str(subjects[1 + k % (len(subjects) - 1)])
        if rng.random() < 0.5:
            other_city = str(cities[1 + k % (len(cities) - 1)])
            year = int(rng.integers(1700, 1990))
            distractors.append(f"{other} was founded in {other_city} in {year}.")
        else:
            thing = str(rng.choice(_THINGS))
            month = str(rng.choice(_MONTHS))
            distractors.append(f"{other} hosts a yearly {thing} every {month}.")

    n = n_distractors + 2
    gold_index, leak_index = (int(i) for i in rng.choice(n, size=2, replace=False))
    rest = iter(distractors)
    sentences = [
        gold if i == gold_index else leak if i == leak_index else next(rest)
        for i in range(n)
    ]
    return SyntheticInstance(
        sentences=tuple(sentences),
        gold_index=gold_index,
        query=f"Where was {subject} founded?",
        gold_answer=city,
        leak_index=leak_index,
    )


def rule_answerer(instance: SyntheticInstance, trace_text: str) -> str:
    if instance.gold_sentence in trace_text or instance.leak_sentence in trace_text:
        return instance.gold_answer
    return UNKNOWN


@dataclass(frozen=True)
class SimConfig:
    steps: int = 500
    group_size: int = 8
    budget_tokens: int = 10
    gamma: float = 0.2
    weights: RewardWeights = field(default_factory=RewardWeights)
    hack_gate_enabled: bool = True
    budget_reward_enabled: bool = True
    utility_reward_enabled: bool = True
    learning_rate: float = 0.25
    kl_coeff: float = 0.01
    seed: int = 0
    pool_size: int = 8
    n_distractors: int = 4
    hack_rules: HackRules = field(default_factory=HackRules)

    def grpo(self) -> GrpoConfig:
        return GrpoConfig(
            group_size=self.group_size,
            kl_coeff=self.kl_coeff,
            learning_rate=self.learning_rate,
        )


def score_episode(
    instance: SyntheticInstance, actions, cfg: SimConfig
) -> tuple[RewardBreakdown, dict]:
    """Score one selection. Disabled components enter the total as a constant 1.

    The returned info dict always carries the measured values, so curves
    still show utility when the utility reward is switched off.
    """
    text = instance.trace_text(actions)
    tokens = count_tokens(text)
    pred = rule_answerer(instance, text)
    utility = utility_reward(score_against_golds(pred, [instance.gold_answer]))
    budget = budget_reward(tokens, BudgetGate(cfg.budget_tokens, cfg.gamma))
    hacked = detect_hack(text, cfg.hack_rules, [instance.gold_answer])
    breakdown = combined_reward(
        format=1,
        utility=utility if cfg.utility_reward_enabled else 1.0,
        budget=budget if cfg.budget_reward_enabled else 1.0,
        gate=0 if (hacked and cfg.hack_gate_enabled) else 1,
        w=cfg.weights,
    )
    info = {"tokens": tokens, "utility": utility, "budget": budget, "hack": hacked}
    return breakdown, info


def rollout(
    policy: SelectionPolicy,
    instance: SyntheticInstance,
    group_size: int,
    rng: np.random.Generator,
    cfg: Optional[SimConfig] = None,
) -> list[Episode]:
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    cfg = cfg or SimConfig()
    episodes = []
    for _ in range(group_size):
        actions = policy.sample(rng)
        breakdown, info = score_episode(instance, actions, cfg)
        info["reward"] = breakdown
        episodes.append(Episode(actions, policy.log_prob(actions), 0.0, info))
    return episodes


@dataclass
class SimCurves:
    mean_total: list[float] = field(default_factory=list)
    mean_utility: list[float] = field(default_factory=list)
    mean_budget: list[float] = field(default_factory=list)
    hack_rate: list[float] = field(default_factory=list)
    mean_tokens: list[float] = field(default_factory=list)

    CSV_HEADER = ("step", "mean_total", "mean_utility", "mean_budget", "hack_rate", "mean_tokens")

    def __len__(self) -> int:
        return len(self.mean_total)

    def window(self, name: str, start: float, stop: float) -> float:
        """Mean of series ``name`` over the fractional step range [start, stop)."""
        series = getattr(self, name)
        n = len(series)
        lo, hi = int(round(start * n)), int(round(stop * n))
        return float(np.mean(series[lo:max(hi, lo + 1)]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        cols = [getattr(self, f.name) for f in fields(self)]
        for step, row in enumerate(zip(*cols)):
            writer.writerow([step, *(f"{v:.6f}" for v in row)])
        return buf.getvalue()


def train(cfg: SimConfig) -> SimCurves:
    """Run GRPO on the synthetic pool; deterministic given ``cfg``."""
    pool = [synthesize(cfg.seed * 10_007 + i, cfg.n_distractors) for i in range(cfg.pool_size)]
    policies = [SelectionPolicy.uniform(len(inst.sentences)) for inst in pool]
    refs = [p.copy() for p in policies]
    grpo_cfg = cfg.grpo()
    rng = np.random.default_rng(cfg.seed)
    curves = SimCurves()

    for _ in range(cfg.steps):
        infos = []
        for i, inst in enumerate(pool):
            episodes = rollout(policies[i], inst, cfg.group_size, rng, cfg)
            adv = group_advantages([ep.info["reward"].total for ep in episodes])
            for ep, a in zip(episodes, adv):
                ep.advantage = float(a)
            policies[i] = policy_gradient_step(policies[i], episodes, grpo_cfg, refs[i])
            infos.extend(ep.info for ep in episodes)

        curves.mean_total.append(float(np.mean([d["reward"].total for d in infos])))
        curves.mean_utility.append(float(np.mean([d["utility"] for d in infos])))
        curves.mean_budget.append(float(np.mean([d["budget"] for d in infos])))
        curves.hack_rate.append(float(np.mean([d["hack"] for d in infos])))
        curves.mean_tokens.append(float(np.mean([d["tokens"] for d in infos])))
    return curves
