"""Run configuration: a single JSON document echoed into every report.

Example::

    {
      "backends": {
        "thinker": {"kind": "openai", "base_url": "http://localhost:8000/v1",
                    "model": "Qwen3-8B", "api_key_env": "THINKER_API_KEY"},
        "answerer": {"kind": "mock", "script": "answers.jsonl"}
      },
      "thinker": "thinker",
      "answerer": "answerer",
      "weights": {"lambda_fmt": 0.05, "lambda_utility": 0.95},
      "gamma": 0.2,
      "ratios": [4, 8]
    }

Relative paths (mock scripts, datasets) resolve against the config file's
directory. API keys are only ever read from the environment variable named
by ``api_key_env``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .backend import BackendConfig, ChatBackend, HttpBackend, MockBackend, MockScript
from .errors import InvalidInput
from .pipeline import DEFAULT_RATIOS, RunSettings
from .rewards import DEFAULT_GAMMA, DEFAULT_HACK_PATTERNS, HackRules, RewardWeights
from .trace import TokenizerSpec

_TOP_LEVEL = {
    "backends", "thinker", "answerer", "weights", "gamma", "hack_rules", "ratios",
    "tokenizer", "max_concurrency", "thinker_temperature", "thinker_max_output_tokens",
    "answerer_temperature", "answerer_max_output_tokens", "clock", "dataset", "serve",
}
_FORBIDDEN = {"api_key", "key", "token", "password"}


@dataclass(frozen=True)
class HarnessConfig:
    backends: dict[str, dict] = field(default_factory=dict)
    thinker: Optional[str] = None
    answerer: Optional[str] = None
    settings: RunSettings = field(default_factory=RunSettings)
    ratios: tuple[int, ...] = DEFAULT_RATIOS
    max_concurrency: int = 4
    dataset: Optional[str] = None
    serve_host: str = "127.0.0.1"
    serve_port: int = 8080
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise InvalidInput("max_concurrency must be >= 1")
        if any(r < 1 for r in self.ratios):
            raise InvalidInput("ratios must be positive integers")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def make_backend(self, name: Optional[str]) -> ChatBackend:
        if name is None:
            raise InvalidInput("no backend selected")
        if name not in self.backends:
            raise InvalidInput(f"unknown backend {name!r}; known: {sorted(self.backends)}")
        spec = dict(self.backends[name])
        kind = spec.pop("kind", None)
        if kind == "mock":
            script = MockScript.load(self.resolve(spec["script"]))
            return MockBackend(script=script, name=name, model=spec.get("model", "mock"))
        if kind == "openai":
            return HttpBackend(BackendConfig(**spec), name=name)
        raise InvalidInput(f"backend {name!r}: unknown kind {kind!r}")


def _check_secrets(obj: Any, where: str = "config") -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k.lower() in _FORBIDDEN:
                raise InvalidInput(f"{where}.{k}: secrets must come from an environment variable")
            _check_secrets(v, f"{where}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_secrets(v, f"{where}[{i}]")


def from_dict(raw: dict, base_dir: Path = Path(".")) -> HarnessConfig:
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    _check_secrets(raw)
    rules = raw.get("hack_rules", {})
    settings = RunSettings(
        gamma=float(raw.get("gamma", DEFAULT_GAMMA)),
        weights=RewardWeights(**raw.get("weights", {})),
        hack_rules=HackRules(
            patterns=tuple(rules.get("patterns", DEFAULT_HACK_PATTERNS)),
            check_tail_declaration=bool(rules.get("check_tail_declaration", True)),
        ),
        tokenizer=TokenizerSpec(**raw.get("tokenizer", {})),
        thinker_temperature=float(raw.get("thinker_temperature", 0.0)),
        thinker_max_output_tokens=int(raw.get("thinker_max_output_tokens", 2048)),
        answerer_temperature=float(raw.get("answerer_temperature", 0.0)),
        answerer_max_output_tokens=int(raw.get("answerer_max_output_tokens", 64)),
        clock=raw.get("clock", "wall"),
    )
    serve = raw.get("serve", {})
    return HarnessConfig(
        backends=dict(raw.get("backends", {})),
        thinker=raw.get("thinker"),
        answerer=raw.get("answerer"),
        settings=settings,
        ratios=tuple(int(r) for r in raw.get("ratios", DEFAULT_RATIOS)),
        max_concurrency=int(raw.get("max_concurrency", 4)),
        dataset=raw.get("dataset"),
        serve_host=serve.get("host", "127.0.0.1"),
        serve_port=int(serve.get("port", 8080)),
        base_dir=base_dir,
        raw=raw,
    )


def load_config(path: Optional[str]) -> HarnessConfig:
    if path is None:
        return HarnessConfig()
    p = Path(path)
    with p.open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise InvalidInput("config must be a JSON object")
    return from_dict(raw, p.parent)
