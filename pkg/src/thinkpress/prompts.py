"""Thinker and Answerer prompt templates."""

from __future__ import annotations

import hashlib
import re
from typing import Mapping

THINKER_TEMPLATE = """\
You are a query-conditioned context compressor. Given the context and current information need, write a high-quality <think> trace that preserves the context information a downstream model needs to locate and use relevant information.

Task Guidelines:

1. Information Selection
   - For information-dense context, extract and summarize information-need-relevant facts, evidence, entities, and relations.
   - For example-based context, identify relevant examples and summarize reusable notes on the underlying pattern, format, criterion, or strategy.
   - For trajectory-level context, preserve the current state, completed work, useful outputs, decisions, errors, failed attempts, and experience.
   - Connect scattered information and reorganize it into a concise, task-useful structure.

2. Think Requirements
   - Keep <think> concise, structured, context-grounded, and relevant to the information need.
   - Prefer compact summaries, relations, reusable criteria, and state updates over context restatement.
   - Use <think> as a compressed trace for downstream use, not as a final-answer field.
   - Do not solve the information need or state a final answer.

3. Output Format Your response should be structured as follows:

<think>
[High-quality compressed context trace for downstream use.]
</think>

Context: {context}

Information Need: {question}

Compression Budget:
- Maximum <think> length: {target_think_len} tokens.
- Compression ratio: {comp_ratio}x from the original {context_token_len} context tokens."""

ANSWER_TEMPLATE = (
    "Answer the question based only on the following context.\n"
    "Context: {trace}\n"
    "Question: {question}\n"
    "Answer:"
)
ANSWER_TEMPLATE_VERSION = "answer-v1"

_SLOT = re.compile(r"\{([a-z_]+)\}")


def template_hash(template: str) -> str:
    return hashlib.sha256(template.encode("utf-8")).hexdigest()[:16]


def fill(template: str, values: Mapping[str, object]) -> str:
    """Substitute ``{slot}`` placeholders in one pass.

    Unlike ``str.format`` this leaves braces in the substituted values alone,
    so a document containing ``{question}`` is not expanded a second time.
    """
    missing = set(_SLOT.findall(template)) - set(values)
    if missing:
        raise KeyError(f"template slots without values: {sorted(missing)}")
    return _SLOT.sub(lambda m: str(values[m.group(1)]), template)


THINKER_TEMPLATE_HASH = template_hash(THINKER_TEMPLATE)
ANSWER_TEMPLATE_HASH = template_hash(ANSWER_TEMPLATE)
