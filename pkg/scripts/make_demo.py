"""Regenerate the offline demo bundle in configs/demo/.

The bundle is a small canonical-format dataset plus keyed mock scripts for
the Thinker and the Answerer, so `thinkpress compress` and `thinkpress eval`
run end to end without a model server:

    python scripts/make_demo.py
    thinkpress eval --config configs/demo/demo.json --ratio 4 --out out/demo
"""

from __future__ import annotations

import json
from pathlib import Path

from thinkpress.backend import ChatRequest, message_digest
from thinkpress.data import Dataset, parse_sample, save_jsonl
from thinkpress.pipeline import RunSettings, build_answer_prompt, build_thinker_prompt, concat_context
from thinkpress.trace import compute_budget, extract_think

OUT = Path(__file__).resolve().parent.parent / "configs" / "demo"
RATIOS = (4, 8)

ROWS = [
    {
        "id": "demo-1",
        "question": "Which group owns the record label that released Shake What God Gave Ya?",
        "context": [
            {
                "title": "Shake What God Gave Ya",
                "text": "Shake What God Gave Ya is the fourth studio album by American country music "
                "singer James Otto. It was released on September 14, 2010 through Warner Bros. "
                "Nashville and produced by Otto together with a small team of session players. "
                "The album includes the single Groovy Little Summer Song, which reached the top "
                "thirty of the country charts that year.",
            },
            {
                "title": "Warner Bros. Nashville.",
                "text": "Warner Bros. Nashville is an American record label based in Nashville, "
                "Tennessee. It is a division of Warner Music Group and specializes in country "
                "music. The label was founded in the early 1980s and has released records by "
                "many well known artists.",
            },
        ],
        "answers": ["Warner Music Group"],
        "trace": "Album released via Warner Bros. Nashville, a division of Warner Music Group; label based in Nashville.",
        "prediction": "Warner Music Group",
    },
    {
        "id": "demo-2",
        "question": "In which city was the director of 13 at a Table born?",
        "context": [
            {
                "title": "13 at a Table.",
                "text": "13 at a Table is a 2004 television film directed by Mark Griffiths. The story "
                "follows a family reunion dinner where an unexpected guest arrives and changes the "
                "evening for everyone. It aired on a cable network during the holiday season.",
            },
            {
                "title": "Mark Griffiths",
                "text": "Mark Griffiths is an American film and television director. He was born in "
                "Tulsa, Oklahoma, and began his career making low budget comedies before moving on "
                "to family films for television.",
            },
        ],
        "answers": ["Tulsa", "Tulsa, Oklahoma"],
        "trace": "Film directed by Mark Griffiths; Griffiths born in Tulsa, Oklahoma; director of TV family films.",
        "prediction": "Tulsa, Oklahoma",
    },
    {
        "id": "demo-3",
        "question": "What year was the company that makes the Model Q scooter founded?",
        "context": [
            {
                "title": "Model Q",
                "text": "The Model Q is an electric scooter produced by Brightway Motors. It has a "
                "range of about forty kilometres and a top speed of twenty five kilometres per "
                "hour. Reviewers praised its folding frame but criticised the small battery.",
            },
            {
                "title": "Brightway Motors",
                "text": "Brightway Motors is a manufacturer of light electric vehicles. The company "
                "was founded in 2011 by two engineers in Lyon and moved its headquarters to Turin "
                "in 2016 after a merger with a parts supplier.",
            },
        ],
        "answers": ["2011"],
        # deliberately discloses the answer so the demo report shows a hack
        "trace": "Model Q made by Brightway Motors, a Lyon firm. The answer is 2011.",
        "prediction": "2011",
    },
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    settings = RunSettings(clock="virtual")
    samples = [parse_sample({k: r[k] for k in ("id", "question", "context", "answers")}) for r in ROWS]
    save_jsonl(Dataset("demo", samples), OUT / "demo.jsonl")

    thinker, answerer = {}, {}
    for row, sample in zip(ROWS, samples):
        context_text, L = concat_context(sample.documents)
        response = f"<think>{row['trace']}</think>"
        for ratio in RATIOS:
            budget = compute_budget(L, ratio)
            prompt = build_thinker_prompt(sample.question, context_text, budget)
            thinker[message_digest(ChatRequest.user("m", prompt).messages)] = response
            trace = extract_think(response).truncate(budget.budget)
            answer_prompt = build_answer_prompt(sample.question, trace.truncated_text)
            answerer[message_digest(ChatRequest.user("m", answer_prompt).messages)] = row["prediction"]
        closed = build_answer_prompt(sample.question, "")
        answerer[message_digest(ChatRequest.user("m", closed).messages)] = "unknown"

    for name, table in (("thinker.jsonl", thinker), ("answerer.jsonl", answerer)):
        with (OUT / name).open("w", encoding="utf-8") as fh:
            for key in sorted(table):
                fh.write(json.dumps({"key": key, "text": table[key]}) + "\n")

    (OUT / "sample.json").write_text(
        json.dumps({k: ROWS[0][k] for k in ("id", "question", "context", "answers")}, indent=2) + "\n",
        encoding="utf-8",
    )
    config = {
        "backends": {
            "mock-thinker": {"kind": "mock", "script": "thinker.jsonl"},
            "mock-answerer": {"kind": "mock", "script": "answerer.jsonl"},
        },
        "thinker": "mock-thinker",
        "answerer": "mock-answerer",
        "weights": {"lambda_fmt": settings.weights.lambda_fmt, "lambda_utility": settings.weights.lambda_utility},
        "gamma": settings.gamma,
        "ratios": list(RATIOS),
        "clock": "virtual",
        "max_concurrency": 4,
        "dataset": "demo.jsonl",
    }
    (OUT / "demo.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"wrote demo bundle to {OUT}")


if __name__ == "__main__":
    main()
