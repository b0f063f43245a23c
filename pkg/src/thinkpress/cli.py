"""Command-line entry point: compress, eval, serve, simulate, stats."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from .config import HarnessConfig, load_config
from .data import load_jsonl, parse_sample, stats
from .errors import HarnessError
from .pipeline import run_sample, sample_ratio
from .report import evaluate, write_outputs

log = logging.getLogger("thinkpress")


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=_u64, default=None, help="RNG seed (u64)")
    common.add_argument("--ratio", type=_positive, default=None, help="target compression ratio")
    common.add_argument("--backend-thinker", help="backend name from the config")
    common.add_argument("--backend-answerer", help="backend name from the config")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="thinkpress", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", parents=[common], help="compress one sample, print its record")
    p.add_argument("--input", help="JSON file with one sample (default: stdin)")

    p = sub.add_parser("eval", parents=[common], help="evaluate a dataset at one ratio")
    p.add_argument("--dataset", help="dataset JSONL (default: config 'dataset')")

    p = sub.add_parser("serve", parents=[common], help="run the reward HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)

    p = sub.add_parser("simulate", parents=[common], help="run the toy GRPO simulation")
    p.add_argument("--steps", type=_positive, default=500)
    p.add_argument("--no-hack-gate", action="store_true")
    p.add_argument("--no-budget-reward", action="store_true")
    p.add_argument("--no-utility-reward", action="store_true")

    p = sub.add_parser("stats", parents=[common], help="context-length statistics")
    p.add_argument("datasets", nargs="+", help="dataset JSONL files")
    return parser


def _backends(cfg: HarnessConfig, args):
    thinker = args.backend_thinker or cfg.thinker
    answerer = args.backend_answerer or cfg.answerer
    if thinker is None or answerer is None:
        raise UsageError("thinker and answerer backends must be named in the config or on the command line")
    return cfg.make_backend(thinker), cfg.make_backend(answerer)


def _ratio(cfg: HarnessConfig, args) -> int:
    if args.ratio is not None:
        return args.ratio
    return sample_ratio(random.Random(args.seed or 0), cfg.ratios)


def cmd_compress(cfg: HarnessConfig, args) -> int:
    raw = Path(args.input).read_text(encoding="utf-8") if args.input else sys.stdin.read()
    sample = parse_sample(json.loads(raw))
    thinker, answerer = _backends(cfg, args)
    record = run_sample(sample, _ratio(cfg, args), thinker, answerer, cfg.settings)
    sys.stdout.write(record.to_json() + "\n")
    return 0


def cmd_eval(cfg: HarnessConfig, args) -> int:
    path = args.dataset or (str(cfg.resolve(cfg.dataset)) if cfg.dataset else None)
    if path is None:
        raise UsageError("eval needs --dataset or a 'dataset' entry in the config")
    if args.ratio is None:
        raise UsageError("eval needs --ratio")
    ds = load_jsonl(path)
    thinker, answerer = _backends(cfg, args)
    report, records = evaluate(
        ds, args.ratio, thinker, answerer, cfg.settings, cfg.max_concurrency, cfg.raw
    )
    write_outputs(args.out or ".", report, records)
    for row in report.rows:
        log.info("%s ratio=%d n=%d f1=%.4f em=%.4f", row.dataset, row.ratio_target, row.n, row.f1_avg, row.em_avg)
    if report.errors:
        log.warning("%d sample(s) failed; see report.json", len(report.errors))
    return 0


def cmd_serve(cfg: HarnessConfig, args) -> int:
    from .service import serve_rewards

    name = args.backend_answerer or cfg.answerer
    if name is None:
        raise UsageError("serve needs an answerer backend")
    serve_rewards(
        cfg.make_backend(name),
        cfg.settings,
        host=args.host or cfg.serve_host,
        port=args.port or cfg.serve_port,
        max_concurrency=cfg.max_concurrency,
    )
    return 0


def cmd_simulate(cfg: HarnessConfig, args) -> int:
    from .toysim import SimConfig, train

    sim = SimConfig(
        steps=args.steps,
        seed=42 if args.seed is None else args.seed,
        gamma=cfg.settings.gamma,
        weights=cfg.settings.weights,
        hack_rules=cfg.settings.hack_rules,
        hack_gate_enabled=not args.no_hack_gate,
        budget_reward_enabled=not args.no_budget_reward,
        utility_reward_enabled=not args.no_utility_reward,
    )
    text = train(sim).to_csv()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "curves.csv").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_stats(cfg: HarnessConfig, args) -> int:
    rows = []
    for path in args.datasets:
        ds = load_jsonl(path)
        rows.append({"dataset": ds.name, **asdict(stats(ds))})
    sys.stdout.write(json.dumps(rows, indent=2) + "\n")
    return 0


COMMANDS = {
    "compress": cmd_compress,
    "eval": cmd_eval,
    "serve": cmd_serve,
    "simulate": cmd_simulate,
    "stats": cmd_stats,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except UsageError as e:
        print(f"thinkpress {args.command}: {e}", file=sys.stderr)
        return 2
    except (HarnessError, OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        print(f"thinkpress {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
