"""Reward-component ablation on the toy selection task.

Trains the full reward stack and three variants with one component
switched off, over several seeds, and prints final-window statistics:

    python scripts/run_ablation.py --seeds 42 43 44 --steps 500 --out out/ablation

Per-run learning curves are written as CSV when --out is given.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path
from statistics import fmean

from thinkpress.toysim import SimConfig, train

VARIANTS = {
    "full": {},
    "no-hack-gate": {"hack_gate_enabled": False},
    "no-budget": {"budget_reward_enabled": False},
    "no-utility": {"utility_reward_enabled": False},
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    base = SimConfig(steps=args.steps)
    print(f"budget B = {base.budget_tokens} tokens, gamma = {base.gamma}, {args.steps} steps")
    print(f"{'variant':<14}{'utility first':>14}{'utility last':>14}{'hack rate':>11}{'tokens':>9}")
    for name, overrides in VARIANTS.items():
        rows = []
        for seed in args.seeds:
            curves = train(replace(base, seed=seed, **overrides))
            rows.append(
                (
                    curves.window("mean_utility", 0.0, 0.1),
                    curves.window("mean_utility", 0.9, 1.0),
                    curves.window("hack_rate", 0.9, 1.0),
                    curves.window("mean_tokens", 0.8, 1.0),
                )
            )
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                (args.out / f"{name}_seed{seed}.csv").write_text(curves.to_csv(), encoding="utf-8")
        u0, u1, hack, tok = (fmean(col) for col in zip(*rows))
        print(f"{name:<14}{u0:>14.3f}{u1:>14.3f}{hack:>11.3f}{tok:>9.2f}")


if __name__ == "__main__":
    main()
