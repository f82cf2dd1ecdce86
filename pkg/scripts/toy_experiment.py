"""Train and evaluate on the synthetic toy ontology for a few seeds.

    python scripts/toy_experiment.py --seeds 0 1 2 --out runs/toy
"""

import argparse
import logging
from pathlib import Path

import numpy as np
import torch

from ontembed.toy import run_toy, toy_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--epochs", type=int, default=None, help="Override the toy epoch count.")
    ap.add_argument("--out", type=Path, help="Directory for checkpoints and rank files.")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)
    torch.set_num_threads(1)

    ratios = []
    for seed in args.seeds:
        cfg = toy_config(seed)
        if args.epochs is not None:
            cfg.epochs = args.epochs
        run = run_toy(seed, cfg)
        ratios.append(run.mrr_ratio)
        print(
            f"seed {seed}: lambda {run.lam}, NF1 MRR {run.report.mrr:.3f} ({run.mrr_ratio:.2f}x random), "
            f"loss {run.epoch_losses[0]:.2f} -> {run.epoch_losses[-1]:.2f}, {run.seconds:.1f}s"
        )
        print(run.report.table())
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"toy_seed{seed}.json").write_text(run.checkpoint, encoding="utf-8")
            (args.out / f"toy_seed{seed}_ranks.tsv").write_text(run.report.ranks_tsv(), encoding="utf-8")
    if len(ratios) > 1:
        print(f"MRR / random over {len(ratios)} seeds: mean {np.mean(ratios):.2f}, min {np.min(ratios):.2f}")


if __name__ == "__main__":
    main()
