"""Train on the source toy tree and rank the unseen grandchildren of the target tree.

    python scripts/transfer_experiment.py --seeds 0 1 2
"""

import argparse

import torch

from ontembed.evaluation import QueryBuilder, random_mrr, select_lambda, transfer_evaluate
from ontembed.normalize import normalize
from ontembed.ontology import concept_key
from ontembed.toy import toy_config, toy_transfer_pair
from ontembed.trainer import train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    args = ap.parse_args()
    torch.set_num_threads(1)

    (src, src_labels), (tgt, tgt_labels) = toy_transfer_pair()
    src_ax, src_defs = normalize(src)
    tgt_ax, tgt_defs = normalize(tgt)
    src_pool = sorted(src.named_concepts(), key=concept_key)
    tgt_pool = sorted(tgt.named_concepts(), key=concept_key)
    # grandchild -> child edges; the grandchildren do not occur in the source
    test = [ax for ax in tgt_ax if ax.left[0] not in src.named_concepts()]
    baseline = random_mrr(len(tgt_pool) - 1)
    for seed in args.seeds:
        model = train(src_ax, src_labels, src_defs, toy_config(seed)).model
        # lambda is chosen on the source axioms, never on the target
        builder = QueryBuilder(model.encode_batch, model.spec, src_labels, src_defs, src_pool)
        lam, _ = select_lambda(builder.build_all(src_ax), toy_config(seed).lambda_grid)
        rep = transfer_evaluate(model, test, tgt_labels, tgt_defs, tgt_pool, lam)
        print(f"seed {seed}: lambda {lam}, target MRR {rep.mrr:.3f} ({rep.mrr / baseline:.2f}x random), n = {len(test)}")
        print(rep.table())


if __name__ == "__main__":
    main()
