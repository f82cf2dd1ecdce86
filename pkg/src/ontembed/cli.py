"""Command line interface: ``ont <command> ...``."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import torch

from . import checkpoint as ckpt_io
from .dataset import TASKS, Dataset, load_dataset, prepare_dataset, read_normalized, write_dataset
from .encoder import load_external_embeddings
from .evaluation import QueryBuilder, RankingProtocol, evaluate_queries, score, select_lambda, transfer_evaluate
from .normalize import NormalizedAxiom, dump_defs, load_defs, normalize
from .ontology import Atomic, LabelMap, concept_key, load_labels, parse_concept, parse_ontology, serialize_ontology, subconcepts, to_functional
from .reasoner import entailed_nf1
from .trainer import TrainConfig, parse_config, train
from .verbalize import verbalize

log = logging.getLogger("ontembed")


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _labels(path) -> LabelMap:
    return load_labels(_read(path)) if path else LabelMap()


def candidate_pool(ds: Dataset) -> list:
    """Named concepts of the original ontology plus the fresh names."""
    return sorted(set(ds.signature) | {Atomic(iri) for iri in ds.defs}, key=concept_key)


def _parse_lambda(value: str) -> float | None:
    if value == "auto":
        return None
    lam = float(value)
    if not 0.0 <= lam <= 1.0:
        raise click.BadParameter("lambda must be 'auto' or a number in [0, 1]")
    return lam


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except (ValueError, KeyError, OSError, RuntimeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Group)
@click.option("-v", "--verbose", is_flag=True, help="Log training progress.")
def main(verbose: bool) -> None:
    """Ontology embedding in the Poincaré ball."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    torch.set_num_threads(1)


@main.command("normalize")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="Ontology file.")
@click.option("--labels", type=click.Path(exists=True), help="Label TSV (checked for coverage).")
@click.option("--out-axioms", required=True, type=click.Path())
@click.option("--out-defs", required=True, type=click.Path())
def normalize_cmd(in_path, labels, out_axioms, out_defs):
    """Rewrite an ontology into NF1-NF4 axioms plus fresh-name definitions."""
    onto = parse_ontology(_read(in_path))
    axioms, defs = normalize(onto)
    if labels:
        lm = _labels(labels)
        for c in sorted(onto.named_concepts(), key=concept_key):
            verbalize(c, lm)
    Path(out_axioms).write_text(serialize_ontology(ax.to_axiom() for ax in axioms), encoding="utf-8")
    Path(out_defs).write_text(dump_defs(defs), encoding="utf-8")
    click.echo(f"{len(onto)} axioms -> {len(axioms)} normalized axioms, {len(defs)} fresh names")


@main.command("verbalize")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--defs", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def verbalize_cmd(in_path, labels, defs, out):
    """Write ``concept-expression<TAB>verbalization`` for every concept in an ontology."""
    onto = parse_ontology(_read(in_path))
    lm = _labels(labels)
    dm = load_defs(_read(defs)) if defs else {}
    seen, lines = set(), []
    for ax in onto.axioms:
        for side in (ax.sub, ax.sup):
            for c in subconcepts(side):
                if c not in seen:
                    seen.add(c)
                    lines.append(f"{to_functional(c)}\t{verbalize(c, lm, dm)}\n")
    Path(out).write_text("".join(lines), encoding="utf-8")
    click.echo(f"{len(lines)} concepts verbalized")


@main.command("infer-closure")
@click.option("--axioms", required=True, type=click.Path(exists=True), help="Normalized axioms.")
@click.option("--out", required=True, type=click.Path())
@click.option("--signature", type=click.Path(exists=True), help="Restrict to these named concepts (one per line).")
@click.option("--include-asserted", is_flag=True, help="Keep NF1 axioms that are already asserted.")
def infer_closure_cmd(axioms, out, signature, include_asserted):
    """Write every entailed NF1 axiom, one per line."""
    nax = read_normalized(axioms)
    if signature:
        sig = [parse_concept(line) for line in _read(signature).splitlines() if line.strip()]
    else:
        sig = {c for ax in nax for c in (*ax.left, ax.right) if isinstance(c, Atomic)}
    result = entailed_nf1(nax, sig, exclude_asserted=not include_asserted)
    Path(out).write_text(serialize_ontology(ax.to_axiom() for ax in result), encoding="utf-8")
    click.echo(f"{len(result)} entailed NF1 axioms")


@main.command("split")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="Ontology file.")
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Output dataset directory.")
@click.option("--seed", default=0, show_default=True)
@click.option("--n-valid", default=1000, show_default=True, help="Inference-task validation size.")
@click.option("--stratify", is_flag=True, help="Apply the 80/10/10 split to each normal form separately.")
def split_cmd(in_path, labels, out, seed, n_valid, stratify):
    """Normalize an ontology and write prediction and inference splits."""
    ds = prepare_dataset(parse_ontology(_read(in_path)), _labels(labels), seed, n_valid, stratify)
    write_dataset(ds, out)
    click.echo("kind\ttrain\tvalid\ttest")
    for kind, (a, b, c) in ds.split.counts().items():
        click.echo(f"{kind}\t{a}\t{b}\t{c}")
    click.echo(f"total\t{len(ds.split.train)}\t{len(ds.split.valid)}\t{len(ds.split.test)}")
    click.echo(f"inferred NF1\t{len(ds.inference.test)}")


@main.command("train")
@click.option("--axioms", required=True, type=click.Path(exists=True), help="Normalized training axioms.")
@click.option("--defs", type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), help="key=value config file.")
@click.option("--valid", type=click.Path(exists=True), help="Validation axioms for choosing lambda.")
@click.option("--pool", "pool_path", type=click.Path(exists=True), help="Candidate concepts for lambda selection.")
@click.option("--out", required=True, type=click.Path())
@click.option("--loss-log", type=click.Path(), help="Write per-epoch losses as TSV.")
def train_cmd(axioms, defs, labels, config_path, valid, pool_path, out, loss_log):
    """Train concept and role embeddings and write a checkpoint."""
    cfg = parse_config(_read(config_path)) if config_path else TrainConfig()
    nax = read_normalized(axioms)
    lm = _labels(labels)
    dm = load_defs(_read(defs)) if defs else {}
    result = train(nax, lm, dm, cfg)
    lam = None
    if valid:
        model = result.model
        valid_ax = read_normalized(valid)
        if pool_path:
            pool = [parse_concept(line) for line in _read(pool_path).splitlines() if line.strip()]
        else:
            pool = {c for ax in nax + valid_ax for c in (*ax.left, ax.right) if isinstance(c, Atomic)}
        pool = sorted(set(pool) | {Atomic(iri) for iri in dm}, key=concept_key)
        queries = QueryBuilder(model.encode_batch, model.spec, lm, dm, pool).build_all(valid_ax)
        lam, _ = select_lambda(queries, cfg.lambda_grid)
    ckpt_io.save_checkpoint(out, result.model, cfg, lam, result.epoch_losses)
    if loss_log:
        Path(loss_log).write_text(
            "epoch\tloss\n" + "".join(f"{i + 1}\t{v!r}\n" for i, v in enumerate(result.epoch_losses)), encoding="utf-8"
        )
    first = result.epoch_losses[0] if result.epoch_losses else float("nan")
    last = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    click.echo(f"trained {cfg.epochs} epochs: loss {first:.4f} -> {last:.4f}; lambda = {lam}")


def _report(report, out_ranks) -> None:
    click.echo(report.table())
    if out_ranks:
        Path(out_ranks).write_text(report.ranks_tsv(), encoding="utf-8")


@main.command("evaluate")
@click.option("--task", type=click.Choice(TASKS), required=True)
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True), help="Dataset directory written by 'ont split'.")
@click.option("--lambda", "lam_text", default="auto", show_default=True, help="'auto' or a value in [0, 1].")
@click.option("--filtered", is_flag=True, help="Drop other known positives from the candidates.")
@click.option("--external-embeddings", type=click.Path(exists=True), help="Score with precomputed embeddings instead.")
@click.option("--out-ranks", type=click.Path(), help="Per-axiom ranks as TSV.")
def evaluate_cmd(task, ckpt, data, lam_text, filtered, external_embeddings, out_ranks):
    """Rank held-out (prediction) or entailed (inference) axioms."""
    state = ckpt_io.load_checkpoint(ckpt)
    ds = load_dataset(data)
    _, valid, test = ds.task_sets(task)
    encoder = state.model
    if external_embeddings:
        encoder = load_external_embeddings(_read(external_embeddings), curvature=state.model.spec.curvature, eps=state.model.spec.eps)
    protocol = RankingProtocol(filtered=filtered)
    known = set(ds.axioms) | set(ds.inference.test)
    builder = QueryBuilder(encoder.encode_batch, encoder.spec, ds.labels, ds.defs, candidate_pool(ds), protocol, known)
    lam = _parse_lambda(lam_text)
    if lam is None:
        if valid:
            lam, mrrs = select_lambda(builder.build_all(valid), state.config.lambda_grid)
        elif state.lam is not None:
            lam = state.lam
        else:
            raise ValueError("no validation set and no lambda stored in the checkpoint; pass --lambda")
    if not test:
        raise ValueError(f"the {task} test set is empty")
    report = evaluate_queries(builder.build_all(test), lam)
    click.echo(f"task = {task}, lambda = {lam}")
    _report(report, out_ranks)


@main.command("score")
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--sub", "sub_expr", required=True, help="Subclass expression (functional syntax).")
@click.option("--sup", "sup_expr", required=True, help="Superclass expression (functional syntax).")
@click.option("--labels", type=click.Path(exists=True), help="Extra labels (default: labels stored in the checkpoint).")
@click.option("--defs", type=click.Path(exists=True))
@click.option("--lambda", "lam_text", default="auto", show_default=True)
def score_cmd(ckpt, sub_expr, sup_expr, labels, defs, lam_text):
    """Print the plausibility score of SUB ⊑ SUP (higher is more plausible)."""
    state = ckpt_io.load_checkpoint(ckpt)
    model = state.model
    lm = LabelMap(dict(model.labels.concept_labels), dict(model.labels.role_labels))
    if labels:
        extra = _labels(labels)
        lm.concept_labels.update(extra.concept_labels)
        lm.role_labels.update(extra.role_labels)
    dm = dict(model.defs)
    if defs:
        dm.update(load_defs(_read(defs)))
    lam = _parse_lambda(lam_text)
    if lam is None:
        lam = state.lam if state.lam is not None else 0.0
    value = score(parse_concept(sub_expr), parse_concept(sup_expr), model, lam, lm, dm)
    click.echo(f"{value!r}")


@main.command("transfer")
@click.option("--ckpt", required=True, type=click.Path(exists=True), help="Checkpoint trained on the source dataset.")
@click.option("--target", required=True, type=click.Path(exists=True), help="Target dataset directory.")
@click.option("--task", type=click.Choice(TASKS), default="prediction", show_default=True)
@click.option("--lambda", "lam_text", default="auto", show_default=True, help="'auto' uses the checkpoint's lambda.")
@click.option("--filtered", is_flag=True)
@click.option("--out-ranks", type=click.Path())
def transfer_cmd(ckpt, target, task, lam_text, filtered, out_ranks):
    """Evaluate a source-trained checkpoint on a different target dataset."""
    state = ckpt_io.load_checkpoint(ckpt)
    ds = load_dataset(target)
    _, _, test = ds.task_sets(task)
    lam = _parse_lambda(lam_text)
    if lam is None:
        lam = state.lam if state.lam is not None else 0.0
    known = set(ds.axioms) | set(ds.inference.test)
    report = transfer_evaluate(state.model, test, ds.labels, ds.defs, candidate_pool(ds), lam, RankingProtocol(filtered=filtered), known)
    click.echo(f"transfer task = {task}, lambda = {lam}")
    _report(report, out_ranks)


if __name__ == "__main__":
    main()
