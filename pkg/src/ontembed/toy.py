"""Small synthetic ontologies with compositional labels, for smoke runs and tests.

Labels are built from a fixed 40-token vocabulary so that a child's label
extends its parent's label ("small wild animal" ⊑ "wild animal" ⊑ "animal").
Every grandchild modifier is reused under all three roots, so a held-out
grandchild is made of tokens that were seen in other contexts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import checkpoint as ckpt_io
from .dataset import Dataset, prepare_dataset
from .evaluation import QueryBuilder, RankingReport, evaluate_queries, expected_random_mrr, select_lambda
from .normalize import NfKind
from .ontology import Atomic, Axiom, Concept, Conjunction, Existential, LabelMap, Ontology, concept_key
from .trainer import TrainConfig, train

ROOTS = ("animal", "plant", "tool")
CHILD_MODIFIERS = {
    "animal": ("wild", "farm", "sea"),
    "plant": ("garden", "desert", "water"),
    "tool": ("hand", "power", "cutting"),
}
GRAND_MODIFIERS = ("small", "large", "young", "old", "red", "green", "tiny", "giant", "fast", "slow", "heavy", "light")
ROLE_LABELS = {"eats": "eats", "lives_in": "lives in", "cuts": "cuts", "grows_near": "grows near", "is_stored_in": "is stored in"}
FILLERS = ("lake", "field", "sand", "shed")
TEMPLATE_TOKENS = ("something", "that", "some", "and")

TOY_TOKENS = (
    ROOTS
    + tuple(m for r in ROOTS for m in CHILD_MODIFIERS[r])
    + GRAND_MODIFIERS
    + ("eats", "lives", "in", "cuts", "grows", "near", "is", "stored")
    + FILLERS
    + TEMPLATE_TOKENS
)
assert len(TOY_TOKENS) == len(set(TOY_TOKENS)) == 40


def _c(*words: str) -> Atomic:
    return Atomic(":" + "_".join(words))


def hierarchy(per_child: int = 4, offset: int = 0) -> tuple[list[Axiom], LabelMap]:
    """Three-level tree: 3 roots, 3 children each, ``per_child`` grandchildren per child.

    Grandchild modifiers are assigned cyclically starting at ``offset``.
    """
    axioms: list[Axiom] = []
    labels = LabelMap()
    slot = offset
    for root in ROOTS:
        labels.concept_labels[_c(root).iri] = root
        for mod in CHILD_MODIFIERS[root]:
            child = _c(mod, root)
            labels.concept_labels[child.iri] = f"{mod} {root}"
            axioms.append(Axiom(child, _c(root)))
            for _ in range(per_child):
                g = GRAND_MODIFIERS[slot % len(GRAND_MODIFIERS)]
                slot += 1
                grand = _c(g, mod, root)
                labels.concept_labels[grand.iri] = f"{g} {mod} {root}"
                axioms.append(Axiom(grand, child))
    for iri, label in ROLE_LABELS.items():
        labels.role_labels[":" + iri] = label
    return axioms, labels


def _ex(role: str, filler: Concept) -> Existential:
    return Existential(":" + role, filler)


def toy_ontology() -> tuple[Ontology, LabelMap]:
    """60 axioms: 45 hierarchy edges, 10 existential axioms, 5 conjunction axioms."""
    axioms, labels = hierarchy()
    for f in FILLERS:
        labels.concept_labels[_c(f).iri] = f
    existential = [
        Axiom(_c("farm", "animal"), _ex("eats", _c("garden", "plant"))),
        Axiom(_c("sea", "animal"), _ex("lives_in", _c("lake"))),
        Axiom(_c("wild", "animal"), _ex("lives_in", _c("field"))),
        Axiom(_c("desert", "plant"), _ex("grows_near", _c("sand"))),
        Axiom(_c("power", "tool"), _ex("is_stored_in", _c("shed"))),
        Axiom(_ex("eats", _c("plant")), _c("animal")),
        Axiom(_ex("cuts", _c("plant")), _c("cutting", "tool")),
        Axiom(_ex("lives_in", _c("lake")), _c("sea", "animal")),
        Axiom(_ex("grows_near", _c("lake")), _c("water", "plant")),
        Axiom(_ex("is_stored_in", _c("shed")), _c("tool")),
    ]
    conjunction = [
        Axiom(Conjunction(_c("animal"), _ex("lives_in", _c("lake"))), _c("sea", "animal")),
        Axiom(Conjunction(_c("garden", "plant"), _c("water", "plant")), _c("plant")),
        Axiom(Conjunction(_c("hand", "tool"), _c("power", "tool")), _c("tool")),
        Axiom(Conjunction(_c("farm", "animal"), _c("wild", "animal")), _c("animal")),
        Axiom(Conjunction(_c("desert", "plant"), _c("garden", "plant")), _c("plant")),
    ]
    return Ontology(tuple(axioms + existential + conjunction)), labels


def toy_transfer_pair() -> tuple[tuple[Ontology, LabelMap], tuple[Ontology, LabelMap]]:
    """Source and target trees over the same tokens.

    Roots and children coincide; each child gets a disjoint set of
    grandchildren in the two trees, so every target grandchild is a new
    concept whose words were all seen during source training.
    """
    src_axioms, src_labels = hierarchy(per_child=3, offset=0)
    tgt_axioms, tgt_labels = hierarchy(per_child=3, offset=len(GRAND_MODIFIERS) // 2)
    return (Ontology(tuple(src_axioms)), src_labels), (Ontology(tuple(tgt_axioms)), tgt_labels)


def toy_config(seed: int = 0) -> TrainConfig:
    """Training settings used for the toy smoke run and the transfer demo."""
    return TrainConfig(dim=16, epochs=200, lr=0.2, n_neg=8, seed=seed)


@dataclass
class ToyRun:
    dataset: Dataset
    config: TrainConfig
    lam: float
    report: RankingReport
    random_mrr: float
    epoch_losses: list[float]
    checkpoint: str
    seconds: float

    @property
    def mrr_ratio(self) -> float:
        return self.report.mrr / self.random_mrr

    @property
    def loss_ratio(self) -> float:
        return self.epoch_losses[-1] / self.epoch_losses[0]


def run_toy(seed: int = 0, config: TrainConfig | None = None) -> ToyRun:
    """Split the toy ontology (stratified by normal form), train, choose lambda
    on the validation split and rank the held-out NF1 axioms."""
    onto, labels = toy_ontology()
    cfg = config or toy_config(seed)
    ds = prepare_dataset(onto, labels, seed=seed, stratify=True)
    t0 = time.perf_counter()
    result = train(ds.split.train, labels, ds.defs, cfg)
    seconds = time.perf_counter() - t0
    model = result.model
    pool = sorted(set(ds.signature) | {Atomic(iri) for iri in ds.defs}, key=concept_key)
    builder = QueryBuilder(model.encode_batch, model.spec, labels, ds.defs, pool)
    lam, _ = select_lambda(builder.build_all(ds.split.valid), cfg.lambda_grid)
    queries = builder.build_all([ax for ax in ds.split.test if ax.kind is NfKind.NF1])
    report = evaluate_queries(queries, lam)
    text = ckpt_io.dumps(model, cfg, lam, result.epoch_losses)
    return ToyRun(ds, cfg, lam, report, expected_random_mrr(queries), result.epoch_losses, text, seconds)
