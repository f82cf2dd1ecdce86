"""Scoring, ranking metrics, dataset splits and lambda selection.

Ranking protocol. For each test axiom one side is replaced by every
candidate from the pool of named concepts:

    NF1  A ⊑ B        corrupt B
    NF2  A1 ⊓ A2 ⊑ B  corrupt B
    NF3  A ⊑ ∃r.B     corrupt the filler B
    NF4  ∃r.B ⊑ A     corrupt A

The rank of the true answer is ``1 + #{candidates scoring >= truth}`` (ties
count against the truth). Rankings are raw by default; ``filtered`` drops
other known positives. ``exclude_trivial`` drops candidates that make the
axiom a tautology (``A ⊑ A`` and ``A1 ⊓ A2 ⊑ Ai``).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import torch

from . import geometry as geo
from .geometry import BallSpec
from .normalize import NfKind, NormalizedAxiom
from .ontology import Concept, Existential, LabelMap, concept_key, is_named
from .reasoner import entailed_nf1, saturate
from .verbalize import verbalize

HITS_AT = (1, 10, 100)


# ---------------------------------------------------------------------------
# scores


def score_values(dist, sub_norm, sup_norm, lam: float):
    """``-(d(C, D) + lam * (|D| - |C|))`` on precomputed distances and norms."""
    return -(dist + lam * (sup_norm - sub_norm))


def score_points(c: torch.Tensor, d: torch.Tensor, lam: float, curvature: float) -> torch.Tensor:
    return score_values(geo.dist(c, d, curvature), geo.hyp_norm(c, curvature), geo.hyp_norm(d, curvature), lam)


def score(sub: Concept, sup: Concept, encoder, lam: float, labels: LabelMap, defs: dict[str, Concept] | None = None) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    with torch.no_grad():
        pts = encoder.encode_batch([verbalize(sub, labels, defs), verbalize(sup, labels, defs)])
    return float(score_points(pts[0], pts[1], lam, encoder.spec.curvature))


# ---------------------------------------------------------------------------
# metrics


@dataclass
class RankingReport:
    ranks: list[int]
    hits: dict[int, float]
    mrr: float
    mr: float
    axioms: list[NormalizedAxiom] = field(default_factory=list, repr=False)

    def percent(self) -> dict[str, float]:
        out = {f"H@{k}": 100.0 * v for k, v in self.hits.items()}
        out["MRR"] = 100.0 * self.mrr
        out["MR"] = self.mr
        return out

    def table(self) -> str:
        cols = self.percent()
        head = "  ".join(f"{k:>8}" for k in cols)
        row = "  ".join(f"{v:8.2f}" for v in cols.values())
        return f"{head}\n{row}\n(n = {len(self.ranks)})"

    def ranks_tsv(self) -> str:
        lines = ["axiom\tkind\trank"]
        for ax, r in zip(self.axioms, self.ranks):
            lines.append(f"{ax}\t{ax.kind.value}\t{r}")
        return "\n".join(lines) + "\n"


def compute_metrics(ranks: Sequence[int], ks: Iterable[int] = HITS_AT) -> RankingReport:
    ranks = [int(r) for r in ranks]
    if not ranks:
        raise ValueError("cannot compute metrics of an empty rank list")
    if min(ranks) < 1:
        raise ValueError("ranks must be >= 1")
    arr = np.asarray(ranks, dtype=np.float64)
    hits = {k: float(np.mean(arr <= k)) for k in ks}
    return RankingReport(ranks, hits, float(np.mean(1.0 / arr)), float(np.mean(arr)))


def random_mrr(pool_size: int) -> float:
    """Expected reciprocal rank of the truth under a uniformly random ordering."""
    return float(np.sum(1.0 / np.arange(1, pool_size + 1)) / pool_size)


# ---------------------------------------------------------------------------
# ranking


@dataclass(frozen=True)
class RankingProtocol:
    filtered: bool = False
    exclude_trivial: bool = True


def rank_from_scores(scores: np.ndarray, truth: int) -> int:
    scores = np.asarray(scores)
    others = np.delete(scores, truth)
    return 1 + int(np.count_nonzero(others >= scores[truth]))


@dataclass
class Query:
    axiom: NormalizedAxiom
    dists: np.ndarray
    cand_norms: np.ndarray
    sub_norm: float
    truth: int

    def scores(self, lam: float) -> np.ndarray:
        return score_values(self.dists, self.sub_norm, self.cand_norms, lam)

    def rank(self, lam: float) -> int:
        return rank_from_scores(self.scores(lam), self.truth)


def _corrupt(ax: NormalizedAxiom, x: Concept) -> NormalizedAxiom:
    # the corrupted side is always ``right`` in NormalizedAxiom's layout
    return NormalizedAxiom(ax.kind, ax.left, x, ax.role)


class QueryBuilder:
    """Precomputes candidate embeddings for ranking test axioms.

    ``encode`` maps a list of texts to an ``(n, dim)`` tensor of ball points.
    """

    def __init__(
        self,
        encode: Callable[[list[str]], torch.Tensor],
        spec: BallSpec,
        labels: LabelMap,
        defs: dict[str, Concept],
        pool: Sequence[Concept],
        protocol: RankingProtocol = RankingProtocol(),
        known: Iterable[NormalizedAxiom] = (),
    ):
        self.encode = encode
        self.spec = spec
        self.labels = labels
        self.defs = defs
        self.pool = list(pool)
        self.pos = {c: i for i, c in enumerate(self.pool)}
        self.protocol = protocol
        self.known = set(known) if protocol.filtered else set()
        self._pool_pts = None
        self._role_pts: dict[str, torch.Tensor] = {}
        self._texts: dict[Concept, str] = {}

    def text(self, c: Concept) -> str:
        t = self._texts.get(c)
        if t is None:
            t = self._texts[c] = verbalize(c, self.labels, self.defs)
        return t

    def _points(self, concepts: Sequence[Concept]) -> torch.Tensor:
        with torch.no_grad():
            return self.encode([self.text(c) for c in concepts])

    def pool_points(self) -> torch.Tensor:
        if self._pool_pts is None:
            self._pool_pts = self._points(self.pool)
        return self._pool_pts

    def role_points(self, role: str) -> torch.Tensor:
        if role not in self._role_pts:
            self._role_pts[role] = self._points([Existential(role, x) for x in self.pool])
        return self._role_pts[role]

    def build(self, ax: NormalizedAxiom) -> Query:
        if not is_named(ax.right):
            raise ValueError(f"true answer of {ax} is not atomic")
        truth = ax.right
        if truth not in self.pos:
            raise ValueError(f"true answer {truth} of {ax} is not in the candidate pool")
        sub = ax.sub
        cands = self.role_points(ax.role) if ax.kind is NfKind.NF3 else self.pool_points()
        keep = np.ones(len(self.pool), dtype=bool)
        if self.protocol.exclude_trivial and ax.kind in (NfKind.NF1, NfKind.NF2):
            for c in ax.left:
                if c in self.pos and c != truth:
                    keep[self.pos[c]] = False
        if self.known:
            for i, x in enumerate(self.pool):
                if x != truth and _corrupt(ax, x) in self.known:
                    keep[i] = False
        idx = np.flatnonzero(keep)
        with torch.no_grad():
            c = self._points([sub])[0]
            sel = cands[torch.from_numpy(idx)]
            curv = self.spec.curvature
            dists = geo.dist(c.unsqueeze(0), sel, curv).numpy()
            norms = geo.hyp_norm(sel, curv).numpy()
            sub_norm = float(geo.hyp_norm(c, curv))
        truth_idx = int(np.searchsorted(idx, self.pos[truth]))
        return Query(ax, dists, norms, sub_norm, truth_idx)

    def build_all(self, axioms: Iterable[NormalizedAxiom]) -> list[Query]:
        return [self.build(ax) for ax in axioms]


def rank_axiom(ax: NormalizedAxiom, builder: QueryBuilder, lam: float) -> int:
    return builder.build(ax).rank(lam)


def evaluate_queries(queries: Sequence[Query], lam: float) -> RankingReport:
    report = compute_metrics([q.rank(lam) for q in queries])
    report.axioms = [q.axiom for q in queries]
    return report


def select_lambda(queries: Sequence[Query], grid: Sequence[float]) -> tuple[float, dict[float, float]]:
    """Grid value with the best validation MRR; ties go to the smaller value."""
    if not queries:
        raise ValueError("lambda selection needs a non-empty validation set")
    mrrs = {float(lam): compute_metrics([q.rank(lam) for q in queries]).mrr for lam in grid}
    best = None
    for lam in sorted(mrrs):
        if best is None or mrrs[lam] > mrrs[best]:
            best = lam
    return best, mrrs


def expected_random_mrr(queries: Sequence[Query]) -> float:
    return float(np.mean([random_mrr(len(q.dists)) for q in queries]))


# ---------------------------------------------------------------------------
# splits


@dataclass
class DatasetSplit:
    train: list[NormalizedAxiom]
    valid: list[NormalizedAxiom]
    test: list[NormalizedAxiom]

    def counts(self) -> dict[str, tuple[int, int, int]]:
        parts = [Counter(ax.kind.value for ax in part) for part in (self.train, self.valid, self.test)]
        return {k.value: tuple(p[k.value] for p in parts) for k in NfKind}


def _split_sizes(n: int) -> tuple[int, int]:
    n_train = (8 * n) // 10
    n_valid = n // 10
    return n_train, n_valid


def split_dataset(axioms: Sequence[NormalizedAxiom], seed: int, stratify: bool = False) -> DatasetSplit:
    """Random 80/10/10 split: floor(0.8n) train, floor(0.1n) valid, rest test.

    With ``stratify`` the sizes are applied to each normal form separately.
    """
    axioms = list(axioms)
    rng = np.random.default_rng(seed)
    groups = [axioms]
    if stratify:
        groups = [[ax for ax in axioms if ax.kind is k] for k in NfKind]
    train, valid, test = [], [], []
    for group in groups:
        order = rng.permutation(len(group))
        n_train, n_valid = _split_sizes(len(group))
        train += [group[i] for i in order[:n_train]]
        valid += [group[i] for i in order[n_train : n_train + n_valid]]
        test += [group[i] for i in order[n_train + n_valid :]]
    return DatasetSplit(train, valid, test)


@dataclass
class InferenceSets:
    train: list[NormalizedAxiom]
    valid: list[NormalizedAxiom]
    test: list[NormalizedAxiom]


def build_inference_sets(
    axioms: Sequence[NormalizedAxiom],
    original_signature: Iterable[Concept],
    seed: int,
    n_valid: int = 1000,
    exclude_asserted: bool = True,
) -> InferenceSets:
    """Train on everything; test on all entailed NF1 over the original
    signature; validate on up to ``n_valid`` of those, sampled without replacement."""
    axioms = list(axioms)
    signature = sorted(set(original_signature), key=concept_key)
    closure = saturate(axioms, signature)
    test = entailed_nf1(axioms, signature, exclude_asserted=exclude_asserted, closure=closure)
    rng = np.random.default_rng(seed)
    if len(test) <= n_valid:
        valid = list(test)
    else:
        valid = [test[i] for i in sorted(rng.choice(len(test), size=n_valid, replace=False))]
    return InferenceSets(axioms, valid, test)


# ---------------------------------------------------------------------------
# transfer


def transfer_evaluate(
    model,
    target_test: Sequence[NormalizedAxiom],
    target_labels: LabelMap,
    target_defs: dict[str, Concept],
    target_pool: Sequence[Concept],
    lam: float,
    protocol: RankingProtocol = RankingProtocol(),
    known: Iterable[NormalizedAxiom] = (),
) -> RankingReport:
    """Rank a target dataset with a source-trained model; no parameters change."""
    builder = QueryBuilder(model.encode_batch, model.spec, target_labels, target_defs, target_pool, protocol, known)
    return evaluate_queries(builder.build_all(target_test), lam)
