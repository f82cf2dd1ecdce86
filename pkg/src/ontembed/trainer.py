"""Role transforms, the hierarchy / role / conjunction losses and the SGD loop."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from torch import nn

from . import geometry as geo
from .encoder import TextEncoder, Vocab
from .geometry import DTYPE, BallSpec, PoincarePoint
from .normalize import NormalizedAxiom
from .ontology import (
    Atomic,
    Axiom,
    Concept,
    Conjunction,
    Existential,
    LabelMap,
    Nominal,
    Ontology,
    collect_subexpressions,
    concept_key,
)
from .verbalize import verbalize, verbalize_role

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass
class TrainConfig:
    alpha: float = 3.0
    beta: float = 0.5
    lr: float = 1e-5
    n_neg: int = 1
    epochs: int = 1
    seed: int = 0
    batch_size: int = 128
    dim: int = 64
    curvature: float = 1.0
    eps: float = 1e-5
    d_tok: int = 32
    init_scale: float = 0.05
    role_loss: bool = True
    conjunction_loss: bool = True
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID

    def __post_init__(self) -> None:
        self.lambda_grid = tuple(float(v) for v in self.lambda_grid)
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("margins alpha and beta must be non-negative")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")
        if self.n_neg < 1:
            raise ValueError("n_neg must be at least 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not self.lambda_grid or not all(0.0 <= v <= 1.0 for v in self.lambda_grid):
            raise ValueError("lambda grid values must lie in [0, 1]")

    @property
    def ball(self) -> BallSpec:
        return BallSpec(self.dim, self.curvature, self.eps)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lambda_grid"] = list(self.lambda_grid)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def _parse_value(raw: str, default):
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(v) for v in raw.replace(",", " ").split())
    return raw


def parse_config(source: str, base: TrainConfig | None = None) -> TrainConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    base = base or TrainConfig()
    values = dataclasses.asdict(base)
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        key, value = key.strip(), value.strip().strip('"')
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value")
        if key not in values:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(value, getattr(base, key))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {key}: {exc}") from None
    return TrainConfig(**values)


# ---------------------------------------------------------------------------
# role transforms


@dataclass(frozen=True)
class RoleTransform:
    theta: np.ndarray
    k: float = 1.0


def apply_role(r: RoleTransform, v: PoincarePoint) -> PoincarePoint:
    theta = torch.as_tensor(np.asarray(r.theta, dtype=np.float64))
    if 2 * theta.shape[-1] != v.spec.dim:
        raise ValueError(f"{theta.shape[-1]} angles do not match dimension {v.spec.dim}")
    out = role_transform(theta, torch.tensor(float(r.k), dtype=DTYPE), v.tensor(), v.spec)
    return PoincarePoint(out.detach().numpy().copy(), v.spec)


def role_transform(theta: torch.Tensor, k: torch.Tensor, v: torch.Tensor, spec: BallSpec) -> torch.Tensor:
    """``f_r(v) = k ⊙ (R(theta) v)``, batched over leading dimensions."""
    return geo.scale(k, geo.rotate(theta, v), spec.curvature, spec.max_norm)


class RoleHead(nn.Module):
    """Linear map from a pooled role-label embedding to ``(theta_r, k_r)``.

    The bias starts at zero and the weights small, so every role starts close
    to the identity transform (theta = 0, k = 1).
    """

    def __init__(self, d_tok: int, m: int, seed: int = 0, init_scale: float = 0.05):
        super().__init__()
        rng = np.random.default_rng([seed, 1])
        self.m = m
        self.weight = nn.Parameter(torch.from_numpy(rng.uniform(-init_scale, init_scale, (d_tok, m + 1))).to(DTYPE))
        self.bias = nn.Parameter(torch.zeros(m + 1, dtype=DTYPE))

    def forward(self, role_emb: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = role_emb @ self.weight + self.bias
        return out[..., : self.m], 1.0 + out[..., self.m]


# ---------------------------------------------------------------------------
# point-level losses


def contrastive(c: torch.Tensor, d: torch.Tensor, d_neg: torch.Tensor, alpha: float, curvature: float) -> torch.Tensor:
    """Hinge on ``d(c, d) - d(c, d_neg) + alpha``; ``d_neg`` may carry an extra
    negatives axis before the coordinates, in which case the hinge is averaged."""
    pos = geo.dist(c, d, curvature)
    if d_neg.dim() == c.dim() + 1:
        neg = geo.dist(c.unsqueeze(-2), d_neg, curvature)
        return torch.relu(pos.unsqueeze(-1) - neg + alpha).mean(-1)
    return torch.relu(pos - geo.dist(c, d_neg, curvature) + alpha)


def centripetal(c: torch.Tensor, d: torch.Tensor, beta: float, curvature: float) -> torch.Tensor:
    return torch.relu(geo.hyp_norm(d, curvature) - geo.hyp_norm(c, curvature) + beta)


def hierarchy(c: torch.Tensor, d: torch.Tensor, d_neg: torch.Tensor, alpha: float, beta: float, curvature: float) -> torch.Tensor:
    return contrastive(c, d, d_neg, alpha, curvature) + centripetal(c, d, beta, curvature)


def _pp(*points: PoincarePoint) -> tuple[torch.Tensor, ...]:
    spec = points[0].spec
    for p in points[1:]:
        if p.spec != spec:
            raise geo.SpecMismatchError("points live in different balls")
    return tuple(p.tensor() for p in points)


def loss_contrastive(c: PoincarePoint, d: PoincarePoint, d_neg: PoincarePoint, alpha: float) -> float:
    tc, td, tn = _pp(c, d, d_neg)
    return float(contrastive(tc, td, tn, alpha, c.spec.curvature))


def loss_centripetal(c: PoincarePoint, d: PoincarePoint, beta: float) -> float:
    tc, td = _pp(c, d)
    return float(centripetal(tc, td, beta, c.spec.curvature))


def loss_hierarchy_points(c: PoincarePoint, d: PoincarePoint, d_neg: PoincarePoint, alpha: float, beta: float) -> float:
    tc, td, tn = _pp(c, d, d_neg)
    return float(hierarchy(tc, td, tn, alpha, beta, c.spec.curvature))


# ---------------------------------------------------------------------------
# model


class OntModel(nn.Module):
    """Concept encoder plus role head, bound to a label table and fresh-name definitions."""

    def __init__(self, encoder: TextEncoder, labels: LabelMap, defs: dict[str, Concept], seed: int = 0, init_scale: float = 0.05):
        super().__init__()
        self.encoder = encoder
        self.labels = labels
        self.defs = dict(defs)
        self.role_head = RoleHead(encoder.d_tok, encoder.spec.dim // 2, seed, init_scale)
        self._texts: dict[Concept, str] = {}

    @property
    def spec(self) -> BallSpec:
        return self.encoder.spec

    def text(self, c: Concept) -> str:
        t = self._texts.get(c)
        if t is None:
            t = self._texts[c] = verbalize(c, self.labels, self.defs)
        return t

    def embed(self, concepts: Sequence[Concept]) -> torch.Tensor:
        return self.encoder([self.text(c) for c in concepts])

    def encode_batch(self, texts: Sequence[str]) -> torch.Tensor:
        return self.encoder(texts)

    def role_params(self, roles: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        pooled = self.encoder.pool([verbalize_role(r, self.labels) for r in roles])
        return self.role_head(pooled)

    def role_transform(self, role: str) -> RoleTransform:
        with torch.no_grad():
            theta, k = self.role_params([role])
        return RoleTransform(theta[0].numpy().copy(), float(k[0]))

    def embed_concept(self, c: Concept) -> PoincarePoint:
        with torch.no_grad():
            return PoincarePoint(self.embed([c])[0].numpy().copy(), self.spec)


# ---------------------------------------------------------------------------
# batches and losses over concepts


@dataclass
class Batch:
    """Loss terms of one optimisation step with their sampled negatives.

    ``axiom_negs[i]`` lists the negatives of ``axioms[i]``; role and
    conjunction terms carry one list per direction.
    """

    axioms: list[tuple[Concept, Concept]] = field(default_factory=list)
    axiom_negs: list[list[Concept]] = field(default_factory=list)
    existentials: list[Existential] = field(default_factory=list)
    existential_negs: list[tuple[list[Concept], list[Concept]]] = field(default_factory=list)
    conjunctions: list[Conjunction] = field(default_factory=list)
    conjunction_negs: list[tuple[list[Concept], list[Concept]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.axioms) + len(self.existentials) + len(self.conjunctions)


@dataclass
class LossTerms:
    hierarchy: torch.Tensor
    role: torch.Tensor
    conjunction: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.hierarchy + self.role + self.conjunction

    def items(self):
        return (("hierarchy", self.hierarchy), ("role", self.role), ("conjunction", self.conjunction))


class _Table:
    """Embeds each distinct concept of a batch once."""

    def __init__(self, model: OntModel, concepts: list[Concept]):
        self.index: dict[Concept, int] = {}
        for c in concepts:
            self.index.setdefault(c, len(self.index))
        self.points = model.embed(list(self.index)) if self.index else None

    def __call__(self, concepts: Sequence[Concept]) -> torch.Tensor:
        idx = torch.tensor([self.index[c] for c in concepts], dtype=torch.long)
        return self.points[idx]

    def negs(self, lists: Sequence[Sequence[Concept]]) -> torch.Tensor:
        n = len(lists[0])
        flat = [c for lst in lists for c in lst]
        return self(flat).reshape(len(lists), n, -1)


def _batch_concepts(batch: Batch) -> list[Concept]:
    out: list[Concept] = []
    for (sub, sup), negs in zip(batch.axioms, batch.axiom_negs):
        out += [sub, sup, *negs]
    for ex, (na, nb) in zip(batch.existentials, batch.existential_negs):
        out += [ex, ex.filler, *na, *nb]
    for cj, (na, nb) in zip(batch.conjunctions, batch.conjunction_negs):
        out += [cj, cj.left, cj.right, *na, *nb]
    return out


def loss_terms(model: OntModel, batch: Batch, alpha: float, beta: float) -> LossTerms:
    curv = model.spec.curvature
    zero = torch.zeros((), dtype=DTYPE)
    table = _Table(model, _batch_concepts(batch))

    hier = zero
    if batch.axioms:
        c = table([a for a, _ in batch.axioms])
        d = table([b for _, b in batch.axioms])
        hier = hierarchy(c, d, table.negs(batch.axiom_negs), alpha, beta, curv).sum()

    role = zero
    if batch.existentials:
        e = table(batch.existentials)
        filler = table([ex.filler for ex in batch.existentials])
        theta, k = model.role_params([ex.role for ex in batch.existentials])
        f = role_transform(theta, k, filler, model.spec)
        na = table.negs([n[0] for n in batch.existential_negs])
        nb = table.negs([n[1] for n in batch.existential_negs])
        role = 0.5 * (hierarchy(e, f, na, alpha, beta, curv) + hierarchy(f, e, nb, alpha, beta, curv)).sum()

    conj = zero
    if batch.conjunctions:
        cd = table(batch.conjunctions)
        left = table([cj.left for cj in batch.conjunctions])
        right = table([cj.right for cj in batch.conjunctions])
        na = table.negs([n[0] for n in batch.conjunction_negs])
        nb = table.negs([n[1] for n in batch.conjunction_negs])
        conj = 0.5 * (hierarchy(cd, left, na, alpha, beta, curv) + hierarchy(cd, right, nb, alpha, beta, curv)).sum()

    return LossTerms(hier, role, conj)


def total_loss(model: OntModel, batch: Batch, alpha: float = 3.0, beta: float = 0.5) -> torch.Tensor:
    return loss_terms(model, batch, alpha, beta).total


def loss_hierarchy(model: OntModel, sub: Concept, sup: Concept, neg: Concept, alpha: float = 3.0, beta: float = 0.5) -> torch.Tensor:
    return loss_terms(model, Batch(axioms=[(sub, sup)], axiom_negs=[[neg]]), alpha, beta).hierarchy


def loss_role(model: OntModel, ex: Existential, neg_a: Concept, neg_b: Concept, alpha: float = 3.0, beta: float = 0.5) -> torch.Tensor:
    batch = Batch(existentials=[ex], existential_negs=[([neg_a], [neg_b])])
    return loss_terms(model, batch, alpha, beta).role


def loss_conjunction(model: OntModel, cj: Conjunction, neg_a: Concept, neg_b: Concept, alpha: float = 3.0, beta: float = 0.5) -> torch.Tensor:
    batch = Batch(conjunctions=[cj], conjunction_negs=[([neg_a], [neg_b])])
    return loss_terms(model, batch, alpha, beta).conjunction


# ---------------------------------------------------------------------------
# sampling


def sample_negative(rng: np.random.Generator, candidates: Sequence[Concept]) -> Concept:
    if not candidates:
        raise ValueError("cannot sample a negative from an empty pool")
    return candidates[int(rng.integers(len(candidates)))]


def _sample(rng: np.random.Generator, pool: Sequence[Concept], n: int) -> list[Concept]:
    if not pool:
        raise ValueError("cannot sample a negative from an empty pool")
    return [pool[i] for i in rng.integers(len(pool), size=n)]


def negative_pool(axioms: Sequence[NormalizedAxiom]) -> list[Concept]:
    """Every atomic concept and nominal of the normalized ontology, fresh names included."""
    pool = set()
    for ax in axioms:
        for c in (*ax.left, ax.right):
            if isinstance(c, (Atomic, Nominal)):
                pool.add(c)
    return sorted(pool, key=concept_key)


# ---------------------------------------------------------------------------
# training


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, term: str, value: float):
        self.step, self.term, self.value = step, term, value
        super().__init__(f"non-finite loss at step {step}: {term} term = {value}")


@dataclass
class TrainingData:
    axioms: list[tuple[Concept, Concept]]
    existentials: list[Existential]
    conjunctions: list[Conjunction]
    pool: list[Concept]

    @classmethod
    def from_normalized(cls, axioms: Sequence[NormalizedAxiom]) -> "TrainingData":
        pairs = [(ax.sub, ax.sup) for ax in axioms]
        exs, cjs = collect_subexpressions(Ontology(tuple(Axiom(a, b) for a, b in pairs)))
        return cls(pairs, sorted(exs, key=concept_key), sorted(cjs, key=concept_key), negative_pool(axioms))

    def texts(self, model_text) -> list[str]:
        concepts = [c for pair in self.axioms for c in pair] + list(self.pool)
        concepts += [ex.filler for ex in self.existentials]
        concepts += [x for cj in self.conjunctions for x in (cj.left, cj.right)]
        return [model_text(c) for c in concepts]


@dataclass
class TrainResult:
    model: OntModel
    config: TrainConfig
    epoch_losses: list[float]
    step_losses: list[float]


def build_model(axioms: Sequence[NormalizedAxiom], labels: LabelMap, defs: dict[str, Concept], cfg: TrainConfig) -> OntModel:
    """Initialise encoder and role head; the vocabulary covers every training verbalization and role label."""
    data = TrainingData.from_normalized(axioms)
    roles = sorted({ex.role for ex in data.existentials})
    texts = data.texts(lambda c: verbalize(c, labels, defs))
    texts += [verbalize_role(r, labels) for r in roles]
    vocab = Vocab.build(texts)
    encoder = TextEncoder(vocab, cfg.ball, cfg.d_tok, cfg.seed, cfg.init_scale)
    return OntModel(encoder, labels, defs, cfg.seed, cfg.init_scale)


def make_batches(data: TrainingData, cfg: TrainConfig, rng: np.random.Generator) -> list[Batch]:
    """One epoch of shuffled batches; every existential and conjunction appears once."""
    n_batches = max(1, math.ceil(len(data.axioms) / cfg.batch_size))
    ax_order = np.array_split(rng.permutation(len(data.axioms)), n_batches)
    ex_order = np.array_split(rng.permutation(len(data.existentials)), n_batches) if cfg.role_loss else [[]] * n_batches
    cj_order = np.array_split(rng.permutation(len(data.conjunctions)), n_batches) if cfg.conjunction_loss else [[]] * n_batches
    n = cfg.n_neg
    batches = []
    for ai, ei, ci in zip(ax_order, ex_order, cj_order):
        b = Batch()
        for i in ai:
            b.axioms.append(data.axioms[i])
            b.axiom_negs.append(_sample(rng, data.pool, n))
        for i in ei:
            b.existentials.append(data.existentials[i])
            b.existential_negs.append((_sample(rng, data.pool, n), _sample(rng, data.pool, n)))
        for i in ci:
            b.conjunctions.append(data.conjunctions[i])
            b.conjunction_negs.append((_sample(rng, data.pool, n), _sample(rng, data.pool, n)))
        batches.append(b)
    return batches


def train(
    axioms: Sequence[NormalizedAxiom],
    labels: LabelMap,
    defs: dict[str, Concept],
    cfg: TrainConfig,
    model: OntModel | None = None,
) -> TrainResult:
    data = TrainingData.from_normalized(axioms)
    if model is None:
        model = build_model(axioms, labels, defs, cfg)
    rng = np.random.default_rng([cfg.seed, 2])
    params = [p for p in model.parameters()]
    epoch_losses, step_losses = [], []
    step = 0
    for epoch in range(cfg.epochs):
        total = 0.0
        for batch in make_batches(data, cfg, rng):
            if not len(batch):
                continue
            terms = loss_terms(model, batch, cfg.alpha, cfg.beta)
            for name, value in terms.items():
                if not torch.isfinite(value):
                    raise TrainingDivergedError(step, name, value.item())
            loss = terms.total
            model.zero_grad(set_to_none=True)
            loss.backward()
            with torch.no_grad():
                for p in params:
                    if p.grad is not None:
                        p -= cfg.lr * p.grad
            value = loss.item()
            step_losses.append(value)
            total += value
            step += 1
        epoch_losses.append(total)
        log.debug("epoch %d loss %.6f", epoch + 1, total)
    return TrainResult(model, cfg, epoch_losses, step_losses)
