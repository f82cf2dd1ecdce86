"""Text -> ball encoders.

``TextEncoder`` is a small trainable stand-in for a sentence transformer:
mean-pooled token embeddings followed by a shared affine map and the ball
projection. ``ExternalEncoder`` serves precomputed sentence embeddings read
from a TSV file keyed by the SHA-256 of the verbalization.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from .geometry import DTYPE, BallSpec, PoincarePoint, project
from .ontology import Concept, LabelMap
from .verbalize import verbalize

OOV = "<oov>"
_WORD = re.compile(r"[^\W_]+")


def tokenize(s: str) -> list[str]:
    """Lowercase and split on whitespace, punctuation and underscores."""
    return _WORD.findall(s.lower())


@dataclass
class Vocab:
    tokens: list[str]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != OOV:
            raise ValueError(f"vocabulary must start with {OOV!r}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocab":
        seen = set()
        for text in texts:
            seen.update(tokenize(text))
        seen.discard(OOV)
        return cls([OOV] + sorted(seen))

    def __len__(self) -> int:
        return len(self.tokens)

    def ids(self, text: str) -> list[int]:
        return [self.index.get(tok, 0) for tok in tokenize(text)]


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], scale: float) -> nn.Parameter:
    return nn.Parameter(torch.from_numpy(rng.uniform(-scale, scale, size=shape)).to(DTYPE))


class TextEncoder(nn.Module):
    def __init__(self, vocab: Vocab, spec: BallSpec, d_tok: int = 32, seed: int = 0, init_scale: float = 0.05):
        super().__init__()
        self.vocab = vocab
        self.spec = spec
        self.d_tok = d_tok
        rng = np.random.default_rng(seed)
        self.token_table = _uniform(rng, (len(vocab), d_tok), init_scale)
        self.out_weight = _uniform(rng, (d_tok, spec.dim), init_scale)
        self.out_bias = _uniform(rng, (spec.dim,), init_scale)
        self._ids: dict[str, list[int]] = {}

    def _token_ids(self, text: str) -> list[int]:
        ids = self._ids.get(text)
        if ids is None:
            ids = self._ids[text] = self.vocab.ids(text)
        return ids

    def pool(self, texts: Sequence[str]) -> torch.Tensor:
        """Mean token embedding per text; zero vector for texts without tokens."""
        flat, seg, counts = [], [], []
        for i, text in enumerate(texts):
            ids = self._token_ids(text)
            flat.extend(ids)
            seg.extend([i] * len(ids))
            counts.append(max(len(ids), 1))
        out = torch.zeros(len(texts), self.d_tok, dtype=DTYPE)
        if flat:
            rows = self.token_table[torch.tensor(flat, dtype=torch.long)]
            out = out.index_add(0, torch.tensor(seg, dtype=torch.long), rows)
        return out / torch.tensor(counts, dtype=DTYPE).unsqueeze(-1)

    def forward(self, texts: Sequence[str]) -> torch.Tensor:
        return project(self.pool(texts) @ self.out_weight + self.out_bias, self.spec)

    def encode_batch(self, texts: Sequence[str]) -> torch.Tensor:
        return self(texts)

    def encode(self, s: str) -> PoincarePoint:
        with torch.no_grad():
            return PoincarePoint(self([s])[0].numpy().copy(), self.spec)


def encode(s: str, encoder: TextEncoder) -> PoincarePoint:
    return encoder.encode(s)


def embed_concept(c: Concept, encoder, labels: LabelMap, defs: dict[str, Concept] | None = None) -> PoincarePoint:
    return encoder.encode(verbalize(c, labels, defs))


# ---------------------------------------------------------------------------
# precomputed embeddings


def verbalization_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class MissingEmbeddingError(KeyError):
    def __str__(self) -> str:
        return self.args[0]


class ExternalEncoder:
    """Frozen lookup of raw vectors, projected into the ball on access."""

    def __init__(self, table: dict[str, np.ndarray], spec: BallSpec):
        for key, vec in table.items():
            if vec.shape != (spec.dim,):
                raise ValueError(f"embedding for {key} has {vec.shape[0]} values, expected {spec.dim}")
        self.table = table
        self.spec = spec

    def encode_batch(self, texts: Sequence[str]) -> torch.Tensor:
        rows = []
        for text in texts:
            vec = self.table.get(verbalization_key(text))
            if vec is None:
                raise MissingEmbeddingError(f"no external embedding for verbalization {text!r}")
            rows.append(vec)
        raw = torch.from_numpy(np.array(rows, dtype=np.float64).reshape(len(texts), self.spec.dim))
        return project(raw, self.spec)

    def encode(self, s: str) -> PoincarePoint:
        return PoincarePoint(self.encode_batch([s])[0].numpy().copy(), self.spec)


def load_external_embeddings(source: str, spec: BallSpec | None = None, curvature: float = 1.0, eps: float = 1e-5) -> ExternalEncoder:
    """Parse ``key<TAB>v1<TAB>v2...`` lines (values may also be space separated)."""
    table: dict[str, np.ndarray] = {}
    dim = spec.dim if spec is not None else None
    for lineno, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip():
            continue
        key, sep, rest = raw.partition("\t")
        if not sep:
            raise ValueError(f"line {lineno}: expected key<TAB>values")
        try:
            vec = np.array([float(v) for v in rest.split()], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(vec)
        if len(vec) != dim:
            raise ValueError(f"line {lineno}: expected {dim} values, got {len(vec)}")
        table[key.strip()] = vec
    if spec is None:
        if dim is None:
            raise ValueError("empty embedding file and no ball spec given")
        spec = BallSpec(dim=dim, curvature=curvature, eps=eps)
    return ExternalEncoder(table, spec)


def dump_external_embeddings(vectors: dict[str, np.ndarray]) -> str:
    """Inverse of :func:`load_external_embeddings`, keyed by verbalization text."""
    return "".join(
        verbalization_key(text) + "\t" + "\t".join(repr(float(v)) for v in vec) + "\n"
        for text, vec in vectors.items()
    )
