"""Rewrite EL axioms into the four normal forms NF1-NF4.

Complex subconcepts that sit in a position where a normal form needs a name
are replaced, innermost first, by fresh atomic concepts ``_N1, _N2, ...``.
Each fresh name ``N`` abbreviating ``C`` contributes both ``N ⊑ C`` and
``C ⊑ N`` (in normalized form) and is recorded in the definition map so the
verbalizer can render it. Structurally equal subconcepts share one name.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .ontology import (
    Atomic,
    Axiom,
    Concept,
    Conjunction,
    Existential,
    Ontology,
    concept_signature,
    is_named,
    parse_concept,
    to_functional,
)

FRESH_PREFIX = "_N"


class NfKind(enum.Enum):
    NF1 = "NF1"  # A ⊑ B
    NF2 = "NF2"  # A1 ⊓ A2 ⊑ B
    NF3 = "NF3"  # A ⊑ ∃r.B
    NF4 = "NF4"  # ∃r.B ⊑ A


@dataclass(frozen=True)
class NormalizedAxiom:
    """One normal-form axiom.

    ``left`` holds the named concepts of the left-hand side: ``(A,)`` for NF1
    and NF3, ``(A1, A2)`` for NF2 and ``(B,)`` (the filler) for NF4. ``right``
    is ``B`` for NF1/NF2, the filler ``B`` for NF3 and ``A`` for NF4.
    """

    kind: NfKind
    left: tuple[Concept, ...]
    right: Concept
    role: str | None = None

    def __post_init__(self) -> None:
        arity = 2 if self.kind is NfKind.NF2 else 1
        if len(self.left) != arity:
            raise ValueError(f"{self.kind.value} needs {arity} left concept(s)")
        if not all(is_named(c) for c in self.left) or not is_named(self.right):
            raise ValueError("normal forms only hold named concepts")
        needs_role = self.kind in (NfKind.NF3, NfKind.NF4)
        if needs_role != (self.role is not None):
            raise ValueError(f"role is {'required' if needs_role else 'not allowed'} for {self.kind.value}")

    @property
    def sub(self) -> Concept:
        if self.kind is NfKind.NF2:
            return Conjunction(self.left[0], self.left[1])
        if self.kind is NfKind.NF4:
            return Existential(self.role, self.left[0])
        return self.left[0]

    @property
    def sup(self) -> Concept:
        if self.kind is NfKind.NF3:
            return Existential(self.role, self.right)
        return self.right

    def to_axiom(self) -> Axiom:
        return Axiom(self.sub, self.sup)

    def __str__(self) -> str:
        return f"{self.sub} ⊑ {self.sup}"

    @classmethod
    def nf1(cls, a: Concept, b: Concept) -> "NormalizedAxiom":
        return cls(NfKind.NF1, (a,), b)

    @classmethod
    def from_axiom(cls, ax: Axiom) -> "NormalizedAxiom | None":
        """Classify an axiom that is already in normal form, else ``None``."""
        sub, sup = ax.sub, ax.sup
        if is_named(sub):
            if is_named(sup):
                return cls(NfKind.NF1, (sub,), sup)
            if isinstance(sup, Existential) and is_named(sup.filler):
                return cls(NfKind.NF3, (sub,), sup.filler, sup.role)
            return None
        if not is_named(sup):
            return None
        if isinstance(sub, Conjunction) and is_named(sub.left) and is_named(sub.right):
            return cls(NfKind.NF2, (sub.left, sub.right), sup)
        if isinstance(sub, Existential) and is_named(sub.filler):
            return cls(NfKind.NF4, (sub.filler,), sup, sub.role)
        return None


def axiom_nf_kind(a: NormalizedAxiom) -> NfKind:
    return a.kind


class _Normalizer:
    def __init__(self, reserved: set[str]):
        self.reserved = reserved
        self.counter = 0
        self.names: dict[Concept, Atomic] = {}
        self.defs: dict[str, Concept] = {}
        self.out: list[NormalizedAxiom] = []
        self._seen: set[NormalizedAxiom] = set()

    def emit(self, ax: NormalizedAxiom) -> None:
        if ax not in self._seen:
            self._seen.add(ax)
            self.out.append(ax)

    def fresh(self) -> Atomic:
        while True:
            self.counter += 1
            iri = f"{FRESH_PREFIX}{self.counter}"
            if iri not in self.reserved:
                return Atomic(iri)

    def flatten(self, c: Concept) -> Concept:
        """Name the children of ``c`` so that ``c`` has only named children."""
        if isinstance(c, Conjunction):
            return Conjunction(self.name(c.left), self.name(c.right))
        if isinstance(c, Existential):
            return Existential(c.role, self.name(c.filler))
        return c

    def name(self, c: Concept) -> Concept:
        if is_named(c):
            return c
        flat = self.flatten(c)
        if flat in self.names:
            return self.names[flat]
        n = self.fresh()
        self.names[flat] = n
        self.defs[n.iri] = flat
        if isinstance(flat, Conjunction):
            self.emit(NormalizedAxiom.nf1(n, flat.left))
            self.emit(NormalizedAxiom.nf1(n, flat.right))
            self.emit(NormalizedAxiom(NfKind.NF2, (flat.left, flat.right), n))
        else:
            self.emit(NormalizedAxiom(NfKind.NF3, (n,), flat.filler, flat.role))
            self.emit(NormalizedAxiom(NfKind.NF4, (flat.filler,), n, flat.role))
        return n

    def axiom(self, sub: Concept, sup: Concept) -> None:
        left = self.flatten(sub)
        if isinstance(sup, Conjunction):
            self.axiom(left, sup.left)
            self.axiom(left, sup.right)
            return
        right = self.flatten(sup)
        if not is_named(left) and not is_named(right):
            left = self.name(left)
        self.emit(NormalizedAxiom.from_axiom(Axiom(left, right)))


def normalize(o: Ontology, order_seed: int | None = None) -> tuple[list[NormalizedAxiom], dict[str, Concept]]:
    """Normalize ``o`` into NF1-NF4 axioms plus the fresh-name definitions.

    Axioms are processed in file order, each left side before its right side,
    children before parents. ``order_seed`` shuffles the processing order,
    which only changes which fresh name abbreviates which concept.
    """
    reserved = set(o.concept_names)
    for ax in o.axioms:
        reserved |= concept_signature(ax.sub)[0] | concept_signature(ax.sup)[0]
    norm = _Normalizer(reserved)
    axioms = list(o.axioms)
    if order_seed is not None:
        random.Random(order_seed).shuffle(axioms)
    for ax in axioms:
        norm.axiom(ax.sub, ax.sup)
    return norm.out, norm.defs


def is_fresh(c: Concept, defs: dict[str, Concept]) -> bool:
    return isinstance(c, Atomic) and c.iri in defs


def dump_defs(defs: dict[str, Concept]) -> str:
    return "".join(f"{iri}\t{to_functional(c)}\n" for iri, c in defs.items())


def load_defs(source: str) -> dict[str, Concept]:
    defs: dict[str, Concept] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip():
            continue
        iri, sep, expr = raw.partition("\t")
        if not sep or not iri.strip():
            raise ValueError(f"line {lineno}: expected freshIRI<TAB>concept-expression")
        defs[iri.strip()] = parse_concept(expr)
    return defs


def normalized_from_ontology(o: Ontology) -> list[NormalizedAxiom]:
    """Read back a file of normalized axioms; every axiom must be in normal form."""
    out = []
    for i, ax in enumerate(o.axioms, start=1):
        nax = NormalizedAxiom.from_axiom(ax)
        if nax is None:
            raise ValueError(f"axiom {i} is not in normal form: {ax}")
        out.append(nax)
    return out
