"""EL completion-rule saturation over normalized axioms.

Computes, for every named concept ``A``, the set ``S(A)`` of named concepts
subsuming it, and for every role ``r`` the set ``R(r)`` of pairs linked by it:

    init  S(A) ⊇ {A, ⊤}
    R1    A' ∈ S(A), A' ⊑ B               ⇒ B ∈ S(A)
    R2    A1, A2 ∈ S(A), A1 ⊓ A2 ⊑ B      ⇒ B ∈ S(A)
    R3    A' ∈ S(A), A' ⊑ ∃r.B            ⇒ (A, B) ∈ R(r)
    R4    (A, B) ∈ R(r), B' ∈ S(B), ∃r.B' ⊑ A' ⇒ A' ∈ S(A)

Bottom has no clash rule; it behaves like any other named concept.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable

from .normalize import NfKind, NormalizedAxiom
from .ontology import Concept, Top, concept_key


@dataclass
class Closure:
    subsumers: dict[Concept, set[Concept]] = field(default_factory=dict)
    links: dict[str, set[tuple[Concept, Concept]]] = field(default_factory=dict)

    def entails(self, a: Concept, b: Concept) -> bool:
        if a not in self.subsumers:
            return a == b or b == Top()
        return b in self.subsumers[a]


def saturate(axioms: Iterable[NormalizedAxiom], extra_concepts: Iterable[Concept] = ()) -> Closure:
    axioms = list(axioms)
    nf1 = defaultdict(list)
    nf2 = defaultdict(list)
    nf3 = defaultdict(list)
    nf4 = defaultdict(list)
    nodes: set[Concept] = {Top(), *extra_concepts}
    for ax in axioms:
        nodes.update(ax.left)
        nodes.add(ax.right)
        if ax.kind is NfKind.NF1:
            nf1[ax.left[0]].append(ax.right)
        elif ax.kind is NfKind.NF2:
            a1, a2 = ax.left
            nf2[a1].append((a2, ax.right))
            nf2[a2].append((a1, ax.right))
        elif ax.kind is NfKind.NF3:
            nf3[ax.left[0]].append((ax.role, ax.right))
        else:
            nf4[(ax.role, ax.left[0])].append(ax.right)

    S: dict[Concept, set[Concept]] = {}
    R: dict[str, set[tuple[Concept, Concept]]] = defaultdict(set)
    preds: dict[Concept, list[tuple[Concept, str]]] = defaultdict(list)
    queue: deque[tuple[Concept, Concept]] = deque()

    def add(a: Concept, b: Concept) -> None:
        if b not in S[a]:
            S[a].add(b)
            queue.append((a, b))

    def init(a: Concept) -> None:
        if a not in S:
            S[a] = set()
            add(a, a)
            add(a, Top())

    def link(a: Concept, role: str, b: Concept) -> None:
        init(b)
        if (a, b) in R[role]:
            return
        R[role].add((a, b))
        preds[b].append((a, role))
        for b2 in list(S[b]):
            for a2 in nf4.get((role, b2), ()):
                add(a, a2)

    for node in sorted(nodes, key=concept_key):
        init(node)

    while queue:
        a, x = queue.popleft()
        for b in nf1.get(x, ()):
            add(a, b)
        for other, b in nf2.get(x, ()):
            if other in S[a]:
                add(a, b)
        for role, b in nf3.get(x, ()):
            link(a, role, b)
        for a0, role in list(preds[a]):
            for a2 in nf4.get((role, x), ()):
                add(a0, a2)

    return Closure(S, {r: set(pairs) for r, pairs in R.items() if pairs})


def entailed_nf1(
    axioms: Iterable[NormalizedAxiom],
    original_signature: Iterable[Concept],
    exclude_asserted: bool = True,
    exclude_top: bool = True,
    closure: Closure | None = None,
) -> list[NormalizedAxiom]:
    """Entailed ``A ⊑ B`` over ``original_signature``, sorted, never reflexive.

    With ``exclude_asserted`` the NF1 axioms present in ``axioms`` are left
    out; with ``exclude_top`` conclusions ``A ⊑ ⊤`` are left out.
    """
    axioms = list(axioms)
    signature = set(original_signature)
    if closure is None:
        closure = saturate(axioms, signature)
    asserted = {ax for ax in axioms if ax.kind is NfKind.NF1} if exclude_asserted else set()
    out = []
    for a in sorted(signature, key=concept_key):
        for b in closure.subsumers.get(a, ()):
            if b == a or b not in signature:
                continue
            if exclude_top and b == Top():
                continue
            ax = NormalizedAxiom.nf1(a, b)
            if ax not in asserted:
                out.append(ax)
    out.sort(key=lambda ax: (concept_key(ax.left[0]), concept_key(ax.right)))
    return out
