"""Compositional natural-language rendering of EL concepts.

    V(A)      = label of A (source casing kept)
    V(⊤)      = "thing"
    V(⊥)      = "nothing"
    V(C ⊓ D)  = "V(C) and V(D)"
    V(∃r.C)   = "something that V(r) some V(C)"

Fresh names introduced by normalization are rendered through their
definitions.
"""

from __future__ import annotations

from .ontology import Atomic, Bottom, Concept, Conjunction, Existential, LabelMap, Nominal, Top

TOP_TEXT = "thing"
BOTTOM_TEXT = "nothing"


class MissingLabelError(KeyError):
    def __init__(self, iri: str, kind: str = "concept"):
        self.iri = iri
        self.kind = kind
        super().__init__(f"no {kind} label for {iri}")

    def __str__(self) -> str:
        return self.args[0]


class CyclicDefinitionError(ValueError):
    pass


def verbalize_role(r: str, labels: LabelMap) -> str:
    try:
        return labels.role_labels[r]
    except KeyError:
        raise MissingLabelError(r, "role") from None


def _verbalize(c: Concept, labels: LabelMap, defs: dict[str, Concept], active: tuple[str, ...]) -> str:
    if isinstance(c, Top):
        return TOP_TEXT
    if isinstance(c, Bottom):
        return BOTTOM_TEXT
    if isinstance(c, (Atomic, Nominal)):
        if isinstance(c, Atomic) and c.iri in defs:
            if c.iri in active:
                raise CyclicDefinitionError(" -> ".join(active + (c.iri,)))
            return _verbalize(defs[c.iri], labels, defs, active + (c.iri,))
        try:
            return labels.concept_labels[c.iri]
        except KeyError:
            raise MissingLabelError(c.iri) from None
    if isinstance(c, Conjunction):
        return f"{_verbalize(c.left, labels, defs, active)} and {_verbalize(c.right, labels, defs, active)}"
    if isinstance(c, Existential):
        role = verbalize_role(c.role, labels)
        return f"something that {role} some {_verbalize(c.filler, labels, defs, active)}"
    raise TypeError(f"not a concept: {c!r}")


def verbalize(c: Concept, labels: LabelMap, defs: dict[str, Concept] | None = None) -> str:
    text = _verbalize(c, labels, defs or {}, ())
    return " ".join(text.split())
