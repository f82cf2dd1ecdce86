"""EL concept data model, a functional-syntax subset parser, and label tables.

Concepts are immutable trees. The accepted input syntax is a small subset of
OWL functional syntax, one axiom per line::

    # comment
    SubClassOf(ObjectIntersectionOf(:Person ObjectSomeValuesFrom(:teach :Class)) :Teacher)

IRIs are opaque tokens (no whitespace, no parentheses). ``owl:Thing`` and
``owl:Nothing`` denote top and bottom.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

TOP_IRI = "owl:Thing"
BOTTOM_IRI = "owl:Nothing"


class OntologySyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class LabelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Concept trees


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "⊤"


@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "⊥"


@dataclass(frozen=True)
class Atomic:
    iri: str

    def __str__(self) -> str:
        return self.iri


@dataclass(frozen=True)
class Nominal:
    iri: str

    def __str__(self) -> str:
        return "{" + self.iri + "}"


@dataclass(frozen=True)
class Conjunction:
    left: "Concept"
    right: "Concept"

    def __str__(self) -> str:
        return f"({self.left} ⊓ {self.right})"


@dataclass(frozen=True)
class Existential:
    role: str
    filler: "Concept"

    def __str__(self) -> str:
        return f"∃{self.role}.{self.filler}"


Concept = Union[Top, Bottom, Atomic, Nominal, Conjunction, Existential]
NAMED_TYPES = (Top, Bottom, Atomic, Nominal)


def is_named(c: Concept) -> bool:
    """True for concepts that occupy an atomic position in normal forms."""
    return isinstance(c, NAMED_TYPES)


def concept_key(c: Concept) -> str:
    """Stable sort key; equal concepts give equal keys."""
    return to_functional(c)


@dataclass(frozen=True)
class Axiom:
    sub: Concept
    sup: Concept

    def __str__(self) -> str:
        return f"{self.sub} ⊑ {self.sup}"


def subconcepts(c: Concept) -> Iterator[Concept]:
    """Pre-order walk over every subtree, including ``c`` itself."""
    stack = [c]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Conjunction):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Existential):
            stack.append(node.filler)


def concept_signature(c: Concept) -> tuple[set[str], set[str], set[str]]:
    names, roles, individuals = set(), set(), set()
    for node in subconcepts(c):
        if isinstance(node, Atomic):
            names.add(node.iri)
        elif isinstance(node, Nominal):
            individuals.add(node.iri)
        elif isinstance(node, Existential):
            roles.add(node.role)
    return names, roles, individuals


@dataclass(frozen=True)
class Ontology:
    axioms: tuple[Axiom, ...] = ()
    concept_names: frozenset[str] = field(init=False)
    roles: frozenset[str] = field(init=False)
    individuals: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "axioms", tuple(self.axioms))
        names, roles, individuals = set(), set(), set()
        for ax in self.axioms:
            for side in (ax.sub, ax.sup):
                n, r, i = concept_signature(side)
                names |= n
                roles |= r
                individuals |= i
        object.__setattr__(self, "concept_names", frozenset(names))
        object.__setattr__(self, "roles", frozenset(roles))
        object.__setattr__(self, "individuals", frozenset(individuals))

    def __len__(self) -> int:
        return len(self.axioms)

    def named_concepts(self) -> set[Concept]:
        """Atomic concepts and nominals of the signature as concept nodes."""
        out: set[Concept] = {Atomic(n) for n in self.concept_names}
        out |= {Nominal(i) for i in self.individuals}
        return out


def collect_subexpressions(o: Ontology) -> tuple[set[Existential], set[Conjunction]]:
    existentials: set[Existential] = set()
    conjunctions: set[Conjunction] = set()
    for ax in o.axioms:
        for side in (ax.sub, ax.sup):
            for node in subconcepts(side):
                if isinstance(node, Existential):
                    existentials.add(node)
                elif isinstance(node, Conjunction):
                    conjunctions.add(node)
    return existentials, conjunctions


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str, line: int | None) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        tokens.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    depth = 0
    for tok in tokens:
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth -= 1
            if depth < 0:
                raise OntologySyntaxError("unbalanced parentheses: unexpected ')'", line)
    if depth != 0:
        raise OntologySyntaxError("unbalanced parentheses: missing ')'", line)
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], line: int | None):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def error(self, msg: str) -> OntologySyntaxError:
        return OntologySyntaxError(msg, self.line)

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of expression")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise self.error(f"expected {tok!r}, got {got!r}")

    def done(self) -> None:
        if self.peek() is not None:
            raise self.error(f"unexpected trailing token {self.peek()!r}")

    def _args(self) -> list[Concept]:
        self.expect("(")
        args = []
        while self.peek() not in (")", None):
            args.append(self.concept())
        self.expect(")")
        return args

    def concept(self) -> Concept:
        tok = self.take()
        if tok in ("(", ")"):
            raise self.error(f"unexpected {tok!r}")
        if self.peek() == "(":
            if tok == "ObjectIntersectionOf":
                args = self._args()
                if len(args) < 2:
                    raise self.error("ObjectIntersectionOf needs at least two operands")
                out = args[0]
                for arg in args[1:]:
                    out = Conjunction(out, arg)
                return out
            if tok == "ObjectSomeValuesFrom":
                self.expect("(")
                role = self.take()
                if role in ("(", ")") or self.peek() == "(":
                    raise self.error("ObjectSomeValuesFrom expects a role IRI first")
                filler = self.concept()
                self.expect(")")
                return Existential(role, filler)
            if tok == "ObjectOneOf":
                self.expect("(")
                ind = self.take()
                if ind in ("(", ")") or self.peek() != ")":
                    raise self.error("ObjectOneOf supports exactly one individual")
                self.expect(")")
                return Nominal(ind)
            raise self.error(f"unsupported constructor {tok!r}")
        if tok == TOP_IRI:
            return Top()
        if tok == BOTTOM_IRI:
            return Bottom()
        return Atomic(tok)

    def axiom(self) -> Axiom:
        head = self.take()
        if head != "SubClassOf":
            raise self.error(f"unsupported axiom type {head!r}")
        self.expect("(")
        sub = self.concept()
        sup = self.concept()
        self.expect(")")
        return Axiom(sub, sup)


def parse_concept(source: str) -> Concept:
    parser = _Parser(_tokenize(source, None), None)
    if parser.peek() is None:
        raise OntologySyntaxError("empty concept expression")
    c = parser.concept()
    parser.done()
    return c


def parse_axiom(source: str, line: int | None = None) -> Axiom:
    parser = _Parser(_tokenize(source, line), line)
    ax = parser.axiom()
    parser.done()
    return ax


def parse_ontology(source: str) -> Ontology:
    axioms = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        axioms.append(parse_axiom(text, lineno))
    return Ontology(tuple(axioms))


# ---------------------------------------------------------------------------
# Serialization


def to_functional(c: Concept) -> str:
    if isinstance(c, Top):
        return TOP_IRI
    if isinstance(c, Bottom):
        return BOTTOM_IRI
    if isinstance(c, Atomic):
        return c.iri
    if isinstance(c, Nominal):
        return f"ObjectOneOf({c.iri})"
    if isinstance(c, Conjunction):
        return f"ObjectIntersectionOf({to_functional(c.left)} {to_functional(c.right)})"
    if isinstance(c, Existential):
        return f"ObjectSomeValuesFrom({c.role} {to_functional(c.filler)})"
    raise TypeError(f"not a concept: {c!r}")


def axiom_to_functional(ax: Axiom) -> str:
    return f"SubClassOf({to_functional(ax.sub)} {to_functional(ax.sup)})"


def serialize_ontology(axioms: Iterable[Axiom]) -> str:
    return "".join(axiom_to_functional(ax) + "\n" for ax in axioms)


# ---------------------------------------------------------------------------
# Labels


@dataclass
class LabelMap:
    concept_labels: dict[str, str] = field(default_factory=dict)
    role_labels: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.concept_labels) + len(self.role_labels)


def load_labels(source: str) -> LabelMap:
    """Read ``IRI<TAB>kind<TAB>label`` lines; the last label for an IRI wins."""
    labels = LabelMap()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise LabelError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        iri, kind, label = parts[0].strip(), parts[1].strip(), parts[2].strip()
        if not iri:
            raise LabelError(f"line {lineno}: empty IRI")
        if not label:
            raise LabelError(f"line {lineno}: empty label for {iri}")
        if kind == "concept":
            labels.concept_labels[iri] = label
        elif kind == "role":
            labels.role_labels[iri] = label
        else:
            raise LabelError(f"line {lineno}: unknown kind {kind!r} (expected concept or role)")
    return labels


def dump_labels(labels: LabelMap) -> str:
    lines = [f"{iri}\tconcept\t{lab}" for iri, lab in sorted(labels.concept_labels.items())]
    lines += [f"{iri}\trole\t{lab}" for iri, lab in sorted(labels.role_labels.items())]
    return "".join(line + "\n" for line in lines)
