import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontembed.normalize import NfKind, NormalizedAxiom
from ontembed.ontology import Atomic, Top
from ontembed.reasoner import entailed_nf1, saturate

A, B, B2, C = Atomic(":A"), Atomic(":B"), Atomic(":B2"), Atomic(":C")


def nf1(a, b):
    return NormalizedAxiom.nf1(a, b)


def nf2(a1, a2, b):
    return NormalizedAxiom(NfKind.NF2, (a1, a2), b)


def nf3(a, r, b):
    return NormalizedAxiom(NfKind.NF3, (a,), b, r)


def nf4(r, b, a):
    return NormalizedAxiom(NfKind.NF4, (b,), a, r)


def test_transitivity():
    assert C in saturate([nf1(A, B), nf1(B, C)]).subsumers[A]


def test_monotonicity_pattern():
    closure = saturate([nf3(A, ":r", B), nf1(B, B2), nf4(":r", B2, C)])
    assert C in closure.subsumers[A]
    assert (A, B) in closure.links[":r"]


def test_empty():
    closure = saturate([], [A])
    assert closure.subsumers[A] == {A, Top()}
    assert entailed_nf1([], [A, B]) == []


def test_chain_of_three_edges():
    D = Atomic(":D")
    chain = [nf1(A, B), nf1(B, C), nf1(C, D)]
    got = entailed_nf1(chain, [A, B, C, D])
    assert set(got) == {nf1(A, C), nf1(A, D), nf1(B, D)}
    full = entailed_nf1(chain, [A, B, C, D], exclude_asserted=False)
    assert set(full) == set(got) | set(chain)


def test_top_conclusions_flag():
    got = entailed_nf1([nf1(A, B)], [A, B, Top()], exclude_asserted=False, exclude_top=False)
    assert nf1(A, Top()) in got
    assert nf1(A, Top()) not in entailed_nf1([nf1(A, B)], [A, B, Top()], exclude_asserted=False)


def _closure_oracle(edges, nodes):
    # Floyd-Warshall style reachability
    reach = {(a, b) for a, b in edges}
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if (i, k) in reach and (k, j) in reach:
                    reach.add((i, j))
    return {(a, b) for a, b in reach if a != b}


@pytest.mark.parametrize("seed", range(25))
def test_nf1_only_matches_transitive_closure(seed):
    rng = random.Random(seed)
    nodes = [Atomic(f":X{i}") for i in range(rng.randint(2, 20))]
    edges = {(rng.choice(nodes), rng.choice(nodes)) for _ in range(rng.randint(1, 50))}
    axioms = [nf1(a, b) for a, b in sorted(edges, key=str)]
    got = {(ax.left[0], ax.right) for ax in entailed_nf1(axioms, nodes, exclude_asserted=False)}
    assert got == _closure_oracle(edges, nodes)


NAMES = [Atomic(f":K{i}") for i in range(5)]
ROLES = [":r", ":s"]


def random_normalized(rng, n, names=NAMES, roles=ROLES):
    out = []
    for _ in range(n):
        kind = rng.choice(list(NfKind))
        if kind is NfKind.NF1:
            out.append(nf1(rng.choice(names), rng.choice(names)))
        elif kind is NfKind.NF2:
            out.append(nf2(rng.choice(names), rng.choice(names), rng.choice(names)))
        elif kind is NfKind.NF3:
            out.append(nf3(rng.choice(names), rng.choice(roles), rng.choice(names)))
        else:
            out.append(nf4(rng.choice(roles), rng.choice(names), rng.choice(names)))
    return out


def naive_fixpoint(axioms, names):
    # apply every rule to every combination until nothing changes
    S = {a: {a, Top()} for a in names + [Top()]}
    R = {r: set() for r in ROLES}
    changed = True
    while changed:
        changed = False
        for a in list(S):
            for ax in axioms:
                new = None
                if ax.kind is NfKind.NF1 and ax.left[0] in S[a]:
                    new = ax.right
                elif ax.kind is NfKind.NF2 and ax.left[0] in S[a] and ax.left[1] in S[a]:
                    new = ax.right
                elif ax.kind is NfKind.NF3 and ax.left[0] in S[a]:
                    if (a, ax.right) not in R[ax.role]:
                        R[ax.role].add((a, ax.right))
                        changed = True
                elif ax.kind is NfKind.NF4:
                    if any(x == a and ax.left[0] in S[y] for x, y in R[ax.role]):
                        new = ax.right
                if new is not None and new not in S[a]:
                    S[a].add(new)
                    changed = True
    return S, R


@pytest.mark.parametrize("seed", range(40))
def test_matches_naive_fixpoint(seed):
    rng = random.Random(seed)
    axioms = random_normalized(rng, rng.randint(1, 12))
    closure = saturate(axioms, NAMES)
    S, R = naive_fixpoint(axioms, NAMES)
    for a in NAMES:
        assert closure.subsumers[a] == S[a]
    for r in ROLES:
        assert closure.links.get(r, set()) == R[r]


def _holds(ax, ext, rel):
    # ext: concept -> set of domain elements; rel: role -> set of pairs
    if ax.kind is NfKind.NF1:
        return ext[ax.left[0]] <= ext[ax.right]
    if ax.kind is NfKind.NF2:
        return ext[ax.left[0]] & ext[ax.left[1]] <= ext[ax.right]
    if ax.kind is NfKind.NF3:
        return all(any((x, y) in rel[ax.role] for y in ext[ax.right]) for x in ext[ax.left[0]])
    return {x for x, y in rel[ax.role] if y in ext[ax.left[0]]} <= ext[ax.right]


def _models(names, roles, size):
    dom = range(size)
    subsets = [frozenset(s) for k in range(size + 1) for s in itertools.combinations(dom, k)]
    pairs = [(x, y) for x in dom for y in dom]
    relations = [frozenset(p for p, bit in zip(pairs, bits) if bit) for bits in itertools.product((0, 1), repeat=len(pairs))]
    for exts in itertools.product(subsets, repeat=len(names)):
        for rels in itertools.product(relations, repeat=len(roles)):
            ext = dict(zip(names, exts))
            ext[Top()] = frozenset(dom)
            yield ext, dict(zip(roles, rels))


@pytest.mark.parametrize("seed", range(12))
def test_sound_against_small_models(seed):
    # every derived subsumption holds in every model of size <= 2
    rng = random.Random(100 + seed)
    names, roles = NAMES[:3], [":r"]
    axioms = random_normalized(rng, rng.randint(1, 6), names, roles)
    closure = saturate(axioms, names)
    derived = [(a, b) for a in names for b in closure.subsumers[a]]
    for size in (1, 2):
        for ext, rel in _models(names, roles, size):
            if all(_holds(ax, ext, rel) for ax in axioms):
                for a, b in derived:
                    assert ext[a] <= ext[b]


@pytest.mark.parametrize("seed", range(40))
def test_canonical_model_shows_completeness(seed):
    # the closure itself induces a model in which x_A lies in B exactly when B in S(A),
    # so any subsumption missing from S(A) is refuted
    rng = random.Random(seed)
    names = [Atomic(f":K{i}") for i in range(8)]
    axioms = random_normalized(rng, rng.randint(1, 20), names)
    closure = saturate(axioms, names)
    S = closure.subsumers
    ext = {c: {x for x in S if c in S[x]} for c in set(names) | {Top()} | {c for s in S.values() for c in s}}
    rel = {r: set() for r in ROLES}
    for r, pairs in closure.links.items():
        rel[r] = set(pairs)
    for ax in axioms:
        assert _holds(ax, ext, rel), ax
    for a in names:
        for b in names:
            assert (a in ext[b]) == (b in S[a])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10))
def test_adding_an_axiom_never_shrinks(seed, n):
    rng = random.Random(seed)
    axioms = random_normalized(rng, n)
    extra = random_normalized(rng, 1)
    before = saturate(axioms, NAMES).subsumers
    after = saturate(axioms + extra, NAMES).subsumers
    for a in NAMES:
        assert before[a] <= after[a]


def test_deterministic_output():
    rng = random.Random(4)
    axioms = random_normalized(rng, 15)
    assert entailed_nf1(axioms, NAMES) == entailed_nf1(list(reversed(axioms)), NAMES)
