import random

import pytest
import torch
from hypothesis import strategies as st

from ontembed.ontology import Atomic, Axiom, Bottom, Conjunction, Existential, LabelMap, Nominal, Ontology, Top

torch.set_num_threads(1)

NAMES = [f":C{i}" for i in range(8)]
ROLES = [":r", ":s"]


def random_concept(rng: random.Random, depth: int, names=NAMES, roles=ROLES):
    if depth == 0 or rng.random() < 0.35:
        u = rng.random()
        if u < 0.04:
            return Top()
        if u < 0.06:
            return Nominal(":ind")
        return Atomic(rng.choice(names))
    if rng.random() < 0.5:
        return Conjunction(random_concept(rng, depth - 1, names, roles), random_concept(rng, depth - 1, names, roles))
    return Existential(rng.choice(roles), random_concept(rng, depth - 1, names, roles))


def random_ontology(seed: int, n_axioms: int = 30, depth: int = 3, names=NAMES, roles=ROLES) -> Ontology:
    rng = random.Random(seed)
    n = rng.randint(1, n_axioms)
    return Ontology(tuple(
        Axiom(random_concept(rng, depth, names, roles), random_concept(rng, depth, names, roles)) for _ in range(n)
    ))


def concepts(depth: int = 3):
    leaf = st.one_of(
        st.sampled_from(NAMES).map(Atomic),
        st.just(Top()),
        st.just(Bottom()),
        st.just(Nominal(":ind")),
    )
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.builds(Conjunction, inner, inner),
            st.builds(Existential, st.sampled_from(ROLES), inner),
        ),
        max_leaves=2 ** depth,
    )


def full_labels(names=NAMES, roles=ROLES) -> LabelMap:
    labels = LabelMap()
    for n in names + [":ind"]:
        labels.concept_labels[n] = n[1:].lower()
    for r in roles:
        labels.role_labels[r] = "has " + r[1:]
    return labels


@pytest.fixture
def labels() -> LabelMap:
    return full_labels()
