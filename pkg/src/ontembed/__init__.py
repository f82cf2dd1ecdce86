"""Hyperbolic embeddings of EL ontologies from concept verbalizations."""

from .geometry import BallSpec, PoincarePoint, hdist, hnorm, hrotate, hscale, project_to_ball
from .normalize import NfKind, NormalizedAxiom, normalize
from .ontology import Axiom, LabelMap, Ontology, parse_concept, parse_ontology
from .reasoner import entailed_nf1, saturate
from .trainer import TrainConfig, train
from .verbalize import verbalize

__all__ = [
    "Axiom",
    "BallSpec",
    "LabelMap",
    "NfKind",
    "NormalizedAxiom",
    "Ontology",
    "PoincarePoint",
    "TrainConfig",
    "entailed_nf1",
    "hdist",
    "hnorm",
    "hrotate",
    "hscale",
    "normalize",
    "parse_concept",
    "parse_ontology",
    "project_to_ball",
    "saturate",
    "train",
    "verbalize",
]
