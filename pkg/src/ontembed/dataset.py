"""Prepared dataset directories.

``prepare_dataset`` normalizes an ontology and derives both task splits.
``write_dataset`` lays them out as::

    all.ofn                 every normalized axiom (inference-task training set)
    train.ofn valid.ofn test.ofn          prediction-task split
    inference_valid.ofn inference_test.ofn  entailed NF1 subsumptions
    defs.tsv                fresh name <TAB> definition
    labels.tsv              IRI <TAB> concept|role <TAB> label
    signature.txt           named concepts of the original ontology, one per line
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .evaluation import DatasetSplit, InferenceSets, build_inference_sets, split_dataset
from .normalize import NormalizedAxiom, dump_defs, load_defs, normalize, normalized_from_ontology
from .ontology import (
    Concept,
    LabelMap,
    Ontology,
    concept_key,
    dump_labels,
    load_labels,
    parse_concept,
    parse_ontology,
    serialize_ontology,
    to_functional,
)

TASKS = ("prediction", "inference")


@dataclass
class Dataset:
    labels: LabelMap
    defs: dict[str, Concept]
    axioms: list[NormalizedAxiom]
    signature: list[Concept]
    split: DatasetSplit
    inference: InferenceSets

    def task_sets(self, task: str) -> tuple[list[NormalizedAxiom], list[NormalizedAxiom], list[NormalizedAxiom]]:
        if task == "prediction":
            return self.split.train, self.split.valid, self.split.test
        if task == "inference":
            return self.inference.train, self.inference.valid, self.inference.test
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")


def prepare_dataset(
    ontology: Ontology,
    labels: LabelMap,
    seed: int = 0,
    n_valid: int = 1000,
    stratify: bool = False,
) -> Dataset:
    axioms, defs = normalize(ontology)
    signature = sorted(ontology.named_concepts(), key=concept_key)
    split = split_dataset(axioms, seed, stratify=stratify)
    inference = build_inference_sets(axioms, signature, seed, n_valid=n_valid)
    return Dataset(labels, defs, axioms, signature, split, inference)


def _write_axioms(path: Path, axioms: list[NormalizedAxiom]) -> None:
    path.write_text(serialize_ontology(ax.to_axiom() for ax in axioms), encoding="utf-8")


def read_normalized(path) -> list[NormalizedAxiom]:
    return normalized_from_ontology(parse_ontology(Path(path).read_text(encoding="utf-8")))


def write_dataset(ds: Dataset, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    _write_axioms(out / "all.ofn", ds.axioms)
    _write_axioms(out / "train.ofn", ds.split.train)
    _write_axioms(out / "valid.ofn", ds.split.valid)
    _write_axioms(out / "test.ofn", ds.split.test)
    _write_axioms(out / "inference_valid.ofn", ds.inference.valid)
    _write_axioms(out / "inference_test.ofn", ds.inference.test)
    (out / "defs.tsv").write_text(dump_defs(ds.defs), encoding="utf-8")
    (out / "labels.tsv").write_text(dump_labels(ds.labels), encoding="utf-8")
    (out / "signature.txt").write_text("".join(to_functional(c) + "\n" for c in ds.signature), encoding="utf-8")
    return out


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"dataset directory {d} does not exist")
    read = lambda name: (d / name).read_text(encoding="utf-8")  # noqa: E731
    axioms = read_normalized(d / "all.ofn")
    signature = [parse_concept(line) for line in read("signature.txt").splitlines() if line.strip()]
    split = DatasetSplit(read_normalized(d / "train.ofn"), read_normalized(d / "valid.ofn"), read_normalized(d / "test.ofn"))
    inference = InferenceSets(axioms, read_normalized(d / "inference_valid.ofn"), read_normalized(d / "inference_test.ofn"))
    return Dataset(load_labels(read("labels.tsv")), load_defs(read("defs.tsv")), axioms, signature, split, inference)
