"""Versioned JSON checkpoints.

Floats are written with ``repr`` precision, so a save/load round trip is
exact and two runs with the same seed produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch

from .encoder import TextEncoder, Vocab
from .geometry import DTYPE, BallSpec
from .ontology import LabelMap, parse_concept, to_functional
from .trainer import OntModel, TrainConfig

FORMAT = "ontembed-checkpoint"
VERSION = 1


def checkpoint_dict(model: OntModel, cfg: TrainConfig, lam: float | None = None, epoch_losses=None) -> dict:
    params = {name: p.detach().tolist() for name, p in model.named_parameters()}
    return {
        "format": FORMAT,
        "version": VERSION,
        "ball": model.spec.to_dict(),
        "config": cfg.to_dict(),
        "lambda": lam,
        "vocab": model.encoder.vocab.tokens,
        "params": params,
        "labels": {
            "concepts": dict(sorted(model.labels.concept_labels.items())),
            "roles": dict(sorted(model.labels.role_labels.items())),
        },
        "defs": {iri: to_functional(c) for iri, c in model.defs.items()},
        "epoch_losses": list(epoch_losses or []),
    }


def dumps(model: OntModel, cfg: TrainConfig, lam: float | None = None, epoch_losses=None) -> str:
    return json.dumps(checkpoint_dict(model, cfg, lam, epoch_losses), indent=1, ensure_ascii=False) + "\n"


def save_checkpoint(path, model: OntModel, cfg: TrainConfig, lam: float | None = None, epoch_losses=None) -> None:
    Path(path).write_text(dumps(model, cfg, lam, epoch_losses), encoding="utf-8")


class Checkpoint:
    def __init__(self, model: OntModel, config: TrainConfig, lam: float | None, epoch_losses: list[float]):
        self.model = model
        self.config = config
        self.lam = lam
        self.epoch_losses = epoch_losses


def loads(text: str) -> Checkpoint:
    data = json.loads(text)
    if data.get("format") != FORMAT:
        raise ValueError("not an ontembed checkpoint")
    if data.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {data.get('version')}")
    cfg = TrainConfig.from_dict(data["config"])
    spec = BallSpec(**data["ball"])
    labels = LabelMap(dict(data["labels"]["concepts"]), dict(data["labels"]["roles"]))
    defs = {iri: parse_concept(expr) for iri, expr in data["defs"].items()}
    encoder = TextEncoder(Vocab(list(data["vocab"])), spec, cfg.d_tok, cfg.seed, cfg.init_scale)
    model = OntModel(encoder, labels, defs, cfg.seed, cfg.init_scale)
    state = {name: torch.tensor(values, dtype=DTYPE) for name, values in data["params"].items()}
    model.load_state_dict(state)
    return Checkpoint(model, cfg, data.get("lambda"), list(data.get("epoch_losses", [])))


def load_checkpoint(path) -> Checkpoint:
    return loads(Path(path).read_text(encoding="utf-8"))
