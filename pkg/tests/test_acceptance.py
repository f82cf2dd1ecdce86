"""Acceptance checks. Each test prints one PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the lines next to the
pytest report. The GALEN check runs only when ``ONT_GALEN_DIR`` points at a
directory holding ``galen.ofn`` and ``labels.tsv``.
"""

import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from conftest import random_ontology
from ontembed import geometry as geo
from ontembed.dataset import prepare_dataset
from ontembed.evaluation import compute_metrics, rank_from_scores, score_points
from ontembed.geometry import BallSpec, PoincarePoint, hdist, hnorm, hrotate, hscale
from ontembed.normalize import NfKind, NormalizedAxiom, normalize
from ontembed.ontology import Atomic, Existential, load_labels, parse_ontology
from ontembed.reasoner import entailed_nf1, saturate
from ontembed.toy import run_toy
from ontembed.trainer import DEFAULT_LAMBDA_GRID, role_transform
from test_gradients import TOL, run_gradient_checks


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def _random_point(rng, spec):
    v = rng.normal(size=spec.dim)
    r = rng.uniform(0, 0.95) * spec.radius
    return PoincarePoint(v / np.linalg.norm(v) * r, spec)


def test_rotation_isometry(capsys):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        spec = BallSpec(dim=8, curvature=(0.25, 1.0, 4.0)[i % 3])
        x, y = _random_point(rng, spec), _random_point(rng, spec)
        theta = rng.uniform(-math.pi, math.pi, size=4)
        rx, ry = hrotate(theta, x), hrotate(theta, y)
        d, n = hdist(x, y), hnorm(x)
        worst = max(worst, abs(hdist(rx, ry) - d) / (1 + d), abs(hnorm(rx) - n) / (1 + n))
    elapsed = time.perf_counter() - start
    report(capsys, "rotation isometry", worst <= 1e-9 and elapsed < 5,
           f"max scaled error {worst:.2e} over 1000 triples in {elapsed:.2f}s")


def test_score_rank_invariance(capsys):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst, rank_changes = 0.0, 0
    for curvature in (0.25, 1.0, 4.0):
        spec = BallSpec(8, curvature)
        pts = geo.project(torch.from_numpy(rng.normal(size=(20, 8)) * 0.7), spec)
        theta = torch.from_numpy(rng.uniform(-math.pi, math.pi, size=4))
        moved = role_transform(theta, torch.tensor(1.0, dtype=torch.float64), pts, spec)
        for lam in DEFAULT_LAMBDA_GRID:
            s0 = score_points(pts.unsqueeze(1), pts.unsqueeze(0), lam, curvature).numpy()
            s1 = score_points(moved.unsqueeze(1), moved.unsqueeze(0), lam, curvature).numpy()
            worst = max(worst, float(np.max(np.abs(s0 - s1))))
            rank_changes += sum(
                rank_from_scores(s0[i], j) != rank_from_scores(s1[i], j) for i in range(20) for j in range(20)
            )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and rank_changes == 0 and elapsed < 5
    report(capsys, "score/rank invariance", ok,
           f"max score change {worst:.2e}, {rank_changes} rank changes, {elapsed:.2f}s")


def test_closed_form_geometry(capsys):
    rng = np.random.default_rng(99)
    worst = 0.0
    for i in range(1000):
        spec = BallSpec(dim=6, curvature=(0.25, 1.0, 4.0)[i % 3])
        x = _random_point(rng, spec)
        origin = PoincarePoint(np.zeros(6), spec)
        k = spec.curvature
        closed = 2 / math.sqrt(k) * math.atanh(math.sqrt(k) * np.linalg.norm(x.coords))
        worst = max(worst, abs(hdist(origin, x) - closed) / closed if closed else 0.0)
    scaled = hscale(2.0, PoincarePoint([0.5, 0.0], BallSpec(2)))
    scale_err = float(np.max(np.abs(scaled.coords - np.array([0.8, 0.0]))))
    report(capsys, "closed-form geometry", worst <= 1e-9 and scale_err <= 1e-12,
           f"max relative error {worst:.2e}; hscale(2,(0.5,0)) error {scale_err:.2e}")


def test_gradient_correctness(capsys):
    start = time.perf_counter()
    results = run_gradient_checks(100)
    elapsed = time.perf_counter() - start
    worst = {k: max(r[k] for r in results) for k in results[0]}
    covered = {"encoder.token_table", "encoder.out_weight", "theta_r", "k_r"} <= set(worst)
    ok = len(results) >= 100 and covered and max(worst.values()) <= TOL and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(capsys, "gradient correctness", ok, f"{len(results)} configs in {elapsed:.1f}s; worst {detail}")


def test_normalizer_soundness(capsys):
    mismatches = 0
    for seed in range(20):
        o = random_ontology(seed, n_axioms=30, depth=3)
        sig = sorted(o.named_concepts(), key=str)
        first, _ = normalize(o, order_seed=2 * seed + 1)
        second, _ = normalize(o, order_seed=2 * seed + 2)
        mismatches += entailed_nf1(first, sig, exclude_asserted=False) != entailed_nf1(second, sig, exclude_asserted=False)
    o = parse_ontology("SubClassOf(ObjectIntersectionOf(:Person ObjectSomeValuesFrom(:teach :Class)) :Teacher)")
    axioms, defs = normalize(o)
    person, cls, teacher = Atomic(":Person"), Atomic(":Class"), Atomic(":Teacher")
    (fresh,) = defs
    n = Atomic(fresh)
    expected = {
        NormalizedAxiom(NfKind.NF2, (person, n), teacher),
        NormalizedAxiom(NfKind.NF3, (n,), cls, ":teach"),
        NormalizedAxiom(NfKind.NF4, (cls,), n, ":teach"),
    }
    example_ok = len(axioms) == 3 and set(axioms) == expected and defs[fresh] == Existential(":teach", cls)
    report(capsys, "normalizer soundness", mismatches == 0 and example_ok,
           f"{mismatches}/20 orderings disagree; teacher example {'matches' if example_ok else 'differs'}")


def _closure(edges, nodes):
    reach = set(edges)
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if (i, k) in reach and (k, j) in reach:
                    reach.add((i, j))
    return {(a, b) for a, b in reach if a != b}


def test_reasoner_oracle(capsys):
    mismatches = 0
    for seed in range(30):
        rng = random.Random(seed)
        nodes = [Atomic(f":X{i}") for i in range(rng.randint(2, 20))]
        edges = {(rng.choice(nodes), rng.choice(nodes)) for _ in range(rng.randint(1, 50))}
        axioms = [NormalizedAxiom.nf1(a, b) for a, b in sorted(edges, key=str)]
        got = {(ax.left[0], ax.right) for ax in entailed_nf1(axioms, nodes, exclude_asserted=False)}
        mismatches += got != _closure(edges, nodes)
    a, b, c, b2 = (Atomic(x) for x in (":A", ":B", ":C", ":B2"))
    closure = saturate([
        NormalizedAxiom(NfKind.NF3, (a,), b, ":r"),
        NormalizedAxiom.nf1(b, b2),
        NormalizedAxiom(NfKind.NF4, (b2,), c, ":r"),
    ])
    pattern = c in closure.subsumers[a]
    report(capsys, "reasoner oracle", mismatches == 0 and pattern,
           f"{mismatches}/30 closures differ; monotonicity pattern {'derived' if pattern else 'missing'}")


def test_metrics(capsys):
    rep = compute_metrics([1, 2, 4])
    ok = abs(rep.mrr - 7 / 12) <= 1e-9 and abs(rep.mr - 7 / 3) <= 1e-12 and abs(rep.percent()["H@1"] - 100 / 3) <= 1e-9
    report(capsys, "metrics", ok, f"MRR {rep.mrr:.6f}, MR {rep.mr:.6f}, H@1 {rep.percent()['H@1']:.4f}%")


def test_end_to_end_toy_run(capsys):
    torch.set_num_threads(1)
    first = run_toy(seed=0)
    second = run_toy(seed=0)
    same = first.checkpoint == second.checkpoint and first.report.table() == second.report.table()
    ok = first.mrr_ratio >= 5 and first.loss_ratio < 0.5 and first.seconds < 60 and same
    report(capsys, "end-to-end toy run", ok,
           f"NF1 MRR {first.report.mrr:.3f} = {first.mrr_ratio:.2f}x random, loss ratio {first.loss_ratio:.3f}, "
           f"train {first.seconds:.1f}s, rerun {'identical' if same else 'differs'}")


GALEN_TABLE = {
    "NF1": (25610, 3200, 3203),
    "NF2": (11679, 1459, 1462),
    "NF3": (25299, 3161, 3165),
    "NF4": (6287, 785, 788),
}
GALEN_INFERRED = 335002


def test_galen_reference_sizes(capsys):
    root = os.environ.get("ONT_GALEN_DIR")
    if not root:
        with capsys.disabled():
            print("\nSKIP galen reference sizes: ONT_GALEN_DIR not set")
        pytest.skip("GALEN inputs not provided")
    root = Path(root)
    onto = parse_ontology((root / "galen.ofn").read_text(encoding="utf-8"))
    labels = load_labels((root / "labels.tsv").read_text(encoding="utf-8"))
    ds = prepare_dataset(onto, labels, seed=0, stratify=True)
    counts = ds.split.counts()
    ok = counts == GALEN_TABLE and len(ds.inference.test) == GALEN_INFERRED
    report(capsys, "galen reference sizes", ok, f"splits {counts}, inferred NF1 {len(ds.inference.test)}")
