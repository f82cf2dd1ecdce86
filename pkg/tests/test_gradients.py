"""Analytic gradients of the full training loss against central finite differences."""

import random
import time

import numpy as np
import pytest
import torch

from ontembed.normalize import normalize
from ontembed.ontology import Atomic, Axiom, Conjunction, Existential, LabelMap, Ontology
from ontembed.trainer import Batch, TrainConfig, build_model, total_loss

STEP = 1e-4
TOL = 1e-4
WORDS = ["red", "cat", "dog"]


def micro_config(seed):
    rng = random.Random(seed)
    names = [f":K{i}" for i in range(rng.randint(3, 5))]
    labels = LabelMap({n: " ".join(rng.sample(WORDS, rng.randint(1, 2))) for n in names}, {":r": "owns", ":s": "eats"})

    def atom():
        return Atomic(rng.choice(names))

    axioms = [
        Axiom(atom(), atom()),
        Axiom(atom(), Existential(rng.choice([":r", ":s"]), atom())),
        Axiom(Conjunction(atom(), atom()), atom()),
        Axiom(Existential(rng.choice([":r", ":s"]), atom()), atom()),
    ]
    normalized, defs = normalize(Ontology(tuple(axioms)))
    dim = rng.choice([2, 4, 6, 8])
    cfg = TrainConfig(dim=dim, d_tok=rng.randint(2, 4), seed=seed, init_scale=0.6)
    model = build_model(normalized, labels, defs, cfg)
    assert len(model.encoder.vocab) <= 10
    with torch.no_grad():
        # move the role head away from the identity so theta and k matter
        model.role_head.bias.uniform_(-1.0, 1.0, generator=torch.Generator().manual_seed(seed))
    pool = sorted({c for ax in normalized for c in (*ax.left, ax.right)}, key=str)
    batch = Batch()
    for ax in normalized:
        batch.axioms.append((ax.sub, ax.sup))
        batch.axiom_negs.append([n for n in pool if n not in (ax.sub, ax.sup)][:1] or [pool[0]])
    exs = sorted({ax.sub for ax in normalized if isinstance(ax.sub, Existential)}
                 | {ax.sup for ax in normalized if isinstance(ax.sup, Existential)}, key=str)
    for ex in exs:
        batch.existentials.append(ex)
        batch.existential_negs.append(([rng.choice(pool)], [rng.choice(pool)]))
    cjs = sorted({ax.sub for ax in normalized if isinstance(ax.sub, Conjunction)}, key=str)
    for cj in cjs:
        batch.conjunctions.append(cj)
        batch.conjunction_negs.append(([rng.choice(pool)], [rng.choice(pool)]))
    alpha, beta = rng.uniform(0.1, 3.0), rng.uniform(0.1, 1.0)
    return model, batch, alpha, beta


def finite_differences(model, batch, alpha, beta, param):
    grad = torch.zeros_like(param)
    flat, gflat = param.data.view(-1), grad.view(-1)
    kinks = 0
    with torch.no_grad():
        base = total_loss(model, batch, alpha, beta).item()
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + STEP
            up = total_loss(model, batch, alpha, beta).item()
            flat[i] = orig - STEP
            down = total_loss(model, batch, alpha, beta).item()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * STEP)
            # a hinge switching inside the stencil shows up as disagreeing one-sided slopes
            if abs((up - base) - (base - down)) > 1e-3 * STEP + 1e-6 * abs(up - down):
                kinks += 1
    return grad, kinks


def rel_error(a, b):
    return (a - b).norm().item() / max(a.norm().item(), b.norm().item(), 1e-12)


def check_config(seed):
    model, batch, alpha, beta = micro_config(seed)
    loss = total_loss(model, batch, alpha, beta)
    model.zero_grad()
    loss.backward()
    named = dict(model.named_parameters())
    m = model.spec.dim // 2
    errors = {}
    for name, param in named.items():
        fd, kinks = finite_differences(model, batch, alpha, beta, param)
        if kinks:
            return None
        analytic = param.grad
        if name == "role_head.bias":
            # the bias adds straight onto (theta_r, k_r), so its gradient is theirs
            errors["theta_r"] = rel_error(analytic[:m], fd[:m])
            errors["k_r"] = rel_error(analytic[m:], fd[m:])
        else:
            errors[name] = rel_error(analytic, fd)
    return errors


def run_gradient_checks(n_configs=100, max_seed=1000):
    results = []
    seed = 0
    while len(results) < n_configs and seed < max_seed:
        errors = check_config(seed)
        seed += 1
        if errors is not None:
            results.append(errors)
    return results


def test_gradients_match_finite_differences():
    start = time.perf_counter()
    results = run_gradient_checks()
    elapsed = time.perf_counter() - start
    assert len(results) >= 100
    worst = {k: max(r[k] for r in results) for k in results[0]}
    assert set(worst) == {
        "encoder.token_table", "encoder.out_weight", "encoder.out_bias", "role_head.weight", "theta_r", "k_r",
    }
    assert all(v <= TOL for v in worst.values()), worst
    assert elapsed < 60


def test_theta_and_k_receive_gradient():
    model, batch, alpha, beta = micro_config(3)
    total_loss(model, batch, alpha, beta).backward()
    assert model.role_head.bias.grad.abs().sum() > 0
