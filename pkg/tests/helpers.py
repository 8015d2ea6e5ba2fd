"""Small builders shared by the test modules."""

from __future__ import annotations

import numpy as np
import torch

from cgec.core import PipelineConfig
from cgec.lexicons import load_bundled_lexicons
from cgec.synthetic import SyntheticSpec, load_grammar, make_synthetic_corpus
from cgec.tagger import Tagger
from cgec.train import build_model, collate, joint_loss, prepare_examples, vocab_for_pairs


def synthetic_pairs(size, seed=0, **rates):
    lex = load_bundled_lexicons()
    spec = SyntheticSpec(load_grammar(), size=size, seed=seed, **rates)
    return make_synthetic_corpus(spec, lex.phonetic, lex.pos)


def tiny_setup(cfg: PipelineConfig, size=3, seed=0):
    lex = load_bundled_lexicons()
    tagger = Tagger.from_lexicons(lex, cfg)
    pairs = [(p.source, p.target) for p in synthetic_pairs(size, seed, deletion_rate=0.2, substitution_rate=0.2)]
    model = build_model(cfg, vocab_for_pairs(pairs), tagger)
    batch = collate(model, prepare_examples(model, tagger, pairs))
    return model, tagger, batch


def gradient_check(model, batch, per_tensor=4, eps=1e-6, seed=0):
    """Worst relative error between autograd and central differences, per parameter."""
    model.double()
    model.eval()
    rng = np.random.default_rng(seed)
    with torch.no_grad():
        if model.crf is not None:
            model.crf.transitions.normal_(0, 0.5)
    model.zero_grad()
    joint_loss(model, batch).total.backward()
    report = {}
    for name, p in model.named_parameters():
        flat = p.data.view(-1)
        idx = rng.choice(flat.numel(), size=min(per_tensor, flat.numel()), replace=False)
        analytic, numeric = [], []
        for i in idx:
            orig = flat[i].item()
            vals = []
            for sign in (1, -1):
                flat[i] = orig + sign * eps
                with torch.no_grad():
                    vals.append(joint_loss(model, batch).total.item())
            flat[i] = orig
            numeric.append((vals[0] - vals[1]) / (2 * eps))
            analytic.append(p.grad.view(-1)[i].item())
        a, n = np.array(analytic), np.array(numeric)
        scale = max(np.abs(a).max(), np.abs(n).max(), 1e-8)
        report[name] = float(np.abs(a - n).max() / scale)
    return report


# -- acceptance bookkeeping --------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, str]] = {}


class criterion:
    """Record PASS/FAIL for an acceptance criterion around a block of assertions."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        note = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE[self.number] = (status, f"{self.title} ({note})" if note else self.title)
        print(f"criterion {self.number:2d} {status}: {ACCEPTANCE[self.number][1]}")
        return False
