"""Inspection of trained representations: POS-to-word neighbours and CRF transitions."""

from __future__ import annotations

import warnings

import numpy as np
import torch

from ..core import RESERVED


def _pos_vectors(model) -> np.ndarray:
    feats = model.features
    with torch.no_grad():
        table = feats.pos.weight.detach().double()
        if feats.mode == "accumulate":
            table = feats.proj[0].weight.detach().double() @ table.T
            return table.T.numpy()
    out = np.zeros((table.shape[0], model.cfg.d_model))
    out[:, : table.shape[1]] = table.numpy()
    return out


def pos_embedding_neighbors(model, top_n: int = 3) -> dict[str, list[tuple[str, float]]]:
    """For each POS tag, the ``top_n`` word-embedding rows with highest cosine similarity.

    POS vectors shorter than the word embeddings are zero-padded.  Reserved
    tokens and zero-norm rows are skipped.
    """
    tags = model.tagset.tags
    if top_n <= 0:
        return {t: [] for t in tags}
    words = model.word_emb.weight.detach().double().numpy()
    tokens = model.vocab.tokens
    keep = [i for i, t in enumerate(tokens) if t not in RESERVED]
    norms = np.linalg.norm(words, axis=1)
    zero_words = [tokens[i] for i in keep if norms[i] == 0]
    if zero_words:
        warnings.warn(f"skipping {len(zero_words)} zero-norm word vectors", RuntimeWarning, stacklevel=2)
    keep = [i for i in keep if norms[i] > 0]
    pos = _pos_vectors(model)
    out = {}
    for t, vec in zip(tags, pos):
        n = np.linalg.norm(vec)
        if n == 0:
            warnings.warn(f"POS vector for {t!r} has zero norm", RuntimeWarning, stacklevel=2)
            out[t] = []
            continue
        sims = words[keep] @ vec / (norms[keep] * n)
        order = np.lexsort((np.arange(len(keep)), -sims))[:top_n]
        out[t] = [(tokens[keep[i]], float(sims[i])) for i in order]
    return out


def format_neighbors(neighbors: dict[str, list[tuple[str, float]]]) -> str:
    lines = ["tag\trank\ttoken\tcosine"]
    for tag, rows in neighbors.items():
        for rank, (tok, sim) in enumerate(rows, 1):
            lines.append(f"{tag}\t{rank}\t{tok}\t{sim:.6f}")
    return "\n".join(lines) + "\n"


def transition_matrix(model) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Tag labels, raw transition scores and their row-wise softmax."""
    if model.crf is None:
        raise ValueError("the model has no CRF layer")
    raw = model.crf.transitions.detach().double().numpy().copy()
    shifted = raw - raw.max(axis=1, keepdims=True)
    prob = np.exp(shifted)
    prob /= prob.sum(axis=1, keepdims=True)
    return aux_label_names(model), raw, prob


def aux_label_names(model) -> list[str]:
    task = model.cfg.aux_task
    if task == "class_l1":
        return list(model.class_alphabets[0])
    if task == "class_l2":
        return list(model.class_alphabets[1])
    return list(model.tagset.tags)


def export_transition_matrix(model) -> str:
    """TSV with a ``raw`` block then a ``softmax`` block, rows = previous tag."""
    labels, raw, prob = transition_matrix(model)
    lines = []
    for name, mat in (("raw", raw), ("softmax", prob)):
        lines.append(name + "\t" + "\t".join(labels))
        for label, row in zip(labels, mat):
            lines.append(label + "\t" + "\t".join(f"{v:.6g}" for v in row))
    return "\n".join(lines) + "\n"
