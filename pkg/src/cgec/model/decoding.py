"""Inference: greedy and length-normalised beam search over the token head."""

from __future__ import annotations

from typing import Sequence

import torch

from ..core import BOS_ID, EOS_ID, MASK_ID, PAD_ID, UNK_ID, ContractError
from ..tagger import SemanticFeatureSeq
from .network import GecModel, pad_to

# never generated; EOS only ends a hypothesis
_BLOCKED = (PAD_ID, UNK_ID, BOS_ID, MASK_ID)


def _source_tensors(model: GecModel, sources: Sequence[Sequence[str]], features: Sequence[SemanticFeatureSeq]):
    for s, f in zip(sources, features):
        if len(s) != len(f):
            raise ContractError(f"{len(s)} characters but {len(f)} feature rows")
    k = model.cfg.class_levels
    src = pad_to([model.vocab.encode(s) for s in sources])
    pos = pad_to([f.pos for f in features], 0)
    cls = pad_to([[c for row in f.classes for c in row] for f in features], 0).reshape(len(sources), -1, k)
    return src, pos, cls, src == PAD_ID


def _log_probs(model: GecModel, tgt: torch.Tensor, memory: torch.Tensor, src_pad) -> torch.Tensor:
    hidden = model.decode(tgt, memory, src_pad)
    logits, _ = model.heads(hidden[:, -1])
    logp = torch.log_softmax(logits.double(), dim=-1)
    logp[:, list(_BLOCKED)] = float("-inf")
    return logp


def default_max_len(model: GecModel, src_len: int) -> int:
    return min(model.cfg.max_len, src_len + 10)


@torch.no_grad()
def greedy_decode_batch(
    model: GecModel,
    sources: Sequence[Sequence[str]],
    features: Sequence[SemanticFeatureSeq],
    max_len: int | None = None,
) -> list[list[str]]:
    if not sources:
        return []
    model.eval()
    src, pos, cls, src_pad = _source_tensors(model, sources, features)
    memory = model.encode(model.fuse(src, pos, cls), src_pad)
    limit = max_len or default_max_len(model, src.shape[1])
    if limit < 1:
        raise ContractError("max_len must be >= 1")
    tgt = torch.full((len(sources), 1), BOS_ID, dtype=torch.long)
    done = torch.zeros(len(sources), dtype=torch.bool)
    for _ in range(limit):
        nxt = _log_probs(model, tgt, memory, src_pad).argmax(-1)
        nxt = torch.where(done, torch.full_like(nxt, EOS_ID), nxt)
        tgt = torch.cat([tgt, nxt.unsqueeze(1)], dim=1)
        done |= nxt == EOS_ID
        if done.all():
            break
    out = []
    for row in tgt[:, 1:].tolist():
        if EOS_ID in row:
            row = row[: row.index(EOS_ID)]
        out.append(model.vocab.decode(row))
    return out


def greedy_decode(model: GecModel, src: Sequence[str], features: SemanticFeatureSeq, max_len: int | None = None) -> list[str]:
    return greedy_decode_batch(model, [src], [features], max_len)[0]


@torch.no_grad()
def beam_search_decode(
    model: GecModel,
    src: Sequence[str],
    features: SemanticFeatureSeq,
    beam: int,
    max_len: int | None = None,
) -> list[str]:
    """Beam search ranked by log-probability per generated token (EOS included)."""
    if beam < 1:
        raise ContractError("beam must be >= 1")
    limit = default_max_len(model, len(src)) if max_len is None else max_len
    if limit < 1:
        raise ContractError("max_len must be >= 1")
    model.eval()
    s, pos, cls, src_pad = _source_tensors(model, [src], [features])
    memory = model.encode(model.fuse(s, pos, cls), src_pad)
    alive: list[tuple[float, list[int]]] = [(0.0, [BOS_ID])]
    finished: list[tuple[float, list[int]]] = []
    for _ in range(limit):
        tgt = torch.tensor([p for _, p in alive], dtype=torch.long)
        logp = _log_probs(model, tgt, memory.expand(len(alive), -1, -1), src_pad.expand(len(alive), -1))
        flat = (torch.tensor([sc for sc, _ in alive], dtype=torch.float64).unsqueeze(1) + logp).flatten()
        V = logp.shape[1]
        # stable sort keeps (beam index, token id) order among equal scores
        order = torch.sort(-flat, stable=True).indices[:beam].tolist()
        nxt = []
        for idx in order:
            score = flat[idx].item()
            if score == float("-inf"):
                continue
            b, v = divmod(idx, V)
            prefix = alive[b][1] + [v]
            (finished if v == EOS_ID else nxt).append((score, prefix))
        alive = nxt
        if len(finished) >= beam or not alive:
            break
    finished.extend(alive)

    def normalised(item):
        score, prefix = item
        return score / (len(prefix) - 1)

    best = max(finished, key=normalised)[1][1:]
    if best and best[-1] == EOS_ID:
        best = best[:-1]
    return model.vocab.decode(best)
