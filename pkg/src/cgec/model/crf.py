"""Linear-chain CRF scoring: path score, log-partition (forward algorithm), Viterbi."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
from torch import nn

from ..core import ContractError


class CrfParams(nn.Module):
    """Square transition matrix over a tag alphabet; ``transitions[a, b]`` scores a -> b."""

    def __init__(self, num_tags: int):
        super().__init__()
        if num_tags < 1:
            raise ContractError("a CRF needs at least one tag")
        self.transitions = nn.Parameter(torch.zeros(num_tags, num_tags))

    @property
    def num_tags(self) -> int:
        return self.transitions.shape[0]


def _matrix(crf) -> torch.Tensor:
    return crf.transitions if isinstance(crf, CrfParams) else torch.as_tensor(crf)


def _check(trans: torch.Tensor, emissions: torch.Tensor) -> None:
    if emissions.dim() != 2 or emissions.shape[0] < 1:
        raise ContractError(f"emissions must be (m >= 1, T), got {tuple(emissions.shape)}")
    if trans.shape != (emissions.shape[1], emissions.shape[1]):
        raise ContractError(f"transition matrix {tuple(trans.shape)} does not match {emissions.shape[1]} tags")


def batch_sequence_score(trans: torch.Tensor, emissions: torch.Tensor, tags: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Scores of (B, L) tag paths under (B, L, T) emissions; ``mask`` marks a prefix of each row."""
    mask = mask.to(emissions.dtype)
    emit = emissions.gather(2, tags.unsqueeze(-1)).squeeze(-1)
    score = (emit * mask).sum(1)
    if tags.shape[1] > 1:
        step = trans[tags[:, :-1], tags[:, 1:]]
        score = score + (step * mask[:, 1:]).sum(1)
    return score


def batch_log_partition(trans: torch.Tensor, emissions: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """log Z per row via the forward recurrence in log space."""
    alpha = emissions[:, 0]
    for t in range(1, emissions.shape[1]):
        nxt = torch.logsumexp(alpha.unsqueeze(2) + trans.unsqueeze(0), dim=1) + emissions[:, t]
        alpha = torch.where(mask[:, t].unsqueeze(1), nxt, alpha)
    return torch.logsumexp(alpha, dim=1)


def batch_neg_log_likelihood(trans, emissions, tags, mask) -> torch.Tensor:
    return batch_log_partition(trans, emissions, mask) - batch_sequence_score(trans, emissions, tags, mask)


def crf_sequence_score(crf, emissions, tags: Sequence[int]) -> torch.Tensor:
    trans, emissions = _matrix(crf), torch.as_tensor(emissions)
    _check(trans, emissions)
    tags = torch.as_tensor(list(tags), dtype=torch.long)
    if tags.shape != (emissions.shape[0],):
        raise ContractError("need exactly one tag per emission row")
    if tags.max() >= emissions.shape[1] or tags.min() < 0:
        raise ContractError("tag index out of range")
    mask = torch.ones(1, len(tags), dtype=torch.bool)
    return batch_sequence_score(trans, emissions.unsqueeze(0), tags.unsqueeze(0), mask)[0]


def crf_log_partition(crf, emissions) -> torch.Tensor:
    trans, emissions = _matrix(crf), torch.as_tensor(emissions)
    _check(trans, emissions)
    mask = torch.ones(1, emissions.shape[0], dtype=torch.bool)
    return batch_log_partition(trans, emissions.unsqueeze(0), mask)[0]


def crf_neg_log_likelihood(crf, emissions, gold_tags: Sequence[int]) -> torch.Tensor:
    return crf_log_partition(crf, emissions) - crf_sequence_score(crf, emissions, gold_tags)


def viterbi_decode(crf, emissions) -> tuple[list[int], float]:
    """Best tag path and its score.  Ties keep the smallest tag index."""
    trans, emissions = _matrix(crf), torch.as_tensor(emissions)
    _check(trans, emissions)
    e = emissions.detach().cpu().numpy().astype(np.float64)
    m_ = trans.detach().cpu().numpy().astype(np.float64)
    delta = e[0].copy()
    back = []
    for t in range(1, len(e)):
        cand = delta[:, None] + m_
        idx = cand.argmax(axis=0)  # first maximum
        back.append(idx)
        delta = cand[idx, np.arange(len(idx))] + e[t]
    path = [int(delta.argmax())]
    for idx in reversed(back):
        path.append(int(idx[path[-1]]))
    path.reverse()
    score = float(crf_sequence_score(torch.as_tensor(m_), torch.as_tensor(e), path))
    return path, score
