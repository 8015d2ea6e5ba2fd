"""Masked character language models.

Any object with a ``chars`` sequence and a ``scores(seq, pos)`` method returning
one finite score per entry of ``chars`` can drive spelling correction.  The
reference implementation here is a count-based model over symmetric context
windows with interpolated backoff.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .core import BOS, EOS, MASK, ContractError, ConfigError, is_reserved


class MaskedLM(Protocol):
    chars: Sequence[str]

    def scores(self, seq: Sequence[str], pos: int) -> np.ndarray: ...


@dataclass
class MaskedPrediction:
    candidates: list[tuple[str, float]]

    @property
    def chars(self) -> list[str]:
        return [c for c, _ in self.candidates]

    def __len__(self) -> int:
        return len(self.candidates)


def top_k_candidates(model: MaskedLM, seq: Sequence[str], pos: int, k: int) -> MaskedPrediction:
    """Top ``k`` characters for the masked slot; ties go to the lower codepoint."""
    if not 0 <= pos < len(seq):
        raise ContractError(f"position {pos} outside sequence of length {len(seq)}")
    if seq[pos] != MASK:
        raise ContractError(f"position {pos} holds {seq[pos]!r}, not {MASK}")
    if k < 1:
        raise ContractError("k must be >= 1")
    chars = list(model.chars)
    scores = np.asarray(model.scores(seq, pos), dtype=np.float64)
    codepoints = np.fromiter((ord(c) for c in chars), dtype=np.int64, count=len(chars))
    order = np.lexsort((codepoints, -scores))[:k]
    return MaskedPrediction([(chars[i], float(scores[i])) for i in order])


def _context(seq: Sequence[str], pos: int, r: int) -> tuple[str, ...]:
    left = [seq[i] if i >= 0 else BOS for i in range(pos - r, pos)]
    right = [seq[i] if i < len(seq) else EOS for i in range(pos + 1, pos + 1 + r)]
    return tuple(left + right)


@dataclass
class NGramMlmParams:
    """Counts of the centre character given ``r`` characters either side, r = 1..w.

    ``tables[r - 1][context][char]`` is the count; ``unigram`` backs off the
    whole chain.
    """

    w: int = 2
    alpha: float = 1.0
    unigram: Counter = field(default_factory=Counter)
    tables: list[dict[tuple[str, ...], Counter]] = field(default_factory=list)

    def __post_init__(self):
        if self.w < 1:
            raise ConfigError("window radius must be >= 1")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        while len(self.tables) < self.w:
            self.tables.append(defaultdict(Counter))

    def merge(self, other: "NGramMlmParams") -> "NGramMlmParams":
        if (self.w, self.alpha) != (other.w, other.alpha):
            raise ConfigError("can only merge models with equal window and alpha")
        out = NGramMlmParams(self.w, self.alpha, self.unigram + other.unigram)
        for r in range(self.w):
            for table in (self.tables[r], other.tables[r]):
                for ctx, counts in table.items():
                    out.tables[r][ctx].update(counts)
        return out


def train_ngram_mlm(corpus: Sequence[Sequence[str]], w: int = 2, alpha: float = 1.0) -> NGramMlmParams:
    if not corpus:
        raise ConfigError("cannot train on an empty corpus")
    params = NGramMlmParams(w, alpha)
    for seq in corpus:
        for pos, ch in enumerate(seq):
            if is_reserved(ch):
                continue
            params.unigram[ch] += 1
            for r in range(1, w + 1):
                params.tables[r - 1][_context(seq, pos, r)][ch] += 1
    return params


class NGramMaskedLM:
    """Scores P(c | context) with Dirichlet backoff from radius w down to unigrams.

    P_0(c) = (n(c) + alpha) / (N + alpha |V|) and, for each radius r,
    P_r(c) = (n_r(c) + alpha P_{r-1}(c)) / (N_r + alpha), where n_r counts the
    centre character in the exact radius-r context.  An unseen context gives
    P_r = P_{r-1}.  For alpha <= 1 the ranking of two characters seen in the
    widest context with different counts follows their counts.
    """

    def __init__(self, params: NGramMlmParams):
        self.params = params
        self.chars = sorted(params.unigram, key=ord)
        self._index = {c: i for i, c in enumerate(self.chars)}
        uni = np.array([params.unigram[c] for c in self.chars], dtype=np.float64)
        a = params.alpha
        self._base = (uni + a) / (uni.sum() + a * len(self.chars)) if self.chars else uni

    def _counts(self, counter: Counter) -> np.ndarray:
        vec = np.zeros(len(self.chars))
        for ch, n in counter.items():
            vec[self._index[ch]] = n
        return vec

    def distribution(self, seq: Sequence[str], pos: int) -> np.ndarray:
        p = self._base
        a = self.params.alpha
        for r in range(1, self.params.w + 1):
            counter = self.params.tables[r - 1].get(_context(seq, pos, r))
            if not counter:
                continue
            counts = self._counts(counter)
            p = (counts + a * p) / (counts.sum() + a)
        return p

    def scores(self, seq: Sequence[str], pos: int) -> np.ndarray:
        return self.distribution(seq, pos)


# -- serialization into the tensor container -----------------------------------

_SENTINEL = {BOS: -1.0, EOS: -2.0}
_SENTINEL_BACK = {-1: BOS, -2: EOS}


def _code(tok: str) -> float:
    return _SENTINEL.get(tok) if tok in _SENTINEL else float(ord(tok))


def _decode(code: float) -> str:
    code = int(code)
    return _SENTINEL_BACK.get(code) or chr(code)


def mlm_to_tensors(params: NGramMlmParams) -> dict[str, np.ndarray]:
    """Flatten the count tables into float32 arrays (codepoints and counts stay exact below 2**24)."""
    chars = sorted(params.unigram, key=ord)
    index = {c: i for i, c in enumerate(chars)}
    out = {
        "mlm.meta": np.array([params.w, params.alpha], dtype=np.float32),
        "mlm.chars": np.array([ord(c) for c in chars], dtype=np.float32),
        "mlm.unigram": np.array([params.unigram[c] for c in chars], dtype=np.float32),
    }
    for r in range(1, params.w + 1):
        table = params.tables[r - 1]
        contexts = sorted(table, key=lambda ctx: [_code(t) for t in ctx])
        ctx_arr = np.array([[_code(t) for t in ctx] for ctx in contexts], dtype=np.float32).reshape(-1, 2 * r)
        triples = [
            (ci, index[ch], n)
            for ci, ctx in enumerate(contexts)
            for ch, n in sorted(table[ctx].items(), key=lambda kv: ord(kv[0]))
        ]
        out[f"mlm.r{r}.contexts"] = ctx_arr
        out[f"mlm.r{r}.counts"] = np.array(triples, dtype=np.float32).reshape(-1, 3)
    return out


def mlm_from_tensors(tensors: dict[str, np.ndarray]) -> NGramMlmParams:
    w, alpha = tensors["mlm.meta"].tolist()
    chars = [chr(int(c)) for c in tensors["mlm.chars"]]
    params = NGramMlmParams(int(w), float(alpha))
    params.unigram = Counter({c: int(n) for c, n in zip(chars, tensors["mlm.unigram"])})
    for r in range(1, params.w + 1):
        contexts = [tuple(_decode(v) for v in row) for row in tensors[f"mlm.r{r}.contexts"]]
        for ci, ch, n in tensors[f"mlm.r{r}.counts"]:
            params.tables[r - 1][contexts[int(ci)]][chars[int(ch)]] = int(n)
    return params
