"""Corpus diagnostics on how POS tags behave around errors.

Tokens are words from the tagger's segmentation.  A source word is a
Corr-token when it lies on the LCS with the target words, an Err-token
otherwise; a Corr-token's tag counts as correct when it equals the tag of the
target word it is matched to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .alignment import CORR, ERR, lcs_pairs

TaggerFn = Callable[[Sequence[str]], list[tuple[str, str]]]


@dataclass
class CorpusAnalysis:
    erroneous_sentences: int
    divergent_sentences: int
    corr_tokens: int
    corr_tokens_correct_pos: int
    wrong_pos_distances: list[int]
    correct_pos_distances: list[int]
    labels: list[list[str]] = field(default_factory=list)  # Corr/Err per source word, erroneous pairs only

    @property
    def divergence_rate(self) -> float:
        """Share of erroneous sentences whose tag sequence differs from the target's."""
        if not self.erroneous_sentences:
            return 0.0
        return self.divergent_sentences / self.erroneous_sentences

    @property
    def corr_pos_accuracy(self) -> float:
        return self.corr_tokens_correct_pos / self.corr_tokens if self.corr_tokens else 0.0

    @property
    def mean_wrong_pos_distance(self) -> float:
        d = self.wrong_pos_distances
        return sum(d) / len(d) if d else math.nan

    @property
    def mean_correct_pos_distance(self) -> float:
        d = self.correct_pos_distances
        return sum(d) / len(d) if d else math.nan

    def tsv(self) -> str:
        rows = [
            ("erroneous_sentences", self.erroneous_sentences),
            ("divergence_rate", f"{self.divergence_rate:.6f}"),
            ("corr_tokens", self.corr_tokens),
            ("corr_pos_accuracy", f"{self.corr_pos_accuracy:.6f}"),
            ("mean_distance_wrong_pos", f"{self.mean_wrong_pos_distance:.6f}"),
            ("mean_distance_correct_pos", f"{self.mean_correct_pos_distance:.6f}"),
        ]
        return "".join(f"{k}\t{v}\n" for k, v in rows)


def analyze_corpus(corpus: Iterable[tuple[Sequence[str], Sequence[str]]], tagger: TaggerFn) -> CorpusAnalysis:
    out = CorpusAnalysis(0, 0, 0, 0, [], [])
    for src, tgt in corpus:
        if list(src) == list(tgt):
            continue  # only erroneous pairs enter the statistics
        s_tagged, t_tagged = tagger(src), tagger(tgt)
        s_words = [w for w, _ in s_tagged]
        t_words = [w for w, _ in t_tagged]
        s_tags = [t for _, t in s_tagged]
        t_tags = [t for _, t in t_tagged]
        out.erroneous_sentences += 1
        out.divergent_sentences += s_tags != t_tags
        matched = lcs_pairs(s_words, t_words)
        corr = {i for i, _ in matched}
        errs = [i for i in range(len(s_words)) if i not in corr]
        out.labels.append([CORR if i in corr else ERR for i in range(len(s_words))])
        for i, j in matched:
            ok = s_tags[i] == t_tags[j]
            out.corr_tokens += 1
            out.corr_tokens_correct_pos += ok
            if errs:
                dist = min(abs(i - e) for e in errs)
                (out.correct_pos_distances if ok else out.wrong_pos_distances).append(dist)
    return out


def pos_divergence_rate(corpus, tagger: TaggerFn) -> float:
    return analyze_corpus(corpus, tagger).divergence_rate


def err_distance_stats(corpus, tagger: TaggerFn) -> tuple[float, float]:
    """(mean distance wrong-POS Corr -> nearest Err, same for correct-POS Corr)."""
    a = analyze_corpus(corpus, tagger)
    return a.mean_wrong_pos_distance, a.mean_correct_pos_distance
