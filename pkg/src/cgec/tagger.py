"""Max-match segmentation, lexicon POS tagging and per-character semantic features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import NONE_CLASS, PipelineConfig, PosTagSet
from .lexicons import Lexicons, PosLexicon, SemClassDict, lookup_semclass

FALLBACK_TAG = "other"


def segment_maxmatch(seq: Sequence[str], lex: PosLexicon) -> list[str]:
    """Greedy forward maximum matching; unmatched characters become one-character words."""
    words = []
    i, n = 0, len(seq)
    while i < n:
        for size in range(min(lex.max_word_len, n - i), 0, -1):
            cand = "".join(seq[i:i + size])
            if size == 1 or cand in lex.words:
                words.append(cand)
                i += size
                break
    return words


def pos_tag(words: Sequence[str], lex: PosLexicon) -> list[str]:
    tags = []
    for w in words:
        tag = lex.words.get(w) or lex.char_tags.get(w[:1])
        tags.append(tag or FALLBACK_TAG)
    return tags


@dataclass
class SemanticFeatureSeq:
    """Word-level features broadcast to every character of the word."""

    pos: list[int]
    classes: list[tuple[int, ...]]  # per character, one id per level; 0 is NONE
    word_index: list[int]
    word_start: list[bool]

    def __len__(self) -> int:
        return len(self.pos)

    def level(self, l: int) -> list[int]:
        """Class ids at a 1-based level."""
        return [c[l - 1] for c in self.classes]


class Tagger:
    """Deterministic stand-in for an external segmenter/tagger plus a class dictionary."""

    def __init__(self, pos_lex: PosLexicon, semclass: SemClassDict, class_levels: int = 3):
        self.pos_lex = pos_lex
        self.semclass = semclass
        self.k = class_levels
        if FALLBACK_TAG not in self.tagset:
            raise ValueError(f"the tag set must contain {FALLBACK_TAG!r}")
        # index 0 of every level is NONE
        self.class_alphabets = [[NONE_CLASS] + semclass.level_codes(l) for l in range(1, self.k + 1)]
        self._class_index = [{c: i for i, c in enumerate(alpha)} for alpha in self.class_alphabets]

    @classmethod
    def from_lexicons(cls, lex: Lexicons, cfg: PipelineConfig = PipelineConfig()) -> "Tagger":
        return cls(lex.pos, lex.semclass, cfg.class_levels)

    @property
    def tagset(self) -> PosTagSet:
        return self.pos_lex.tagset

    def __call__(self, seq: Sequence[str]) -> list[tuple[str, str]]:
        words = segment_maxmatch(seq, self.pos_lex)
        return list(zip(words, pos_tag(words, self.pos_lex)))

    def features(self, seq: Sequence[str]) -> SemanticFeatureSeq:
        pos, classes, widx, start = [], [], [], []
        for wi, (word, tag) in enumerate(self(seq)):
            path = lookup_semclass(self.semclass, word, self.k)
            ids = tuple(self._class_index[l].get(code, 0) for l, code in enumerate(path.levels))
            for ci in range(len(word)):
                pos.append(self.tagset.index(tag))
                classes.append(ids)
                widx.append(wi)
                start.append(ci == 0)
        return SemanticFeatureSeq(pos, classes, widx, start)

    def tsv(self, seq: Sequence[str]) -> str:
        feats = self.features(seq)
        rows = []
        for i, ch in enumerate(seq):
            path = "/".join(self.class_alphabets[l][c] for l, c in enumerate(feats.classes[i]))
            rows.append(f"{ch}\t{feats.word_index[i]}\t{self.tagset.tags[feats.pos[i]]}\t{path}")
        return "\n".join(rows) + ("\n" if rows else "")


def feature_sequence(seq: Sequence[str], lexicons: Lexicons, cfg: PipelineConfig = PipelineConfig()) -> SemanticFeatureSeq:
    return Tagger.from_lexicons(lexicons, cfg).features(seq)
