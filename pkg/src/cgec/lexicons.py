"""Phonetic, frequency, POS and semantic-class resources."""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import NONE_CLASS, DataError, ParseError, PosTagSet, SemClassPath, is_punctuation, is_reserved

_SYLLABLE = re.compile(r"^([a-zü:]+)([1-5]?)$")


@dataclass(frozen=True)
class Syllable:
    base: str
    tone: int | None = None

    @classmethod
    def parse(cls, text: str) -> "Syllable":
        m = _SYLLABLE.match(text.strip().lower())
        if not m:
            raise ValueError(f"bad syllable {text!r}")
        base, tone = m.groups()
        return cls(base, int(tone) if tone else None)

    def __str__(self) -> str:
        return self.base + (str(self.tone) if self.tone is not None else "")


class PhoneticLexicon:
    """Character -> set of pronunciations, with reverse indexes for homophone lookup."""

    def __init__(self, readings: dict[str, set[Syllable]] | None = None):
        self.readings: dict[str, frozenset[Syllable]] = {}
        self._by_base: dict[str, set[str]] = defaultdict(set)
        self._by_exact: dict[Syllable, set[str]] = defaultdict(set)
        for ch, sylls in (readings or {}).items():
            self.add(ch, sylls)

    def add(self, ch: str, sylls: Iterable[Syllable]) -> None:
        merged = set(self.readings.get(ch, ())) | set(sylls)
        if not merged:
            raise DataError(f"character {ch!r} needs at least one reading")
        self.readings[ch] = frozenset(merged)
        for s in merged:
            self._by_base[s.base].add(ch)
            self._by_exact[s].add(ch)

    def __contains__(self, ch: str) -> bool:
        return ch in self.readings

    def __len__(self) -> int:
        return len(self.readings)

    def syllables(self, ch: str) -> frozenset[Syllable]:
        return self.readings.get(ch, frozenset())

    def sim_set(self, ch: str, tone_sensitive: bool = False) -> set[str]:
        """Characters sharing at least one reading with ``ch`` (``ch`` excluded).

        Polyphonic characters contribute the union over all their readings.
        """
        out: set[str] = set()
        for s in self.readings.get(ch, ()):
            out |= self._by_exact[s] if tone_sensitive else self._by_base[s.base]
        out.discard(ch)
        return out


def sim_set(lex: PhoneticLexicon, c: str, tone_sensitive: bool = False) -> set[str]:
    return lex.sim_set(c, tone_sensitive)


def _tsv_lines(path) -> Iterable[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def load_phonetic_lexicon(path) -> PhoneticLexicon:
    """Read ``char<TAB>syll1,syll2,...`` lines; repeated characters merge."""
    lex = PhoneticLexicon()
    for lineno, cols in _tsv_lines(path):
        if len(cols) != 2 or len(cols[0]) != 1:
            raise ParseError(path, lineno, "expected 'char<TAB>syllables'")
        try:
            sylls = [Syllable.parse(s) for s in cols[1].split(",") if s.strip()]
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not sylls:
            raise ParseError(path, lineno, "no syllables")
        lex.add(cols[0], sylls)
    return lex


@dataclass
class FrequencyTable:
    counts: Counter = field(default_factory=Counter)

    def count(self, ch: str) -> int:
        return self.counts.get(ch, 0)

    def is_punctuation(self, ch: str) -> bool:
        return is_punctuation(ch)

    def total(self) -> int:
        return sum(self.counts.values())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ch, n in sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{ch}\t{n}\n")

    @classmethod
    def load(cls, path) -> "FrequencyTable":
        counts = Counter()
        for lineno, cols in _tsv_lines(path):
            if len(cols) != 2 or len(cols[0]) != 1:
                raise ParseError(path, lineno, "expected 'char<TAB>count'")
            try:
                n = int(cols[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad count {cols[1]!r}") from None
            if n < 0:
                raise ParseError(path, lineno, "negative count")
            counts[cols[0]] += n
        return cls(counts)


def build_frequency_table(corpus: Iterable[Sequence[str]]) -> FrequencyTable:
    return FrequencyTable(Counter(ch for seq in corpus for ch in seq if not is_reserved(ch)))


def is_maskable(ft: FrequencyTable, c: str, k_c: int) -> bool:
    """Punctuation and characters seen more than ``k_c`` times are never masked."""
    if is_punctuation(c):
        return False
    return ft.count(c) <= k_c


@dataclass
class PosLexicon:
    words: dict[str, str] = field(default_factory=dict)
    char_tags: dict[str, str] = field(default_factory=dict)
    tagset: PosTagSet = field(default_factory=PosTagSet)

    def __post_init__(self):
        for tag in list(self.words.values()) + list(self.char_tags.values()):
            if tag not in self.tagset:
                raise DataError(f"tag {tag!r} not in the POS tag set")
        self.max_word_len = max((len(w) for w in self.words), default=1)

    def __contains__(self, word: str) -> bool:
        return word in self.words


def load_pos_lexicon(path, tagset: PosTagSet | None = None) -> PosLexicon:
    """Read ``word<TAB>tag`` lines. Single-character entries double as per-character fallbacks."""
    tagset = tagset or PosTagSet()
    words: dict[str, str] = {}
    for lineno, cols in _tsv_lines(path):
        if len(cols) != 2 or not cols[0]:
            raise ParseError(path, lineno, "expected 'word<TAB>tag'")
        if cols[1] not in tagset:
            raise ParseError(path, lineno, f"unknown tag {cols[1]!r}")
        words[cols[0]] = cols[1]
    chars = {w: t for w, t in words.items() if len(w) == 1}
    return PosLexicon(words, chars, tagset)


class SemClassDict:
    """word -> class path, with the tree property checked on insertion."""

    def __init__(self, entries: dict[str, Sequence[str]] | None = None):
        self.paths: dict[str, tuple[str, ...]] = {}
        self._parent: list[dict[str, str]] = []
        for word, path in (entries or {}).items():
            self.add(word, path)

    def add(self, word: str, path: Sequence[str]) -> None:
        path = tuple(path)
        SemClassPath(path)
        while len(self._parent) < len(path):
            self._parent.append({})
        for lvl in range(1, len(path)):
            code, parent = path[lvl], path[lvl - 1]
            if code == NONE_CLASS:
                break
            known = self._parent[lvl].setdefault(code, parent)
            if known != parent:
                raise DataError(f"class {code!r} has two parents ({known!r}, {parent!r})")
        self.paths[word] = path

    def __contains__(self, word: str) -> bool:
        return word in self.paths

    def __len__(self) -> int:
        return len(self.paths)

    def level_codes(self, level: int) -> list[str]:
        """Sorted distinct codes at a 1-based level, NONE excluded."""
        codes = {p[level - 1] for p in self.paths.values() if len(p) >= level}
        codes.discard(NONE_CLASS)
        return sorted(codes)


def load_semclass_dict(path) -> SemClassDict:
    d = SemClassDict()
    for lineno, cols in _tsv_lines(path):
        if len(cols) != 2 or not cols[0] or not cols[1]:
            raise ParseError(path, lineno, "expected 'word<TAB>L1/L2/L3'")
        try:
            d.add(cols[0], cols[1].split("/"))
        except DataError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return d


def lookup_semclass(d: SemClassDict, word: str, k: int) -> SemClassPath:
    if k < 1:
        raise ValueError("k must be >= 1")
    path = d.paths.get(word, ())[:k]
    return SemClassPath(tuple(path) + (NONE_CLASS,) * (k - len(path)))


@dataclass
class Lexicons:
    """The four resources bundled together, as the pipeline consumes them."""

    phonetic: PhoneticLexicon
    pos: PosLexicon
    semclass: SemClassDict
    freq: FrequencyTable | None = None


def bundled_data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def load_bundled_lexicons() -> Lexicons:
    """The toy resources shipped with the package."""
    return Lexicons(
        phonetic=load_phonetic_lexicon(bundled_data_path("pinyin.tsv")),
        pos=load_pos_lexicon(bundled_data_path("pos.tsv")),
        semclass=load_semclass_dict(bundled_data_path("semclass.tsv")),
    )
