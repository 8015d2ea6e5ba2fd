"""Template-based synthetic parallel data with exactly recorded gold edits."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import DataError, ParseError, is_punctuation
from .eval.alignment import Edit, EditSet
from .lexicons import FrequencyTable, PhoneticLexicon, PosLexicon, bundled_data_path, is_maskable

_SLOT = re.compile(r"^\{(\w+)\}$")

# edit type labels in gold files
SPELLING, MISSING, REDUNDANT, ORDER = "S", "M", "R", "W"


@dataclass
class Grammar:
    templates: list[list[str]]
    slots: dict[str, list[str]] = field(default_factory=dict)

    def check(self, pos_lex: PosLexicon) -> None:
        """Every literal and slot word must be a lexicon word."""
        for name, words in self.slots.items():
            for w in words:
                if w not in pos_lex:
                    raise DataError(f"slot {name!r} uses unknown word {w!r}")
        for tpl in self.templates:
            for tok in tpl:
                m = _SLOT.match(tok)
                if m:
                    if m.group(1) not in self.slots:
                        raise DataError(f"template uses undefined slot {tok}")
                elif tok not in pos_lex:
                    raise DataError(f"template uses unknown word {tok!r}")


def parse_grammar(text: str, source="<grammar>") -> Grammar:
    section = None
    g = Grammar([])
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("[slots]", "[templates]"):
            section = line[1:-1]
        elif section == "slots":
            name, sep, words = line.partition("=")
            if not sep or not words.split():
                raise ParseError(source, lineno, "expected 'name = word word ...'")
            g.slots[name.strip()] = words.split()
        elif section == "templates":
            g.templates.append(line.split())
        else:
            raise ParseError(source, lineno, "content outside [slots]/[templates]")
    return g


def load_grammar(path=None) -> Grammar:
    path = Path(path) if path else bundled_data_path("templates.txt")
    return parse_grammar(path.read_text(encoding="utf-8"), path)


@dataclass
class SyntheticSpec:
    grammar: Grammar
    size: int = 100
    substitution_rate: float = 0.0
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    word_order_rate: float = 0.0
    insertion_words: tuple[str, ...] = ("的", "了", "是", "也", "在")
    tone_sensitive: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("substitution_rate", "deletion_rate", "insertion_rate", "word_order_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {rate}")
        if not self.grammar.templates:
            raise DataError("no templates")


@dataclass
class SyntheticPair:
    source: list[str]
    target: list[str]
    edits: EditSet
    types: list[str]
    words: list[str]  # the correct sentence's template words


def _fill(grammar: Grammar, rng: random.Random) -> list[str]:
    tpl = grammar.templates[rng.randrange(len(grammar.templates))]
    words = []
    for tok in tpl:
        m = _SLOT.match(tok)
        words.append(rng.choice(grammar.slots[m.group(1)]) if m else tok)
    return words


def _corrupt(words, spec: SyntheticSpec, lex: PhoneticLexicon, rng: random.Random, can_substitute):
    """(erroneous, correct, type) segments; adjacent segments concatenate to each side."""
    segs = []
    i = 0
    while i < len(words):
        w = words[i]
        punct = all(is_punctuation(c) for c in w)
        nxt = words[i + 1] if i + 1 < len(words) else None
        if (
            not punct
            and nxt is not None
            and not all(is_punctuation(c) for c in nxt)
            and rng.random() < spec.word_order_rate
        ):
            segs.append((nxt + w, w + nxt, ORDER))
            i += 2
            continue
        if not punct and rng.random() < spec.deletion_rate:
            segs.append(("", w, MISSING))
        else:
            for c in w:
                homophones = sorted(lex.sim_set(c, spec.tone_sensitive))
                if homophones and can_substitute(c) and rng.random() < spec.substitution_rate:
                    segs.append((rng.choice(homophones), c, SPELLING))
                else:
                    segs.append((c, c, None))
        if rng.random() < spec.insertion_rate:
            segs.append((rng.choice(spec.insertion_words), "", REDUNDANT))
        i += 1
    return segs


def _edits_from_segments(segs) -> tuple[list[str], list[str], list[Edit], list[str]]:
    src, tgt, edits, types = [], [], [], []
    run = None  # [start, err_text, cor_text, types]
    for err, cor, kind in segs + [(None, None, None)]:
        if kind is not None:
            if run is None:
                run = [len(src), "", "", []]
            run[1] += err
            run[2] += cor
            run[3].append(kind)
        elif run is not None:
            if run[1] != run[2]:
                edits.append(Edit(run[0], run[0] + len(run[1]), run[2]))
                types.append("+".join(dict.fromkeys(run[3])))
            run = None
        if err is None:
            break
        src.extend(err)
        tgt.extend(cor)
    return src, tgt, edits, types


def make_synthetic_corpus(
    spec: SyntheticSpec,
    lex: PhoneticLexicon,
    pos_lex: PosLexicon,
    ft: FrequencyTable | None = None,
    k_c: int | None = None,
) -> list[SyntheticPair]:
    """Draw correct sentences from the grammar and inject errors at the given rates.

    Homophone substitutions only touch characters with at least one homophone;
    with ``ft`` and ``k_c`` they are further limited to maskable characters.
    """
    spec.grammar.check(pos_lex)
    for w in spec.insertion_words:
        if w not in pos_lex:
            raise DataError(f"insertion word {w!r} is not in the lexicon")
    if ft is not None and k_c is not None:
        can_substitute = lambda c: is_maskable(ft, c, k_c)  # noqa: E731
    else:
        can_substitute = lambda c: not is_punctuation(c)  # noqa: E731
    rng = random.Random(spec.seed)
    pairs = []
    for _ in range(spec.size):
        words = _fill(spec.grammar, rng)
        segs = _corrupt(words, spec, lex, rng, can_substitute)
        src, tgt, edits, types = _edits_from_segments(segs)
        pairs.append(SyntheticPair(src, tgt, EditSet(edits), types, words))
    return pairs


def write_gold_m2(pairs: Sequence[SyntheticPair], path) -> None:
    from .eval.m2 import format_m2

    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(format_m2(p.source, [p.edits], [p.types]))
            fh.write("\n")
