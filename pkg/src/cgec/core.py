"""Shared types, vocabularies and configuration."""

from __future__ import annotations

import dataclasses
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

PAD = "[PAD]"
UNK = "[UNK]"
BOS = "[BOS]"
EOS = "[EOS]"
MASK = "[MASK]"
RESERVED = (PAD, UNK, BOS, EOS, MASK)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, MASK_ID = range(5)

DEFAULT_POS_TAGS = (
    "noun",
    "verb",
    "adjective",
    "adverb",
    "pronoun",
    "preposition",
    "conjunction",
    "particle",
    "numeral",
    "measure",
    "punctuation",
    "other",
)

# Level identifier used for words absent from the semantic dictionary.
NONE_CLASS = "-"

CharSeq = list  # list[str]; single characters or reserved symbols


class CgecError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CgecError, ValueError):
    pass


class ContractError(CgecError, ValueError):
    """An operation was called outside its precondition."""


class DataError(CgecError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def to_charseq(text: str) -> list[str]:
    """NFC-normalise ``text`` and split it into single-character tokens."""
    return list(unicodedata.normalize("NFC", text))


def is_reserved(token: str) -> bool:
    return token in RESERVED


def is_punctuation(ch: str) -> bool:
    return len(ch) == 1 and unicodedata.category(ch).startswith("P")


class Vocab:
    """Bijective token <-> id map with fixed reserved ids 0..4."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._itos: list[str] = list(RESERVED)
        self._stoi: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        if token not in self._stoi:
            self._stoi[token] = len(self._itos)
            self._itos.append(token)
        return self._stoi[token]

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._itos == other._itos

    def id(self, token: str) -> int:
        return self._stoi.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self._itos[idx]

    def encode(self, seq: Sequence[str]) -> list[int]:
        return [self._stoi.get(t, UNK_ID) for t in seq]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._itos[i] for i in ids]

    @property
    def tokens(self) -> list[str]:
        return list(self._itos)

    def user_tokens(self) -> list[str]:
        return self._itos[len(RESERVED):]


def build_vocab(corpus: Sequence[Sequence[str]], min_count: int = 1) -> Vocab:
    if not corpus:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    counts = Counter(ch for seq in corpus for ch in seq if not is_reserved(ch))
    # first-occurrence order keeps ids stable for a given corpus
    return Vocab(ch for ch, n in counts.items() if n >= min_count)


@dataclass(frozen=True)
class PosTagSet:
    tags: tuple[str, ...] = DEFAULT_POS_TAGS

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise ConfigError("duplicate POS tag names")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tags)})

    def __len__(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise ConfigError(f"unknown POS tag {tag!r}") from None


@dataclass(frozen=True)
class SemClassPath:
    """Per-level class identifiers; NONE at a level forces NONE below it."""

    levels: tuple[str, ...]

    def __post_init__(self):
        seen_none = False
        for code in self.levels:
            if code == NONE_CLASS:
                seen_none = True
            elif seen_none:
                raise DataError(f"class path {self.levels} has a level below NONE")

    @classmethod
    def none(cls, k: int) -> "SemClassPath":
        return cls((NONE_CLASS,) * k)

    def __len__(self) -> int:
        return len(self.levels)


FUSION_MODES = ("concatenate", "accumulate")
AUX_TASKS = ("pos_crf", "pos_ce", "class_l1", "class_l2", "none")
CRF_EMISSIONS = ("logprob", "prob")


@dataclass(frozen=True)
class PipelineConfig:
    k_c: int = 80_000
    top_k_candidates: int = 3
    class_levels: int = 3
    fusion_mode: str = "concatenate"
    aux_task: str = "pos_crf"
    tone_sensitive: bool = False
    prefer_original: bool = True
    crf_emission: str = "logprob"
    aux_weight: float = 1.0
    d_model: int = 128
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    ffn_hidden: int = 256
    dropout: float = 0.1
    max_len: int = 128
    beam_size: int = 12
    mlm_window: int = 2
    mlm_alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_c < 0:
            raise ConfigError("k_c must be non-negative")
        if self.top_k_candidates < 1:
            raise ConfigError("top_k_candidates must be >= 1")
        if self.class_levels < 1:
            raise ConfigError("class_levels must be >= 1")
        if self.fusion_mode not in FUSION_MODES:
            raise ConfigError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.aux_task not in AUX_TASKS:
            raise ConfigError(f"aux_task must be one of {AUX_TASKS}")
        if self.aux_task == "class_l2" and self.class_levels < 2:
            raise ConfigError("aux_task=class_l2 needs class_levels >= 2")
        if self.crf_emission not in CRF_EMISSIONS:
            raise ConfigError(f"crf_emission must be one of {CRF_EMISSIONS}")
        if self.d_model < self.class_levels + 1:
            raise ConfigError("d_model must be at least class_levels + 1")
        if self.d_model % self.heads:
            raise ConfigError("d_model must be divisible by heads")
        if self.beam_size < 1:
            raise ConfigError("beam_size must be >= 1")

    @property
    def feature_dim(self) -> int:
        """Width of each POS / class embedding: floor(d_model / (k + 1))."""
        return self.d_model // (self.class_levels + 1)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        return cls(**data)


def _coerce(raw: str, typ: type):
    if typ is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return typ(raw)


def parse_config(text: str, source="<config>", base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) over ``base``."""
    types = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    types = {k: {"int": int, "float": float, "bool": bool, "str": str}[t] for k, t in types.items()}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ParseError(source, lineno, "expected 'key = value'")
        if key not in types:
            raise ParseError(source, lineno, f"unknown config key {key!r}")
        try:
            values[key] = _coerce(raw, types[key])
        except ValueError as exc:
            raise ParseError(source, lineno, str(exc)) from None
    return (base or PipelineConfig()).replace(**values)


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=path, base=base)


def dump_config(cfg: PipelineConfig) -> str:
    return "".join(f"{k} = {str(v).lower() if isinstance(v, bool) else v}\n" for k, v in cfg.to_dict().items())
