"""End-to-end correction: spelling pass, feature extraction, then the corrector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import ConfigError, PipelineConfig
from .lexicons import Lexicons
from .masked_lm import MaskedLM
from .model.decoding import beam_search_decode
from .model.network import GecModel
from .sec import SecTrace, correct_spelling
from .tagger import Tagger


@dataclass
class Corrector:
    lexicons: Lexicons
    cfg: PipelineConfig
    lm: MaskedLM | None = None
    model: GecModel | None = None
    sec_only: bool = False
    gec_only: bool = False

    def __post_init__(self):
        if self.sec_only and self.gec_only:
            raise ConfigError("--sec-only and --gec-only are mutually exclusive")
        if not self.gec_only and (self.lm is None or self.lexicons.freq is None):
            raise ConfigError("the spelling stage needs a masked language model and a frequency table")
        if not self.sec_only and self.model is None:
            raise ConfigError("the correction stage needs a model checkpoint")
        self.tagger = Tagger.from_lexicons(self.lexicons, self.cfg)
        if self.model is not None and (
            self.tagger.tagset != self.model.tagset or self.tagger.class_alphabets != self.model.class_alphabets
        ):
            raise ConfigError("the lexicons do not match the tag and class inventories the model was trained with")

    def correct(self, seq: Sequence[str]) -> tuple[list[str], SecTrace | None]:
        seq = list(seq)
        if not seq:
            return [], None
        trace = None
        if not self.gec_only:
            seq, trace = correct_spelling(seq, self.lm, self.lexicons.phonetic, self.lexicons.freq, self.cfg)
        if self.sec_only:
            return seq, trace
        out = beam_search_decode(self.model, seq, self.tagger.features(seq), self.cfg.beam_size)
        return out, trace
