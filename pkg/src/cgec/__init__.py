"""Chinese grammatical error correction with homophone-filtered spelling repair
and semantic-class / POS features."""

from .core import (
    ConfigError,
    ContractError,
    DataError,
    ParseError,
    PipelineConfig,
    PosTagSet,
    SemClassPath,
    Vocab,
    build_vocab,
    load_config,
    to_charseq,
)
from .lexicons import (
    FrequencyTable,
    Lexicons,
    PhoneticLexicon,
    build_frequency_table,
    is_maskable,
    load_bundled_lexicons,
    sim_set,
)
from .masked_lm import NGramMaskedLM, top_k_candidates, train_ngram_mlm
from .sec import correct_spelling, sweep_threshold
from .tagger import SemanticFeatureSeq, Tagger, feature_sequence

__version__ = "0.1.0"
