"""Zero-shot spelling correction on a synthetic corpus, then a k_c sweep."""

from cgec.core import PipelineConfig
from cgec.lexicons import build_frequency_table, load_bundled_lexicons
from cgec.masked_lm import NGramMaskedLM, train_ngram_mlm
from cgec.sec import correct_spelling, format_sweep, sweep_threshold
from cgec.synthetic import SyntheticSpec, load_grammar, make_synthetic_corpus

lex = load_bundled_lexicons()
grammar = load_grammar()

# clean text fits the masked LM and the character counts
clean = [p.target for p in make_synthetic_corpus(SyntheticSpec(grammar, size=3000, seed=100), lex.phonetic, lex.pos)]
lm = NGramMaskedLM(train_ngram_mlm(clean, 2, 1.0))
freq = build_frequency_table(clean)

# homophone substitutions only, so source and target stay aligned
bench = make_synthetic_corpus(SyntheticSpec(grammar, size=500, seed=7, substitution_rate=0.1), lex.phonetic, lex.pos)

cfg = PipelineConfig(k_c=300)
for p in bench[:5]:
    out, trace = correct_spelling(p.source, lm, lex.phonetic, freq, cfg)
    print("src ", "".join(p.source))
    print("sec ", "".join(out))
    print("gold", "".join(p.target))
    for r in trace.replacements():
        print("   ", r)
    print()

counts = sorted(set(freq.counts.values()))
values = sorted({0, *counts[:: max(1, len(counts) // 15)], counts[-1]})
rows = sweep_threshold([(p.source, p.target) for p in bench], lm, lex.phonetic, freq, values)
print(format_sweep(rows))
k_c, best = max(rows, key=lambda kv: kv[1].f_beta)
print(f"best k_c={k_c}  P={best.precision:.3f} R={best.recall:.3f} F0.5={best.f_beta:.3f}")
