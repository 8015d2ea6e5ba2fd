"""Zero-shot spelling correction: mask rare characters, keep only homophone candidates."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .core import MASK, ContractError, DataError, PipelineConfig, is_reserved
from .eval.metrics import PrfScore, prf
from .lexicons import FrequencyTable, PhoneticLexicon, is_maskable
from .masked_lm import MaskedLM, top_k_candidates

NOT_MASKABLE = "not_maskable"
NO_CANDIDATE = "no_candidate_in_simset"
ORIGINAL_PREFERRED = "original_preferred"
REPLACED = "replaced"


@dataclass
class SecRecord:
    position: int
    original: str
    masked: bool
    candidates: list[str] = field(default_factory=list)
    replacement: str | None = None
    reason: str = NOT_MASKABLE


@dataclass
class SecTrace:
    records: list[SecRecord]

    def replacements(self) -> list[SecRecord]:
        return [r for r in self.records if r.reason == REPLACED]

    def to_json(self) -> dict:
        return {"records": [asdict(r) for r in self.records]}


def correct_spelling(
    seq: Sequence[str],
    lm: MaskedLM,
    lex: PhoneticLexicon,
    ft: FrequencyTable,
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[list[str], SecTrace]:
    """Left-to-right single-mask correction; each query sees earlier fixes.

    A masked character is replaced by the best-ranked candidate that is one of
    its homophones.  With ``cfg.prefer_original`` the character is kept when the
    model itself ranks it above every homophone candidate.
    """
    if any(is_reserved(t) for t in seq):
        raise ContractError("input contains reserved symbols")
    out = list(seq)
    records = []
    for i, ch in enumerate(seq):
        if not is_maskable(ft, ch, cfg.k_c):
            records.append(SecRecord(i, ch, False))
            continue
        out[i] = MASK
        pred = top_k_candidates(lm, out, i, cfg.top_k_candidates)
        homophones = lex.sim_set(ch, cfg.tone_sensitive)
        rec = SecRecord(i, ch, True, pred.chars, reason=NO_CANDIDATE)
        for cand in pred.chars:
            if cfg.prefer_original and cand == ch:
                rec.reason = ORIGINAL_PREFERRED
                break
            if cand in homophones:
                rec.replacement, rec.reason = cand, REPLACED
                break
        out[i] = rec.replacement or ch
        records.append(rec)
    return out, SecTrace(records)


def substitution_counts(src: Sequence[str], hyp: Sequence[str], gold: Sequence[str]) -> tuple[int, int, int]:
    """(correct, proposed, gold) character substitutions for one sentence."""
    if not len(src) == len(hyp) == len(gold):
        raise DataError("substitution scoring needs equal-length sequences")
    proposed = sum(s != h for s, h in zip(src, hyp))
    n_gold = sum(s != g for s, g in zip(src, gold))
    tp = sum(s != h and h == g for s, h, g in zip(src, hyp, gold))
    return tp, proposed, n_gold


def sweep_threshold(
    dataset: Sequence[tuple[Sequence[str], Sequence[str]]],
    lm: MaskedLM,
    lex: PhoneticLexicon,
    ft: FrequencyTable,
    k_c_values: Iterable[int],
    cfg: PipelineConfig = PipelineConfig(),
    beta: float = 0.5,
) -> list[tuple[int, PrfScore]]:
    """Run correction over (erroneous, correct) pairs for each threshold."""
    for src, gold in dataset:
        if len(src) != len(gold):
            raise DataError("spelling benchmark pairs must have equal length")
    rows = []
    for k_c in k_c_values:
        run_cfg = cfg.replace(k_c=k_c)
        tp = sys_n = gold_n = 0
        for src, gold in dataset:
            hyp, _ = correct_spelling(src, lm, lex, ft, run_cfg)
            a, b, c = substitution_counts(src, hyp, gold)
            tp, sys_n, gold_n = tp + a, sys_n + b, gold_n + c
        rows.append((k_c, prf(tp, sys_n, gold_n, beta)))
    return rows


def format_sweep(rows: Sequence[tuple[int, PrfScore]]) -> str:
    lines = ["k_c\ttp\tsys\tgold\tP\tR\tF0.5"]
    for k_c, s in rows:
        lines.append(f"{k_c}\t{s.tp}\t{s.sys_count}\t{s.gold_count}\t{s.precision:.4f}\t{s.recall:.4f}\t{s.f_beta:.4f}")
    return "\n".join(lines) + "\n"
