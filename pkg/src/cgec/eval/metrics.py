from __future__ import annotations

from dataclasses import dataclass


def f_beta(p: float, r: float, beta: float = 0.5) -> float:
    b2 = beta * beta
    denom = b2 * p + r
    if denom == 0:
        return 0.0
    return (1 + b2) * p * r / denom


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f_beta: float
    tp: int
    sys_count: int
    gold_count: int

    def tsv(self) -> str:
        return (
            "tp\tsys\tgold\tP\tR\tF0.5\n"
            f"{self.tp}\t{self.sys_count}\t{self.gold_count}\t"
            f"{self.precision:.4f}\t{self.recall:.4f}\t{self.f_beta:.4f}\n"
        )


def prf(tp: int, sys_count: int, gold_count: int, beta: float = 0.5) -> PrfScore:
    """Counts to scores; an empty system or gold side scores 0, not undefined."""
    p = tp / sys_count if sys_count else 0.0
    r = tp / gold_count if gold_count else 0.0
    return PrfScore(p, r, f_beta(p, r, beta), tp, sys_count, gold_count)
