"""Sequence alignment: LCS, Corr/Err token labels and span edits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..core import DataError

CORR = "Corr"
ERR = "Err"


def lcs_table(a: Sequence, b: Sequence) -> list[list[int]]:
    """table[i][j] = LCS length of the suffixes a[i:], b[j:]."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        for j in range(m - 1, -1, -1):
            row[j] = below[j + 1] + 1 if a[i] == b[j] else max(below[j], row[j + 1])
    return table


def lcs_pairs(a: Sequence, b: Sequence) -> list[tuple[int, int]]:
    """Matched index pairs of one LCS, lexicographically smallest by (index in a, index in b)."""
    table = lcs_table(a, b)
    pairs = []
    i = j = 0
    while table[i][j] > 0:
        need = table[i][j] - 1
        found = None
        for ii in range(i, len(a)):
            for jj in range(j, len(b)):
                if a[ii] == b[jj] and table[ii + 1][jj + 1] == need:
                    found = (ii, jj)
                    break
            if found:
                break
        pairs.append(found)
        i, j = found[0] + 1, found[1] + 1
    return pairs


def lcs(a: Sequence, b: Sequence) -> tuple[list, int]:
    pairs = lcs_pairs(a, b)
    return [a[i] for i, _ in pairs], len(pairs)


def classify_corr_err_tokens(src: Sequence, tgt: Sequence) -> list[str]:
    """Label each source token Corr if it lies on the chosen LCS with ``tgt``, else Err."""
    on_lcs = {i for i, _ in lcs_pairs(src, tgt)}
    return [CORR if i in on_lcs else ERR for i in range(len(src))]


@dataclass(frozen=True, order=True)
class Edit:
    """Replace source span [start, end) by ``replacement``."""

    start: int
    end: int
    replacement: str = ""

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise DataError(f"bad edit span ({self.start}, {self.end})")


class EditSet(tuple):
    """Sorted, non-overlapping edits over one source sequence."""

    def __new__(cls, edits: Iterable[Edit] = ()):
        items = sorted(edits)
        for prev, cur in zip(items, items[1:]):
            both_insert_here = prev.start == prev.end == cur.start == cur.end
            if prev.end > cur.start or both_insert_here:
                raise DataError(f"overlapping edits {prev} and {cur}")
        return super().__new__(cls, items)

    def apply(self, src: Sequence[str]) -> list[str]:
        out: list[str] = []
        pos = 0
        for e in self:
            if e.end > len(src):
                raise DataError(f"edit {e} runs past the source (length {len(src)})")
            out.extend(src[pos:e.start])
            out.extend(e.replacement)
            pos = e.end
        out.extend(src[pos:])
        return out


def apply_edits(src: Sequence[str], edits: Iterable[Edit]) -> list[str]:
    return EditSet(edits).apply(src)


MATCH, SUB, DEL, INS = "match", "sub", "del", "ins"


def levenshtein_table(a: Sequence, b: Sequence) -> list[list[int]]:
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(
                d[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
            )
    return d


def align(a: Sequence, b: Sequence) -> list[tuple[str, int, int]]:
    """One minimal alignment as (op, i, j) steps; ties prefer match > sub > del > ins."""
    d = levenshtein_table(a, b)
    i, j = len(a), len(b)
    ops = []
    while i or j:
        if i and j and a[i - 1] == b[j - 1] and d[i][j] == d[i - 1][j - 1]:
            ops.append((MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i and j and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append((SUB, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            ops.append((DEL, i - 1, j))
            i -= 1
        else:
            ops.append((INS, i, j - 1))
            j -= 1
    ops.reverse()
    return ops


def extract_edits(src: Sequence[str], hyp: Sequence[str]) -> EditSet:
    """Character-level span edits turning ``src`` into ``hyp``; adjacent changes merge."""
    edits = []
    start = None
    repl: list[str] = []
    for op, si, hj in align(src, hyp):
        if op == MATCH:
            if start is not None:
                edits.append(Edit(start, si, "".join(repl)))
                start, repl = None, []
            continue
        if start is None:
            start = si
        if op in (SUB, INS):
            repl.append(hyp[hj])
    if start is not None:
        edits.append(Edit(start, len(src), "".join(repl)))
    return EditSet(edits)
