"""MaxMatch edit scoring over a Levenshtein edit lattice.

The system edits for a sentence are not fixed by a single alignment: every
minimal-cost alignment between source and hypothesis is a path through the
lattice, and runs of adjacent changes may be merged into one span edit as long
as they swallow at most ``max_unchanged`` unchanged tokens.  For each gold
annotation the path with the most gold-matching edits is chosen; ties prefer
paths whose unmatched edits cost less, then fewer unmatched edits.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..core import DataError
from .alignment import Edit, EditSet, levenshtein_table
from .metrics import PrfScore, prf

MAX_UNCHANGED = 2


@dataclass(frozen=True)
class LatticeEdge:
    src: tuple[int, int]
    dst: tuple[int, int]
    cost: int
    edit: Edit | None  # None for an unchanged token


def _suffix_table(a: Sequence, b: Sequence) -> list[list[int]]:
    rev = levenshtein_table(a[::-1], b[::-1])
    n, m = len(a), len(b)
    return [[rev[n - i][m - j] for j in range(m + 1)] for i in range(n + 1)]


def edit_lattice(src: Sequence, hyp: Sequence, max_unchanged: int = MAX_UNCHANGED) -> list[LatticeEdge]:
    n, m = len(src), len(hyp)
    pre = levenshtein_table(src, hyp)
    suf = _suffix_table(src, hyp)
    total = pre[n][m]

    def on_path(i, j):
        return 0 <= i <= n and 0 <= j <= m and pre[i][j] + suf[i][j] == total

    atomic: dict[tuple[int, int], list[tuple[tuple[int, int], int, bool]]] = {}
    for i in range(n + 1):
        for j in range(m + 1):
            if not on_path(i, j):
                continue
            steps = []
            if i < n and j < m:
                same = src[i] == hyp[j]
                steps.append(((i + 1, j + 1), 0 if same else 1, same))
            if i < n:
                steps.append(((i + 1, j), 1, False))
            if j < m:
                steps.append(((i, j + 1), 1, False))
            atomic[(i, j)] = [
                (v, c, keep) for v, c, keep in steps if on_path(*v) and pre[v[0]][v[1]] == pre[i][j] + c
            ]

    edges = []
    for u in sorted(atomic):
        for v, c, keep in atomic[u]:
            if keep:
                edges.append(LatticeEdge(u, v, 0, None))
        # every sub-path from u with at least one change and few unchanged tokens
        frontier = {(u, 0, False)}
        seen = set(frontier)
        ends = set()
        while frontier:
            nxt = set()
            for w, kept, changed in frontier:
                for v, c, keep in atomic[w]:
                    state = (v, kept + keep, changed or not keep)
                    if state[1] > max_unchanged or state in seen:
                        continue
                    seen.add(state)
                    nxt.add(state)
                    if state[2]:
                        ends.add(v)
            frontier = nxt
        for v in sorted(ends):
            rep = "".join(hyp[u[1]:v[1]])
            edges.append(LatticeEdge(u, v, pre[v[0]][v[1]] - pre[u[0]][u[1]], Edit(u[0], v[0], rep)))
    return edges


def best_edit_sequence(src: Sequence, hyp: Sequence, gold: EditSet, max_unchanged: int = MAX_UNCHANGED) -> tuple[list[Edit], int]:
    """(system edits on the best path, number of them matching ``gold``)."""
    gold_set = set(gold)
    edges = edit_lattice(src, hyp, max_unchanged)
    out_edges: dict[tuple[int, int], list[LatticeEdge]] = {}
    for e in edges:
        out_edges.setdefault(e.src, []).append(e)
    start, goal = (0, 0), (len(src), len(hyp))
    best = {start: ((0, 0, 0), None)}
    for u in sorted(set(out_edges) | {goal}):
        if u not in best:
            continue
        cost_u = best[u][0]
        for e in out_edges.get(u, ()):
            if e.edit is None:
                step = (0, 0, 0)
            elif e.edit in gold_set:
                step = (-1, 0, 0)
            else:
                step = (0, e.cost, 1)
            cand = tuple(x + y for x, y in zip(cost_u, step))
            if e.dst not in best or cand < best[e.dst][0]:
                best[e.dst] = (cand, e)
    path = []
    v = goal
    while v != start:
        e = best[v][1]
        if e.edit is not None:
            path.append(e.edit)
        v = e.src
    path.reverse()
    return path, -best[goal][0][0]


def max_match_counts(src, hyp, gold: EditSet, max_unchanged: int = MAX_UNCHANGED) -> tuple[int, int, int]:
    """(tp, proposed, gold) for one sentence against one annotation."""
    edits, tp = best_edit_sequence(src, hyp, gold, max_unchanged)
    return tp, len(edits), len(gold)


def max_match_corpus(
    items: Iterable[tuple[Sequence, Sequence, Sequence[EditSet]]],
    beta: float = 0.5,
    max_unchanged: int = MAX_UNCHANGED,
) -> PrfScore:
    """Corpus-level scores; each sentence uses the annotation maximising the running F."""
    tp = sys_n = gold_n = 0
    b2 = beta * beta
    for src, hyp, annotations in items:
        if not annotations:
            raise DataError("each sentence needs at least one gold annotation")
        chosen = None
        for gold in annotations:
            gold = gold if isinstance(gold, EditSet) else EditSet(gold)
            a, b, c = max_match_counts(src, hyp, gold, max_unchanged)
            s = prf(tp + a, sys_n + b, gold_n + c, beta)
            key = (s.f_beta, tp + a, -(sys_n + b + b2 * (gold_n + c)))
            if chosen is None or key > chosen[0]:
                chosen = (key, (a, b, c))
        a, b, c = chosen[1]
        tp, sys_n, gold_n = tp + a, sys_n + b, gold_n + c
    return prf(tp, sys_n, gold_n, beta)


def max_match_prf(src, hyp, gold_annotations: Sequence[EditSet], beta: float = 0.5) -> PrfScore:
    return max_match_corpus([(src, hyp, gold_annotations)], beta)


def char_edit_prf(items: Iterable[tuple[Sequence, Sequence, EditSet]], beta: float = 0.5) -> PrfScore:
    """Exact-match scoring of edits extracted by a single character alignment."""
    from .alignment import extract_edits

    tp = sys_n = gold_n = 0
    for src, hyp, gold in items:
        sys_edits = set(extract_edits(src, hyp))
        gold = set(gold)
        tp += len(sys_edits & gold)
        sys_n += len(sys_edits)
        gold_n += len(gold)
    return prf(tp, sys_n, gold_n, beta)


# -- M2 files ------------------------------------------------------------------


@dataclass
class M2Sentence:
    source: list[str]
    annotations: list[EditSet]


def format_m2(source: Sequence[str], annotations: Sequence[Iterable[Edit]], types: Sequence[Sequence[str]] | None = None) -> str:
    lines = ["S " + " ".join(source)]
    for ann_id, edits in enumerate(annotations):
        edits = list(EditSet(edits))
        if not edits:
            lines.append(f"A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{ann_id}")
        for k, e in enumerate(edits):
            etype = types[ann_id][k] if types else "R"
            repl = " ".join(e.replacement) or "-NONE-"
            lines.append(f"A {e.start} {e.end}|||{etype}|||{repl}|||REQUIRED|||-NONE-|||{ann_id}")
    return "\n".join(lines) + "\n"


def parse_m2(text: str, source_name="<m2>") -> list[M2Sentence]:
    sentences = []
    cur: M2Sentence | None = None
    pending: dict[int, list[Edit]] = {}

    def flush():
        if cur is not None:
            try:
                cur.annotations = [EditSet(pending[k]) for k in sorted(pending)] or [EditSet()]
            except DataError as exc:
                raise DataError(f"{source_name}: sentence {len(sentences) + 1}: {exc}") from None
            sentences.append(cur)

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip()
        if not line:
            flush()
            cur, pending = None, {}
        elif line.startswith("S ") or line == "S":
            flush()
            tokens = line[2:].split()
            if any(len(t) != 1 for t in tokens):
                raise DataError(f"{source_name}:{lineno}: expected one character per token")
            cur, pending = M2Sentence(tokens, []), {}
        elif line.startswith("A "):
            if cur is None:
                raise DataError(f"{source_name}:{lineno}: annotation before any S line")
            fields = line[2:].split("|||")
            try:
                start, end = map(int, fields[0].split())
                ann_id = int(fields[5]) if len(fields) > 5 else 0
            except (ValueError, IndexError):
                raise DataError(f"{source_name}:{lineno}: malformed annotation") from None
            edits = pending.setdefault(ann_id, [])
            if fields[1] == "noop" or start < 0:
                continue
            repl = fields[2].strip()
            repl = "" if repl in ("-NONE-", "") else "".join(repl.split())
            if end > len(cur.source):
                raise DataError(f"{source_name}:{lineno}: span past end of sentence")
            edits.append(Edit(start, end, repl))
        else:
            raise DataError(f"{source_name}:{lineno}: unexpected line")
    flush()
    return sentences


def load_m2(path) -> list[M2Sentence]:
    path = Path(path)
    return parse_m2(path.read_text(encoding="utf-8"), str(path))
