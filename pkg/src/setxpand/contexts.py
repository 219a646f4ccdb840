"""Extraction of (focus unit, context unit) training pairs.

Five context types feed five separate embedding models:

* ``lin``  - neighboring units within a fixed window
* ``list`` - co-members of explicit comma/bullet lists
* ``dep``  - syntactic dependency neighbors, labeled and directed
* ``sp``   - the other argument of a symmetric pattern ("X rather than Y")
* ``up``   - n-gram frames around the focus term ("U.S. state of __")

Context tokens are plain strings (unit display forms, possibly decorated
with a relation label or embedded in a pattern); focus units keep the
int-for-term / str-for-word distinction so the trainer can prune word foci.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import (
    ROOT,
    AnnotatedSentence,
    TermGroupTable,
    Unit,
    UnitSequence,
    decode_focus,
    encode_focus,
    unit_display,
)

CONTEXT_TYPES = ("lin", "list", "dep", "sp", "up")

SENT_START = "<S>"
SENT_END = "</S>"
FOCUS_SLOT = "__"


@dataclass(frozen=True)
class ContextPair:
    focus: Unit
    context: str
    context_type: str

    def __post_init__(self):
        if not self.context:
            raise ValueError("context string must be non-empty")
        if self.context_type not in CONTEXT_TYPES:
            raise ValueError(f"unknown context type {self.context_type!r}")


@dataclass(frozen=True)
class WindowConfig:
    win: int = 5

    def __post_init__(self):
        if self.win < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class SymmetricPattern:
    infix: tuple[str, ...]
    symmetry_score: float
    support: int

    def __post_init__(self):
        if not (0.0 <= self.symmetry_score <= 1.0):
            raise ValueError("symmetry score must be in [0,1]")


# --- linear window context --------------------------------------------------

def extract_linear(seq: UnitSequence, table: TermGroupTable,
                   cfg: WindowConfig = WindowConfig()) -> Iterator[ContextPair]:
    """Pairs of each focus unit with units up to ``win`` positions away.

    The window is counted in units, so a multiword term is one step; it is
    clipped at sentence boundaries and every unit acts as a focus (word foci
    are pruned later by the trainer).
    """
    units = seq.units
    n = len(units)
    for i, focus in enumerate(units):
        lo = max(0, i - cfg.win)
        hi = min(n, i + cfg.win + 1)
        for j in range(lo, hi):
            if j != i:
                yield ContextPair(focus, unit_display(units[j], table), "lin")


# --- explicit lists -----------------------------------------------------------

_SEPARATORS = {",", ";"}
_COORDINATORS = {"and", "or"}
MIN_LIST_ITEMS = 3


def _comma_list_runs(sent: AnnotatedSentence) -> Iterator[list[int]]:
    """Maximal runs of >=3 chunks separated only by commas/semicolons,
    allowing a single coordinator before the last item."""
    chunks = sent.chunks

    def gap(j: int) -> list[str]:
        return [t.surface for t in sent.tokens[chunks[j].end:chunks[j + 1].start]]

    i = 0
    while i < len(chunks):
        j = i
        while j + 1 < len(chunks) and _pure_separator(gap(j)):
            j += 1
        if j + 1 < len(chunks) and _coordinator_final(gap(j)):
            j += 1
        if j - i + 1 >= MIN_LIST_ITEMS:
            yield list(range(i, j + 1))
        i = j + 1


def _pure_separator(tokens: list[str]) -> bool:
    return bool(tokens) and all(t in _SEPARATORS for t in tokens)


def _coordinator_final(tokens: list[str]) -> bool:
    return (bool(tokens) and tokens[-1].lower() in _COORDINATORS
            and all(t in _SEPARATORS for t in tokens[:-1]))


def detect_explicit_lists(sentences: Iterable[AnnotatedSentence],
                          table: TermGroupTable) -> list[list[int]]:
    """Detect comma lists and bullet lists; returns term-group id lists.

    Comma lists live inside one sentence; bullet lists are runs of >=3
    consecutive ``#bullet`` sentences (same document) whose first chunk is
    the item.  Runs shorter than 3 items never fire.
    """
    lists: list[list[int]] = []
    bullet_run: list[int] = []
    bullet_doc = None

    def flush_bullets():
        nonlocal bullet_run
        if len(bullet_run) >= MIN_LIST_ITEMS:
            lists.append(bullet_run)
        bullet_run = []

    for sent in sentences:
        for run in _comma_list_runs(sent):
            lists.append([table.resolve_or_add(sent.chunk_surface(sent.chunks[k]))
                          for k in run])
        if sent.is_bullet_item and sent.chunks:
            if bullet_doc is not None and sent.doc_id != bullet_doc:
                flush_bullets()
            bullet_doc = sent.doc_id
            bullet_run.append(table.resolve_or_add(sent.chunk_surface(sent.chunks[0])))
        else:
            flush_bullets()
            bullet_doc = None
    flush_bullets()
    return lists


def extract_list_pairs(lists: Iterable[Sequence[int]],
                       table: TermGroupTable) -> Iterator[ContextPair]:
    """All ordered pairs of distinct items within each detected list."""
    for items in lists:
        for focus in items:
            for other in items:
                if other != focus:
                    yield ContextPair(focus, table.canonical(other), "list")


# --- dependency context ----------------------------------------------------

def extract_dependency(sent: AnnotatedSentence,
                       table: TermGroupTable) -> Iterator[ContextPair]:
    """Labeled, directed dependency neighbors of every unit.

    A chunk is represented by its head token.  For focus unit t with
    modifiers m (label l) the pairs are (t, m/l); for the head h of t the
    pair is (t, h/l-1).  Arcs internal to the same chunk are skipped.
    """
    span_of = {}
    head_of_chunk = {}
    for span in sent.chunks:
        for i in range(span.start, span.end):
            span_of[i] = span
        head_of_chunk[span.head_token] = span

    def token_unit(i: int) -> Unit:
        span = head_of_chunk.get(i)
        if span is not None:
            return table.resolve_or_add(sent.chunk_surface(span))
        return sent.tokens[i].surface

    modifiers: dict[int, list[int]] = {}
    for i, tok in enumerate(sent.tokens):
        if tok.head_index != ROOT:
            modifiers.setdefault(tok.head_index, []).append(i)

    for span in sent.chunks:
        yield from _unit_arcs(sent, table, span.head_token, span, modifiers, token_unit)
    for i in range(len(sent.tokens)):
        if i not in span_of:
            yield from _unit_arcs(sent, table, i, None, modifiers, token_unit)


def _unit_arcs(sent, table, rep: int, span, modifiers, token_unit) -> Iterator[ContextPair]:
    focus = token_unit(rep)
    inside = (lambda j: span is not None and span.start <= j < span.end)
    for m in modifiers.get(rep, ()):
        if inside(m):
            continue
        label = sent.tokens[m].dep_label
        yield ContextPair(focus, f"{unit_display(token_unit(m), table)}/{label}", "dep")
    head = sent.tokens[rep].head_index
    if head != ROOT and not inside(head):
        label = sent.tokens[rep].dep_label
        yield ContextPair(focus, f"{unit_display(token_unit(head), table)}/{label}-1", "dep")


# --- symmetric patterns ------------------------------------------------------

@dataclass(frozen=True)
class SpConfig:
    max_infix_len: int = 3
    min_support: int = 20
    min_symmetry: float = 0.4
    vocab_size: int = 500  # top-F frequent words eligible as infix tokens


ALWAYS_INCLUDED_INFIXES = (("and",), ("or",))


def _word_frequencies(sequences: Iterable[UnitSequence]) -> Counter:
    freq: Counter = Counter()
    for seq in sequences:
        for u in seq.units:
            if isinstance(u, str):
                freq[u.lower()] += 1
    return freq


def _iter_matches(units: Sequence[Unit], infix_vocab: set[str], max_len: int):
    """Yield (x, infix, y) with infix tokens from the frequent vocab and
    flanks that are content units (terms, or words outside that vocab)."""
    n = len(units)

    def is_content(u: Unit) -> bool:
        return isinstance(u, int) or u.lower() not in infix_vocab

    for i in range(n):
        if not is_content(units[i]):
            continue
        for m in range(1, max_len + 1):
            j = i + m + 1
            if j >= n:
                break
            mid = units[i + 1:j]
            if any(isinstance(u, int) or u.lower() not in infix_vocab for u in mid):
                break
            if is_content(units[j]):
                infix = tuple(u.lower() for u in mid)  # type: ignore[union-attr]
                yield units[i], infix, units[j]


def discover_symmetric_patterns(sequences: Iterable[UnitSequence],
                                cfg: SpConfig = SpConfig()) -> list[SymmetricPattern]:
    """Find infixes of 1-3 frequent words whose flanking pairs occur in both
    orders often enough.

    symmetry_score = |unordered pairs seen in both orders| / |unordered pairs
    seen|; kept when support (distinct unordered pairs) >= min_support and
    score >= min_symmetry.  Coordination infixes "and"/"or" are always kept
    when they match at all.
    """
    sequences = list(sequences)
    freq = _word_frequencies(sequences)
    infix_vocab = {w for w, _ in freq.most_common(cfg.vocab_size)}
    for coord in _COORDINATORS:
        infix_vocab.add(coord)

    ordered: dict[tuple[str, ...], set[tuple[Unit, Unit]]] = {}
    for seq in sequences:
        for x, infix, y in _iter_matches(seq.units, infix_vocab, cfg.max_infix_len):
            if x != y:
                ordered.setdefault(infix, set()).add((x, y))

    patterns = []
    for infix in sorted(ordered):
        pairs = ordered[infix]
        unordered = {frozenset(p) for p in pairs}
        both = {key for key in unordered
                if all(p in pairs for p in _both_orders(key))}
        support = len(unordered)
        score = len(both) / support if support else 0.0
        keep = support >= cfg.min_support and score >= cfg.min_symmetry
        if infix in ALWAYS_INCLUDED_INFIXES:
            keep = True
        if keep:
            patterns.append(SymmetricPattern(infix, score, support))
    return patterns


def _both_orders(key: frozenset) -> tuple[tuple[Unit, Unit], tuple[Unit, Unit]]:
    a, b = sorted(key, key=repr)
    return (a, b), (b, a)


def extract_sp_pairs(sequences: Iterable[UnitSequence],
                     patterns: Sequence[SymmetricPattern],
                     table: TermGroupTable) -> Iterator[ContextPair]:
    """Both-direction term pairs for every retained pattern match."""
    by_len: dict[int, set[tuple[str, ...]]] = {}
    for p in patterns:
        by_len.setdefault(len(p.infix), set()).add(p.infix)
    if not by_len:
        return
    max_len = max(by_len)
    for seq in sequences:
        units = seq.units
        n = len(units)
        for i in range(n):
            if not isinstance(units[i], int):
                continue
            for m in range(1, max_len + 1):
                j = i + m + 1
                if j >= n:
                    break
                mid = units[i + 1:j]
                if any(isinstance(u, int) for u in mid):
                    break
                infix = tuple(u.lower() for u in mid)  # type: ignore[union-attr]
                if infix in by_len.get(m, ()):
                    x, y = units[i], units[j]
                    if isinstance(y, int) and x != y:
                        yield ContextPair(x, table.canonical(y), "sp")
                        yield ContextPair(y, table.canonical(x), "sp")


# --- unary patterns -----------------------------------------------------------

# Offsets of the six n-gram frames around the focus slot, as
# (before, after) counts over (c-3 c-2 c-1 t c1 c2 c3).
_UP_FRAMES = ((3, 1), (2, 2), (2, 1), (1, 3), (1, 2), (1, 1))


def extract_unary_patterns(seq: UnitSequence,
                           table: TermGroupTable) -> Iterator[ContextPair]:
    """Exactly six n-gram frames per term-focus occurrence.

    Frames span up to three units on each side with the focus replaced by a
    placeholder; positions beyond the sentence use boundary symbols.
    """
    units = seq.units
    n = len(units)

    def at(i: int) -> str:
        if i < 0:
            return SENT_START
        if i >= n:
            return SENT_END
        return unit_display(units[i], table)

    for i, focus in enumerate(units):
        if not isinstance(focus, int):
            continue
        for before, after in _UP_FRAMES:
            parts = [at(j) for j in range(i - before, i)]
            parts.append(FOCUS_SLOT)
            parts.extend(at(j) for j in range(i + 1, i + 1 + after))
            yield ContextPair(focus, " ".join(parts), "up")


# --- aggregation and pair-file I/O -----------------------------------------

def aggregate_pairs(pairs: Iterable[ContextPair]) -> dict[tuple[Unit, str], int]:
    counts: dict[tuple[Unit, str], int] = {}
    for p in pairs:
        key = (p.focus, p.context)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _sort_key(item: tuple[tuple[Unit, str], int]):
    (focus, context), _ = item
    if isinstance(focus, int):
        return (0, focus, "", context)
    return (1, 0, focus, context)


def save_pairs(counts: dict[tuple[Unit, str], int], path: Path | str,
               table: TermGroupTable) -> None:
    """Write an aggregated pair stream: focus TAB context TAB count."""
    with open(path, "w", encoding="utf-8") as fh:
        for (focus, context), cnt in sorted(counts.items(), key=_sort_key):
            fh.write(f"{encode_focus(focus, table)}\t{context}\t{cnt}\n")


def load_pairs(path: Path | str,
               table: TermGroupTable) -> list[tuple[Unit, str, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            focus_s, context, cnt_s = line.split("\t")
            out.append((decode_focus(focus_s, table), context, int(cnt_s)))
    return out


def save_patterns(patterns: Sequence[SymmetricPattern], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in sorted(patterns, key=lambda p: p.infix):
            fh.write(f"{' '.join(p.infix)}\t{p.support}\t{p.symmetry_score:.6f}\n")


def load_patterns(path: Path | str) -> list[SymmetricPattern]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            infix_s, support_s, score_s = line.split("\t")
            out.append(SymmetricPattern(tuple(infix_s.split(" ")),
                                        float(score_s), int(support_s)))
    return out
