"""Annotated corpus ingestion, term normalization and variation grouping.

The corpus arrives pre-annotated in a column-oriented text format (one token
per line, blank line between sentences, ``#doc``/``#bullet`` marker lines).
Noun-phrase chunks are the *terms*; a term together with its variations
(aliases, acronyms, spelling variants) forms a :class:`TermGroup`, and the
group id is the vocabulary unit used everywhere downstream.  Every other
token stays a plain word unit.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Union

ROOT = -1

# Unit ids: term units are int group ids, word units are plain token strings.
Unit = Union[int, str]


class CorpusFormatError(Exception):
    """Raised for unreadable files or malformed records in strict mode."""


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos_tag: str
    head_index: int  # sentence-relative index, or ROOT
    dep_label: str

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True)
class ChunkSpan:
    start: int  # inclusive
    end: int    # exclusive
    head_token: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad chunk span [{self.start},{self.end})")
        if not (self.start <= self.head_token < self.end):
            raise ValueError("chunk head_token outside span")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[Token, ...]
    chunks: tuple[ChunkSpan, ...]
    doc_id: str = ""
    is_bullet_item: bool = False

    def __post_init__(self):
        n = len(self.tokens)
        prev_end = 0
        for ch in self.chunks:
            if ch.end > n:
                raise ValueError("chunk span exceeds sentence length")
            if ch.start < prev_end:
                raise ValueError("chunks must be sorted and disjoint")
            prev_end = ch.end
        for i, tok in enumerate(self.tokens):
            if tok.head_index != ROOT and not (0 <= tok.head_index < n):
                raise ValueError(f"head index {tok.head_index} out of range")
            if tok.head_index == i:
                raise ValueError("token cannot head itself")

    def chunk_surface(self, span: ChunkSpan) -> str:
        return " ".join(t.surface for t in self.tokens[span.start:span.end])


@dataclass(frozen=True)
class UnitSequence:
    """Sentence rewritten as units: chunk -> group id, other token -> word."""

    units: tuple[Unit, ...]
    doc_id: str = ""
    sentence_index: int = -1


@dataclass
class TermGroup:
    id: int
    canonical: str
    members: frozenset[str]  # normalized term strings
    corpus_frequency: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("term group must have members")


# --- term normalization ---------------------------------------------------

_HYPHENS = re.compile(r"[-‐‑‒–—―_]+")
# Punctuation stripped from the ends.  Periods are kept: chunk-final
# abbreviation dots ("U.K.") are part of the term.
_EDGE_PUNCT = "\"'“”‘’`()[]{}<>,;:!?*"


def normalize_term(surface: str) -> str:
    """Normalize a term surface form for variation matching.

    Lowercases, unifies hyphens/underscores with spaces, strips surrounding
    punctuation (except periods) and collapses internal whitespace.
    Deterministic and idempotent; empty input maps to the empty string.
    """
    text = unicodedata.normalize("NFKC", surface)
    text = _HYPHENS.sub(" ", text)
    text = text.lower().strip().strip(_EDGE_PUNCT)
    return " ".join(text.split())


# --- corpus reading -------------------------------------------------------

_CHUNK_TAGS = {"O", "B-NP", "I-NP"}


@dataclass
class IngestConfig:
    strict: bool = False


@dataclass
class CorpusStats:
    sentences: int = 0
    tokens: int = 0
    chunks: int = 0
    malformed: int = 0


def _parse_sentence(lines: list[str], doc_id: str, bullet: bool) -> AnnotatedSentence:
    tokens: list[Token] = []
    chunk_tags: list[str] = []
    for expected_idx, line in enumerate(lines):
        cols = line.split("\t")
        if len(cols) != 7:
            raise CorpusFormatError(f"expected 7 columns, got {len(cols)}: {line!r}")
        idx_s, surface, lemma, pos, head_s, dep, chunk = cols
        if int(idx_s) != expected_idx:
            raise CorpusFormatError(f"token index {idx_s} out of order")
        if not surface:
            raise CorpusFormatError("empty token surface")
        if chunk not in _CHUNK_TAGS:
            raise CorpusFormatError(f"bad chunk tag {chunk!r}")
        head = ROOT if head_s == "ROOT" else int(head_s)
        tokens.append(Token(surface, lemma, pos, head, dep))
        chunk_tags.append(chunk)

    spans: list[ChunkSpan] = []
    start = None
    for i, tag in enumerate(chunk_tags + ["O"]):
        if tag == "I-NP":
            if start is None:
                raise CorpusFormatError("I-NP without opening B-NP")
            continue
        if start is not None:
            spans.append(_make_span(tokens, start, i))
            start = None
        if tag == "B-NP":
            start = i
    return AnnotatedSentence(tuple(tokens), tuple(spans), doc_id, bullet)


def _make_span(tokens: list[Token], start: int, end: int) -> ChunkSpan:
    # Chunk head = the unique token whose head lies outside the span
    # (or ROOT); fall back to the last token when the parse is messy.
    external = [
        i for i in range(start, end)
        if tokens[i].head_index == ROOT or not (start <= tokens[i].head_index < end)
    ]
    head = external[0] if len(external) == 1 else end - 1
    return ChunkSpan(start, end, head)


class CorpusReader:
    """Streamable handle over an annotated corpus file."""

    def __init__(self, path: Path, config: IngestConfig, stats: CorpusStats):
        self.path = Path(path)
        self.config = config
        self.stats = stats

    def __iter__(self) -> Iterator[AnnotatedSentence]:
        return _iter_sentences(self.path, self.config)


def _iter_sentences(path: Path, config: IngestConfig,
                    on_malformed: Optional[Callable[[str], None]] = None,
                    ) -> Iterator[AnnotatedSentence]:
    doc_id = ""
    bullet = False
    pending: list[str] = []
    sent_no = 0

    def flush() -> Optional[AnnotatedSentence]:
        nonlocal pending, bullet, sent_no
        if not pending:
            return None
        lines, pending = pending, []
        was_bullet, bullet = bullet, False
        sent_no += 1
        try:
            return _parse_sentence(lines, doc_id, was_bullet)
        except (CorpusFormatError, ValueError) as exc:
            if config.strict:
                raise CorpusFormatError(f"sentence {sent_no}: {exc}") from exc
            if on_malformed is not None:
                on_malformed(f"sentence {sent_no}: {exc}")
            return None

    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                sent = flush()
                if sent is not None:
                    yield sent
                continue
            if line.startswith("#doc "):
                doc_id = line[len("#doc "):].strip()
                continue
            if line.strip() == "#bullet":
                bullet = True
                continue
            pending.append(line)
        sent = flush()
        if sent is not None:
            yield sent


def ingest_corpus(path: Path | str, config: Optional[IngestConfig] = None) -> CorpusReader:
    """Validate a corpus file and return a streamable reader with statistics.

    Malformed sentence records are counted and skipped (fatal in strict
    mode); an unreadable file raises :class:`CorpusFormatError`.
    """
    config = config or IngestConfig()
    path = Path(path)
    if not path.is_file():
        raise CorpusFormatError(f"corpus file not found: {path}")
    stats = CorpusStats()
    warnings: list[str] = []
    for sent in _iter_sentences(path, config, on_malformed=warnings.append):
        stats.sentences += 1
        stats.tokens += len(sent.tokens)
        stats.chunks += len(sent.chunks)
    stats.malformed = len(warnings)
    reader = CorpusReader(path, config, stats)
    reader.warnings = warnings  # type: ignore[attr-defined]
    return reader


def count_chunk_surfaces(reader: Iterable[AnnotatedSentence]) -> Counter:
    """Frequency of every chunk surface form in the corpus."""
    freq: Counter = Counter()
    for sent in reader:
        for span in sent.chunks:
            freq[sent.chunk_surface(span)] += 1
    return freq


# --- variation grouping ---------------------------------------------------

@dataclass
class GroupingConfig:
    edit_threshold: float = 0.9
    cosine_threshold: float = 0.6
    acronym_prefix_slack: int = 1
    acronym_min_len: int = 2
    acronym_max_len: int = 6


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_ratio(a: str, b: str) -> float:
    """Normalized edit similarity in [0,1]: 1 - distance / max length."""
    if not a and not b:
        return 1.0
    return 1.0 - _levenshtein(a, b) / max(len(a), len(b))


def _acronym_letters(surface: str) -> Optional[str]:
    """Letters of an acronym-looking surface ("NYC", "U.N.") or None."""
    letters = surface.replace(".", "")
    if not letters.isalpha() or not letters.isupper():
        return None
    return letters.lower()


def _initials(normalized: str) -> str:
    return "".join(w[0] for w in normalized.split() if w)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _acronym_match(acr: str, initials: str, slack: int) -> bool:
    if len(initials) < 2:
        return False
    if acr == initials:
        return True
    return acr.startswith(initials) and len(acr) - len(initials) <= slack


def group_term_variations(
    term_frequencies: dict[str, int],
    similarity: Optional[Callable[[str, str], Optional[float]]] = None,
    config: Optional[GroupingConfig] = None,
) -> "TermGroupTable":
    """Partition term surface forms into variation groups.

    Two terms join the same group when connected (transitively, union-find)
    by: identical normalization; an acronym matching the initials of a
    multiword term; or a high normalized-edit-distance match, additionally
    gated by ``similarity`` (e.g. embedding cosine) when provided.
    Canonical form = the member surface with the highest corpus frequency.
    """
    config = config or GroupingConfig()
    surfaces = sorted(term_frequencies)
    norm = {s: normalize_term(s) for s in surfaces}

    # Cluster surfaces by normalized form first.
    norm_keys = sorted({n for n in norm.values() if n})
    key_index = {n: i for i, n in enumerate(norm_keys)}
    uf = _UnionFind(len(norm_keys))

    # Acronym rule: initial letters of a multiword term match a single-token
    # all-caps surface (exactly, or as a prefix within the configured slack).
    acronyms: list[tuple[str, str]] = []  # (letters, normalized key)
    multiword: list[str] = []
    for s in surfaces:
        n = norm[s]
        if not n:
            continue
        if " " in n:
            multiword.append(n)
        else:
            letters = _acronym_letters(s)
            if letters and config.acronym_min_len <= len(letters) <= config.acronym_max_len:
                acronyms.append((letters, n))
    for letters, acr_key in sorted(set(acronyms)):
        for mw in multiword:
            if _acronym_match(letters, _initials(mw), config.acronym_prefix_slack):
                uf.union(key_index[acr_key], key_index[mw])

    # Edit-distance rule, blocked by first letter to avoid the full n^2 scan.
    buckets: dict[str, list[str]] = {}
    for n in norm_keys:
        buckets.setdefault(n[0], []).append(n)
    for bucket in buckets.values():
        for i, a in enumerate(bucket):
            for b in bucket[i + 1:]:
                if max(len(a), len(b)) * config.edit_threshold > min(len(a), len(b)):
                    continue  # length gap alone rules the pair out
                if edit_ratio(a, b) < config.edit_threshold:
                    continue
                if similarity is not None:
                    cos = similarity(a, b)
                    if cos is not None and cos < config.cosine_threshold:
                        continue
                uf.union(key_index[a], key_index[b])

    clusters: dict[int, list[str]] = {}
    for n in norm_keys:
        clusters.setdefault(uf.find(key_index[n]), []).append(n)

    # Deterministic group ids: by descending total frequency, then canonical.
    built = []
    for members in clusters.values():
        total = 0
        best_surface, best_freq = "", -1
        for s in surfaces:
            if norm[s] in members:
                f = term_frequencies[s]
                total += f
                if f > best_freq or (f == best_freq and s < best_surface):
                    best_surface, best_freq = s, f
        built.append((total, best_surface, frozenset(members)))
    built.sort(key=lambda t: (-t[0], t[1]))

    table = TermGroupTable()
    for total, canonical, members in built:
        table._add(TermGroup(len(table.groups), canonical, members, total))
    return table


class TermGroupTable:
    """Registry of term groups with member and canonical lookups."""

    def __init__(self):
        self.groups: list[TermGroup] = []
        self._by_member: dict[str, int] = {}
        self._by_canonical: dict[str, int] = {}

    def _add(self, group: TermGroup) -> None:
        for m in group.members:
            if m in self._by_member:
                raise ValueError(f"term {m!r} already belongs to a group")
            self._by_member[m] = group.id
        self._by_canonical[group.canonical] = group.id
        self.groups.append(group)

    def __len__(self) -> int:
        return len(self.groups)

    def get(self, gid: int) -> TermGroup:
        return self.groups[gid]

    def canonical(self, gid: int) -> str:
        return self.groups[gid].canonical

    def resolve(self, surface: str) -> Optional[int]:
        """Group id for a surface form (via normalization), or None."""
        if surface in self._by_canonical:
            return self._by_canonical[surface]
        return self._by_member.get(normalize_term(surface))

    def resolve_or_add(self, surface: str, frequency: int = 0) -> int:
        """Resolve a chunk surface, creating a singleton group when unseen."""
        gid = self.resolve(surface)
        if gid is not None:
            return gid
        key = normalize_term(surface)
        members = frozenset([key]) if key else frozenset([surface])
        group = TermGroup(len(self.groups), surface, members, frequency)
        self._add(group)
        return group.id

    # Serialization: TSV  group_id  canonical  member1|member2|...  frequency
    def save(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for g in self.groups:
                members = "|".join(sorted(g.members))
                fh.write(f"{g.id}\t{g.canonical}\t{members}\t{g.corpus_frequency}\n")

    @classmethod
    def load(cls, path: Path | str) -> "TermGroupTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                gid_s, canonical, members_s, freq_s = line.split("\t")
                group = TermGroup(int(gid_s), canonical,
                                  frozenset(members_s.split("|")), int(freq_s))
                if group.id != len(table.groups):
                    raise ValueError("group ids must be contiguous")
                table._add(group)
        return table


# --- unit sequences -------------------------------------------------------

def sentence_units(sent: AnnotatedSentence, table: TermGroupTable,
                   index: int = -1) -> UnitSequence:
    """Rewrite one sentence as a unit sequence (chunk -> group id)."""
    units: list[Unit] = []
    pos = 0
    for span in sent.chunks:
        while pos < span.start:
            units.append(sent.tokens[pos].surface)
            pos += 1
        units.append(table.resolve_or_add(sent.chunk_surface(span)))
        pos = span.end
    while pos < len(sent.tokens):
        units.append(sent.tokens[pos].surface)
        pos += 1
    return UnitSequence(tuple(units), sent.doc_id, index)


def to_unit_sequences(reader: Iterable[AnnotatedSentence],
                      table: TermGroupTable) -> Iterator[UnitSequence]:
    """Rewrite each sentence as a unit sequence (chunk -> group id).

    Unseen chunk surface forms become singleton groups on the fly; order is
    preserved and |units| = |tokens| - sum(chunk lengths) + |chunks|.
    """
    for idx, sent in enumerate(reader):
        yield sentence_units(sent, table, idx)


def unit_display(unit: Unit, table: TermGroupTable) -> str:
    """Human-readable form of a unit: group canonical or the word itself."""
    return table.canonical(unit) if isinstance(unit, int) else unit


def escape_canonical(canonical: str) -> str:
    return canonical.replace(" ", "_")


def encode_focus(unit: Unit, table: TermGroupTable) -> str:
    """Encode a focus unit for pair files: terms bracketed, words plain."""
    if isinstance(unit, int):
        return f"[{escape_canonical(table.canonical(unit))}]"
    return unit


def decode_focus(token: str, table: TermGroupTable) -> Unit:
    if token.startswith("[") and token.endswith("]") and len(token) > 2:
        key = token[1:-1]
        gid = _escaped_index(table).get(key)
        if gid is None:
            raise KeyError(f"unknown term focus {token!r}")
        return gid
    return token


def _escaped_index(table: TermGroupTable) -> dict[str, int]:
    cache = getattr(table, "_escaped_cache", None)
    if cache is None or len(cache) != len(table.groups):
        cache = {}
        for g in table.groups:
            key = escape_canonical(g.canonical)
            if key in cache:
                raise ValueError(f"canonical collision after escaping: {key!r}")
            cache[key] = g.id
        table._escaped_cache = cache  # type: ignore[attr-defined]
    return cache
