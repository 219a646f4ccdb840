"""Dataset construction and synthetic corpus generation.

``build_dataset`` turns raw term lists plus a grouped corpus into
train/dev/test seed-expansion samples (15 per list: 5 each of seed sizes
2, 5 and 10, seeds drawn from the list's 30 most corpus-frequent terms,
with balanced negatives for the train split).

``generate_synthetic_corpus`` emits a desk-scale annotated corpus in which
class co-membership is planted through controllable channels -- window
contexts, comma/bullet lists, dependency slots, symmetric patterns and
n-gram frames -- together with the gold term lists, so the whole pipeline
can be exercised and evaluated quickly.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import TermGroupTable

SEED_SIZES = (2, 5, 10)
SAMPLES_PER_SIZE = 5
TOP_FREQUENT_POOL = 30
MIN_TERM_FREQUENCY = 10
DEFAULT_28_SPLIT = (5, 5, 18)


class DatasetError(Exception):
    pass


@dataclass
class TermList:
    name: str
    terms: frozenset[int]
    split: str = "test"


@dataclass(frozen=True)
class SeedSample:
    list_name: str
    sample_id: int
    seed: tuple[int, ...]
    expanded_gold: frozenset[int]
    negatives: frozenset[int] = frozenset()

    def __post_init__(self):
        if set(self.seed) & self.expanded_gold:
            raise DatasetError("seed and gold must be disjoint")


@dataclass
class DatasetBundle:
    lists: dict[str, TermList]
    samples: dict[str, list[SeedSample]]
    rng_seed: int
    unresolved: dict[str, list[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def by_split(self, split: str) -> list[TermList]:
        return [tl for tl in self.lists.values() if tl.split == split]

    # --- persistence ---------------------------------------------------------

    def save(self, out_dir: Path | str, table: TermGroupTable,
             redirect_table: Optional[Mapping[str, str]] = None,
             config: Optional[dict] = None) -> None:
        out = Path(out_dir)
        (out / "lists").mkdir(parents=True, exist_ok=True)
        (out / "seeds").mkdir(parents=True, exist_ok=True)

        for name in sorted(self.lists):
            tl = self.lists[name]
            lines = sorted(table.canonical(g) for g in tl.terms)
            (out / "lists" / f"{name}.txt").write_text(
                "".join(line + "\n" for line in lines), encoding="utf-8")

        with open(out / "redirects.tsv", "w", encoding="utf-8") as fh:
            for src in sorted(redirect_table or {}):
                fh.write(f"{src}\t{(redirect_table or {})[src]}\n")

        with open(out / "splits.tsv", "w", encoding="utf-8") as fh:
            for name in sorted(self.lists):
                fh.write(f"{name}\t{self.lists[name].split}\n")

        def names(gids: Iterable[int]) -> str:
            return "|".join(sorted(table.canonical(g) for g in gids))

        for name in sorted(self.samples):
            with open(out / "seeds" / f"{name}.tsv", "w", encoding="utf-8") as fh:
                for s in self.samples[name]:
                    fh.write(f"{s.sample_id}\t{len(s.seed)}\t"
                             f"{'|'.join(table.canonical(g) for g in s.seed)}\t"
                             f"{names(s.expanded_gold)}\t{names(s.negatives)}\n")

        manifest = {
            "rng_seed": self.rng_seed,
            "lists": len(self.lists),
            "config_hash": config_hash(config or {}),
            "unresolved": {k: sorted(v) for k, v in sorted(self.unresolved.items())},
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, in_dir: Path | str, table: TermGroupTable) -> "DatasetBundle":
        out = Path(in_dir)
        splits = {}
        for line in (out / "splits.tsv").read_text(encoding="utf-8").splitlines():
            name, split = line.split("\t")
            splits[name] = split

        def resolve_all(joined: str) -> frozenset[int]:
            if not joined:
                return frozenset()
            return frozenset(_must_resolve(table, t) for t in joined.split("|"))

        lists: dict[str, TermList] = {}
        samples: dict[str, list[SeedSample]] = {}
        for name in sorted(splits):
            terms = frozenset(
                _must_resolve(table, line)
                for line in (out / "lists" / f"{name}.txt").read_text(
                    encoding="utf-8").splitlines() if line)
            lists[name] = TermList(name, terms, splits[name])
            rows = []
            for line in (out / "seeds" / f"{name}.tsv").read_text(
                    encoding="utf-8").splitlines():
                sid, _size, seed_s, gold_s, neg_s = line.split("\t")
                rows.append(SeedSample(
                    name, int(sid),
                    tuple(_must_resolve(table, t) for t in seed_s.split("|")),
                    resolve_all(gold_s), resolve_all(neg_s)))
            samples[name] = rows
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        return cls(lists, samples, manifest.get("rng_seed", 0))


def _must_resolve(table: TermGroupTable, surface: str) -> int:
    gid = table.resolve(surface)
    if gid is None:
        raise DatasetError(f"term {surface!r} not resolvable against group table")
    return gid


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


# --- dataset construction -----------------------------------------------------


def default_split_counts(n_lists: int) -> tuple[int, int, int]:
    if n_lists == sum(DEFAULT_28_SPLIT):
        return DEFAULT_28_SPLIT
    train = max(1, round(n_lists * 5 / 28))
    dev = max(1, round(n_lists * 5 / 28))
    if train + dev >= n_lists:
        raise DatasetError(f"cannot split {n_lists} lists into train/dev/test")
    return train, dev, n_lists - train - dev


def build_dataset(raw_lists: Mapping[str, Sequence[str]],
                  table: TermGroupTable,
                  redirect_table: Optional[Mapping[str, str]] = None,
                  rng_seed: int = 0,
                  split_counts: Optional[tuple[int, int, int]] = None,
                  min_frequency: int = MIN_TERM_FREQUENCY) -> DatasetBundle:
    """Build the seed-expansion dataset from raw term lists.

    Per list: surfaces are redirected and resolved to term groups, terms
    below the corpus-frequency floor are pruned, and 15 seed samples are
    generated (5 per size in 2/5/10) with seeds drawn from the 30 most
    frequent surviving terms.  Train-split samples carry negatives sampled
    uniformly from corpus term groups outside the full list, balanced 1:1
    with the gold terms.  Fully deterministic given ``rng_seed``.
    """
    redirect_table = redirect_table or {}
    rng = np.random.default_rng(rng_seed)
    warnings: list[str] = []
    unresolved: dict[str, list[str]] = {}

    resolved_lists: dict[str, list[int]] = {}
    full_lists: dict[str, set[int]] = {}
    for name in sorted(raw_lists):
        surfaces = raw_lists[name]
        if not (50 <= len(surfaces) <= 800):
            warnings.append(f"{name}: {len(surfaces)} terms outside the 50..800 range")
        gids: list[int] = []
        missing: list[str] = []
        for surface in surfaces:
            target = redirect_table.get(surface, surface)
            gid = table.resolve(target)
            if gid is None:
                missing.append(surface)
            elif gid not in gids:
                gids.append(gid)
        if missing:
            unresolved[name] = missing
        full_lists[name] = set(gids)
        surviving = sorted(g for g in gids
                           if table.get(g).corpus_frequency >= min_frequency)
        if len(surviving) < min(SEED_SIZES) + 1:
            warnings.append(f"{name}: only {len(surviving)} terms survive pruning, skipped")
            continue
        resolved_lists[name] = surviving

    if not resolved_lists:
        raise DatasetError("no usable term list")

    counts = split_counts or default_split_counts(len(resolved_lists))
    if sum(counts) != len(resolved_lists):
        raise DatasetError(f"split counts {counts} do not sum to {len(resolved_lists)} lists")
    names = sorted(resolved_lists)
    order = rng.permutation(len(names))
    split_of = {}
    for pos, idx in enumerate(order):
        if pos < counts[0]:
            split_of[names[idx]] = "train"
        elif pos < counts[0] + counts[1]:
            split_of[names[idx]] = "dev"
        else:
            split_of[names[idx]] = "test"

    all_groups = np.array([g.id for g in table.groups], dtype=np.int64)

    lists: dict[str, TermList] = {}
    samples: dict[str, list[SeedSample]] = {}
    for name in names:
        terms = resolved_lists[name]
        split = split_of[name]
        lists[name] = TermList(name, frozenset(terms), split)

        by_freq = sorted(terms, key=lambda g: (-table.get(g).corpus_frequency, g))
        pool = by_freq[:TOP_FREQUENT_POOL]
        if len(terms) < TOP_FREQUENT_POOL:
            warnings.append(f"{name}: fewer than {TOP_FREQUENT_POOL} terms, "
                            "seeds sampled from all")

        rows: list[SeedSample] = []
        sample_id = 0
        for size in SEED_SIZES:
            for _ in range(SAMPLES_PER_SIZE):
                if len(terms) < size + 1:
                    warnings.append(f"{name}: too few terms for seed size {size}")
                    continue
                src = pool if len(pool) >= size else by_freq
                pick = rng.choice(len(src), size=size, replace=False)
                seed = tuple(src[i] for i in sorted(pick))
                gold = frozenset(terms) - set(seed)
                negatives: frozenset[int] = frozenset()
                if split == "train":
                    excluded = full_lists[name]
                    candidates = all_groups[~np.isin(all_groups, sorted(excluded))]
                    take = min(len(gold), len(candidates))
                    if take < len(gold):
                        warnings.append(f"{name}: negative pool smaller than gold set")
                    chosen = rng.choice(len(candidates), size=take, replace=False)
                    negatives = frozenset(int(candidates[i]) for i in chosen)
                rows.append(SeedSample(name, sample_id, seed, gold, negatives))
                sample_id += 1
        samples[name] = rows

    return DatasetBundle(lists, samples, rng_seed, unresolved, warnings)


# --- synthetic corpus ---------------------------------------------------------

_SYLLABLES = tuple(c + v for c in "bdfgklmnprstvz" for v in "aeiou")


def _pseudo_word(index: int) -> str:
    parts = []
    index += len(_SYLLABLES)  # keep at least two syllables
    while index:
        index, rem = divmod(index, len(_SYLLABLES))
        parts.append(_SYLLABLES[rem])
    return "".join(parts)


@dataclass
class SynthSpec:
    num_classes: int = 20
    terms_per_class: int = 40
    sentences: int = 4000
    channel_mix: dict[str, float] = field(default_factory=lambda: {
        "lin": 1.0, "list": 1.0, "dep": 1.0, "sp": 1.0, "up": 1.0})
    coverage: dict[str, float] = field(default_factory=dict)
    # Channel groups that each see a disjoint share of every class's terms
    # (e.g. (("lin",), ("list", "sp")) splits the evidence half and half);
    # channels outside any group keep full visibility.
    partition_channels: tuple[tuple[str, ...], ...] = ()
    noise: float = 0.0
    min_term_frequency: int = 12
    background_terms: int = 60
    background_occurrences: int = 5
    variation_rate: float = 0.15
    bullet_share: float = 0.25
    # Vocabulary size of the generic filler words; a large pool makes the
    # window context of top-up sentences look informative without being so,
    # diluting channels that only eavesdrop on co-occurrence.
    generic_pool: int = 40
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_classes > 0 and self.sentences <= 0:
            raise DatasetError("nonzero classes require a positive sentence budget")
        if self.num_classes > 0 and self.terms_per_class < 1:
            raise DatasetError("terms_per_class must be >= 1")
        active = {c: w for c, w in self.channel_mix.items() if w > 0}
        if self.num_classes > 0 and not active:
            raise DatasetError("at least one channel must have positive weight")


class _Lexicon:
    """Deterministic pseudo-word allocator."""

    def __init__(self):
        self.next = 0

    def words(self, n: int) -> list[str]:
        out = [_pseudo_word(self.next + i) for i in range(n)]
        self.next += n
        return out


@dataclass
class _Term:
    surface: str       # canonical two-word surface
    variant: Optional[str]  # hyphenated one-token variant, if any
    cls: int
    index: int


class _SentenceWriter:
    """Collects sentence blocks; a multi-sentence block (e.g. a bullet run)
    stays contiguous through the final corpus shuffle."""

    def __init__(self):
        self.blocks: list[str] = []

    @staticmethod
    def _render(rows: list[tuple[str, int | str, str, str]],
                bullet: bool) -> str:
        lines = []
        if bullet:
            lines.append("#bullet")
        for i, (surface, head, label, chunk) in enumerate(rows):
            pos = "NOUN" if chunk != "O" else ("PUNCT" if surface in ",.;" else "X")
            lines.append(f"{i}\t{surface}\t{surface.lower()}\t{pos}\t{head}\t{label}\t{chunk}")
        return "\n".join(lines)

    def add(self, rows: list[tuple[str, int | str, str, str]],
            bullet: bool = False) -> None:
        """rows: (surface, head index or 'ROOT', dep label, chunk tag)."""
        self.blocks.append(self._render(rows, bullet))

    def add_run(self, sentences: list[list[tuple[str, int | str, str, str]]],
                bullet: bool = True) -> None:
        self.blocks.append("\n\n".join(self._render(rows, bullet)
                                       for rows in sentences))


def _term_rows(surface: str, head: int | str, label: str,
               offset: int) -> list[tuple[str, int | str, str, str]]:
    """Token rows for one term chunk; internal tokens attach to the last."""
    words = surface.split(" ")
    rows = []
    last = offset + len(words) - 1
    for i, w in enumerate(words):
        if offset + i == last:
            rows.append((w, head, label, "B-NP" if i == 0 else "I-NP"))
        else:
            rows.append((w, last, "compound", "B-NP" if i == 0 else "I-NP"))
    return rows


class _Synthesizer:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.rng_seed)
        lex = _Lexicon()
        self.verbs = lex.words(6)
        self.generic_words = lex.words(spec.generic_pool)
        self.terms: list[_Term] = []
        self.class_terms: list[list[int]] = []
        self.lin_words: list[list[str]] = []
        self.dep_verbs: list[list[str]] = []
        self.dep_objs: list[list[str]] = []
        self.up_frames: list[list[str]] = []
        for c in range(spec.num_classes):
            ids = []
            for j in range(spec.terms_per_class):
                w1, w2 = lex.words(2)
                surface = f"{w1} {w2}"
                variant = f"{w1}-{w2}" if j % 5 == 0 else None
                ids.append(len(self.terms))
                self.terms.append(_Term(surface, variant, c, j))
            self.class_terms.append(ids)
            self.lin_words.append(lex.words(6))
            self.dep_verbs.append(lex.words(2))
            self.dep_objs.append(lex.words(2))
            self.up_frames.append(lex.words(4))
        self.background = [f"{a} {b}" for a, b in
                           zip(lex.words(spec.background_terms),
                               lex.words(spec.background_terms))]
        self.freq = Counter()
        self.writer = _SentenceWriter()
        self.visible = self._visibility(spec)

    def _visibility(self, spec: SynthSpec) -> dict[str, list[list[int]]]:
        visible: dict[str, list[list[int]]] = {
            ch: [list(ids) for ids in self.class_terms]
            for ch in ("lin", "list", "dep", "sp", "up")
        }
        if spec.partition_channels:
            shares: list[list[list[int]]] = [[] for _ in spec.partition_channels]
            for ids in self.class_terms:
                perm = self.rng.permutation(len(ids))
                for g in range(len(spec.partition_channels)):
                    chunk = perm[g::len(spec.partition_channels)]
                    shares[g].append(sorted(ids[i] for i in chunk))
            for g, group in enumerate(spec.partition_channels):
                for ch in group:
                    visible[ch] = shares[g]
        for channel, frac in sorted(spec.coverage.items()):
            per_class = []
            for ids in visible[channel]:
                k = max(2, int(round(frac * len(ids))))
                perm = self.rng.permutation(len(ids))
                per_class.append(sorted(ids[i] for i in perm[:k]))
            visible[channel] = per_class
        return visible

    # -- term emission --------------------------------------------------------

    def _term_surface(self, tid: int) -> str:
        term = self.terms[tid]
        self.freq[tid] += 1
        if term.variant and self.rng.random() < self.spec.variation_rate:
            return term.variant
        return term.surface

    def _signal_class(self, c: int) -> int:
        if self.spec.noise > 0 and self.rng.random() < self.spec.noise:
            others = [k for k in range(self.spec.num_classes) if k != c]
            if others:
                return int(self.rng.choice(others))
        return c

    def _pick(self, pool: Sequence, n: int = 1) -> list:
        idx = self.rng.choice(len(pool), size=min(n, len(pool)), replace=False)
        return [pool[i] for i in sorted(idx)]

    # -- sentence templates ----------------------------------------------------

    def lin_sentence(self, c: int) -> None:
        tid = self._pick(self.visible["lin"][c])[0]
        sc = self._signal_class(c)
        c1, c2, c3 = self._pick(self.lin_words[sc], 3)
        vb = self._pick(self.verbs)[0]
        term_rows = _term_rows(self._term_surface(tid), 0, "nsubj", 0)
        verb_at = len(term_rows) + 3
        rows = _term_rows_with_head(term_rows, verb_at)
        rows.append((c1, verb_at, "obj", "O"))
        rows.append((c2, verb_at, "obl", "O"))
        rows.append((c3, verb_at, "obl", "O"))
        rows.append((vb, "ROOT", "root", "O"))
        rows.append((".", verb_at, "punct", "O"))
        self.writer.add(rows)

    def list_sentence(self, c: int) -> None:
        sc = self._signal_class(c)
        n_items = int(self.rng.integers(3, 6))
        items = self._pick(self.visible["list"][sc], n_items)
        if len(items) < 3:
            return
        order = self.rng.permutation(len(items))
        items = [items[i] for i in order]
        if self.rng.random() < self.spec.bullet_share:
            run = []
            for tid in items:
                rows = _term_rows(self._term_surface(tid), "ROOT", "root", 0)
                rows.append((".", len(rows) - 1, "punct", "O"))
                run.append(rows)
            self.writer.add_run(run)
            return
        vb = self._pick(self.verbs)[0]
        rows = [(vb, "ROOT", "root", "O")]
        for pos, tid in enumerate(items):
            if pos > 0:
                if pos == len(items) - 1 and self.rng.random() < 0.5:
                    rows.append(("and", 0, "cc", "O"))
                else:
                    rows.append((",", 0, "punct", "O"))
            rows.extend(_term_rows(self._term_surface(tid), 0, "conj", len(rows)))
        rows.append((".", 0, "punct", "O"))
        self.writer.add(rows)

    def dep_sentence(self, c: int) -> None:
        tid = self._pick(self.visible["dep"][c])[0]
        sc = self._signal_class(c)
        dv = self._pick(self.dep_verbs[sc])[0]
        do = self._pick(self.dep_objs[sc])[0]
        term_rows = _term_rows(self._term_surface(tid), 0, "nsubj", 0)
        base = len(term_rows)
        rows = _term_rows_with_head(term_rows, base)
        rows.append((dv, "ROOT", "root", "O"))
        rows.append((do, base, "dobj", "O"))
        rows.append((".", base, "punct", "O"))
        self.writer.add(rows)

    def sp_sentence(self, c: int) -> None:
        sc = self._signal_class(c)
        pair = self._pick(self.visible["sp"][sc], 2)
        if len(pair) < 2:
            return
        if self.rng.random() < 0.5:
            pair = [pair[1], pair[0]]
        infix = [("and",), ("or",), ("rather", "than")][int(self.rng.integers(0, 3))]
        vb = self._pick(self.verbs)[0]
        rows = [(vb, "ROOT", "root", "O")]
        rows.extend(_term_rows(self._term_surface(pair[0]), 0, "dobj", len(rows)))
        for w in infix:
            rows.append((w, 0, "cc", "O"))
        rows.extend(_term_rows(self._term_surface(pair[1]), 0, "conj", len(rows)))
        rows.append((".", 0, "punct", "O"))
        self.writer.add(rows)

    def up_sentence(self, c: int) -> None:
        tid = self._pick(self.visible["up"][c])[0]
        sc = self._signal_class(c)
        f1, f2, f3 = self._pick(self.up_frames[sc], 3)
        vb = self._pick(self.verbs)[0]
        rows = [(vb, "ROOT", "root", "O"),
                (f1, 0, "attr", "O"),
                (f2, 0, "attr", "O")]
        rows.extend(_term_rows(self._term_surface(tid), 0, "nsubj", len(rows)))
        rows.append((f3, 0, "attr", "O"))
        rows.append((".", 0, "punct", "O"))
        self.writer.add(rows)

    def generic_sentence(self, surface_provider) -> None:
        g1, g2 = self._pick(self.generic_words, 2)
        vb = self._pick(self.verbs)[0]
        rows = [(vb, "ROOT", "root", "O"), (g1, 0, "attr", "O")]
        rows.extend(_term_rows(surface_provider(), 0, "nsubj", len(rows)))
        rows.append((g2, 0, "attr", "O"))
        rows.append((".", 0, "punct", "O"))
        self.writer.add(rows)

    # -- main loop --------------------------------------------------------------

    def run(self) -> None:
        spec = self.spec
        channels = sorted(c for c, w in spec.channel_mix.items() if w > 0)
        weights = np.array([spec.channel_mix[c] for c in channels], dtype=np.float64)
        weights = weights / weights.sum()
        emit = {"lin": self.lin_sentence, "list": self.list_sentence,
                "dep": self.dep_sentence, "sp": self.sp_sentence,
                "up": self.up_sentence}
        for _ in range(spec.sentences):
            channel = channels[int(self.rng.choice(len(channels), p=weights))]
            cls = int(self.rng.integers(0, spec.num_classes))
            emit[channel](cls)

        for surface in self.background:
            for _ in range(spec.background_occurrences):
                self.generic_sentence(lambda s=surface: s)

        for tid, term in enumerate(self.terms):
            while self.freq[tid] < spec.min_term_frequency:
                self.generic_sentence(lambda t=tid: self._term_surface(t))


def _term_rows_with_head(rows: list, head: int) -> list:
    """Repoint the chunk-external head of already-built term rows."""
    out = []
    for surface, h, label, chunk in rows:
        out.append((surface, head if h == 0 else h, label, chunk))
    return out


def generate_synthetic_corpus(spec: SynthSpec, out_dir: Path | str,
                              ) -> tuple[Path, dict[str, list[str]]]:
    """Write a planted-class corpus plus gold term lists.

    Returns the corpus path and a map of list name -> term surfaces.  Every
    planted term reaches the pruning-floor frequency; identical specs yield
    byte-identical output.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    synth = _Synthesizer(spec)
    synth.run()

    blocks = synth.writer.blocks
    order = synth.rng.permutation(len(blocks))
    corpus_path = out / "corpus.txt"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for i, idx in enumerate(order):
            if i % 20 == 0:
                fh.write(f"#doc synth-{i // 20:05d}\n")
            fh.write(blocks[idx])
            fh.write("\n\n")

    gold: dict[str, list[str]] = {}
    lists_dir = out / "lists"
    lists_dir.mkdir(exist_ok=True)
    for c, ids in enumerate(synth.class_terms):
        name = f"class_{c:02d}"
        surfaces = [synth.terms[t].surface for t in ids]
        gold[name] = surfaces
        (lists_dir / f"{name}.txt").write_text(
            "".join(s + "\n" for s in surfaces), encoding="utf-8")
    return corpus_path, gold
