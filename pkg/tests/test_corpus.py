"""Corpus ingestion, normalization, variation grouping and unit sequences."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setxpand.corpus import (
    CorpusFormatError,
    IngestConfig,
    TermGroupTable,
    count_chunk_surfaces,
    edit_ratio,
    group_term_variations,
    ingest_corpus,
    normalize_term,
    to_unit_sequences,
)
from .conftest import make_sentence_block

SIRI = make_sentence_block([
    ("Siri", 1, "nsubj", "B-NP"),
    ("uses", "ROOT", "root", "O"),
    ("voice", 3, "compound", "B-NP"),
    ("queries", 1, "dobj", "I-NP"),
    ("and", 1, "cc", "O"),
    ("a", 9, "det", "O"),
    ("natural", 9, "amod", "B-NP"),
    ("language", 9, "compound", "I-NP"),
    ("user", 9, "compound", "I-NP"),
    ("interface", 1, "conj", "I-NP"),
    (".", 1, "punct", "O"),
])

NO_CHUNKS = make_sentence_block([
    ("it", 1, "nsubj", "O"),
    ("rains", "ROOT", "root", "O"),
    (".", 1, "punct", "O"),
])


class TestIngest:
    def test_empty_file(self, reader_for):
        reader = reader_for([])
        assert reader.stats.sentences == 0
        assert list(reader) == []

    def test_counts(self, reader_for):
        blocks = [make_sentence_block([
            ("t%d" % i, "ROOT" if i == 0 else 0, "dep",
             "B-NP" if i in (2, 7) else ("I-NP" if i == 3 else "O"))
            for i in range(10)
        ])]
        reader = reader_for(blocks)
        assert (reader.stats.sentences, reader.stats.tokens,
                reader.stats.chunks) == (1, 10, 2)

    def test_malformed_record_lenient(self, corpus_file):
        good = make_sentence_block([("ok", "ROOT", "root", "O")])
        bad = "0\tonly\tthree\n\n"
        reader = ingest_corpus(corpus_file([good, bad]))
        assert reader.stats.sentences == 1
        assert reader.stats.malformed == 1
        assert len(reader.warnings) == 1

    def test_malformed_record_strict(self, corpus_file):
        bad = "0\tonly\tthree\n\n"
        with pytest.raises(CorpusFormatError):
            ingest_corpus(corpus_file([bad]), IngestConfig(strict=True))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusFormatError):
            ingest_corpus(tmp_path / "nope.txt")

    def test_doc_and_bullet_markers(self, reader_for):
        blocks = ["#doc wiki-1\n", "#bullet\n" + NO_CHUNKS, NO_CHUNKS]
        sents = list(reader_for(["".join(blocks)]))
        assert sents[0].doc_id == "wiki-1" and sents[0].is_bullet_item
        assert sents[1].doc_id == "wiki-1" and not sents[1].is_bullet_item

    def test_self_heading_token_rejected(self, reader_for):
        block = make_sentence_block([("a", 0, "dep", "O")])
        reader = reader_for([block])
        assert reader.stats.malformed == 1


class TestNormalizeTerm:
    def test_hyphen_unification(self):
        assert normalize_term("New-York") == "new york"

    def test_already_normal(self):
        assert normalize_term("apple") == "apple"

    def test_whitespace_and_abbreviation_dots(self):
        assert normalize_term("  The   U.K. ") == "the u.k."

    def test_edge_punctuation(self):
        assert normalize_term('"Paris,"') == "paris"

    def test_empty(self):
        assert normalize_term("") == ""

    @given(st.text(max_size=40))
    @settings(max_examples=200)
    def test_idempotent(self, s):
        once = normalize_term(s)
        assert normalize_term(once) == once


class TestGrouping:
    def test_new_york_variations(self):
        table = group_term_variations(
            {"New York": 100, "New-York": 20, "NYC": 30})
        assert len(table) == 1
        group = table.groups[0]
        assert group.canonical == "New York"
        assert group.corpus_frequency == 150

    def test_no_rule_fires(self):
        table = group_term_variations({"apple": 5, "banana": 5})
        assert len(table) == 2
        assert {g.corpus_frequency for g in table.groups} == {5}

    def test_acronym_rule(self):
        table = group_term_variations({"United Nations": 50, "UN": 40})
        assert len(table) == 1
        assert table.groups[0].canonical == "United Nations"

    def test_lowercase_word_is_not_an_acronym(self):
        table = group_term_variations({"United Nations": 50, "un": 40})
        assert len(table) == 2

    def test_edit_distance_rule(self):
        table = group_term_variations({"colour printers": 5, "color printers": 9})
        assert len(table) == 1
        assert table.groups[0].canonical == "color printers"

    def test_similarity_gate_blocks_edit_merge(self):
        terms = {"colour printers": 5, "color printers": 9}
        vetoed = group_term_variations(terms, similarity=lambda a, b: -1.0)
        assert len(vetoed) == 2
        allowed = group_term_variations(terms, similarity=lambda a, b: 0.9)
        assert len(allowed) == 1

    def test_partition_and_frequency_sum(self):
        freqs = {"New York": 100, "New-York": 20, "NYC": 30, "apple": 5,
                 "United Nations": 50, "UN": 40, "banana": 7}
        table = group_term_variations(freqs)
        members = [m for g in table.groups for m in g.members]
        assert len(members) == len(set(members))
        assert sum(g.corpus_frequency for g in table.groups) == sum(freqs.values())

    def test_order_insensitive(self):
        freqs = {"New York": 100, "New-York": 20, "NYC": 30,
                 "apple": 5, "UN": 40, "United Nations": 50}
        a = group_term_variations(dict(sorted(freqs.items())))
        b = group_term_variations(dict(sorted(freqs.items(), reverse=True)))
        assert {g.members for g in a.groups} == {g.members for g in b.groups}

    def test_edit_ratio_bounds(self):
        assert edit_ratio("abc", "abc") == 1.0
        assert edit_ratio("abc", "xyz") == 0.0
        assert edit_ratio("", "") == 1.0


class TestUnitSequences:
    def test_sentence_without_chunks(self, reader_for):
        reader = reader_for([NO_CHUNKS])
        table = TermGroupTable()
        seqs = list(to_unit_sequences(reader, table))
        assert seqs[0].units == ("it", "rains", ".")

    def test_chunks_become_group_ids(self, reader_for):
        reader = reader_for([SIRI])
        table = group_term_variations(dict(count_chunk_surfaces(reader)))
        (seq,) = to_unit_sequences(reader, table)
        assert len(seq.units) == 7
        term_units = [u for u in seq.units if isinstance(u, int)]
        names = {table.canonical(g) for g in term_units}
        assert names == {"Siri", "voice queries",
                         "natural language user interface"}
        assert [u for u in seq.units if isinstance(u, str)] == \
            ["uses", "and", "a", "."]

    def test_variations_share_a_unit_id(self, reader_for):
        b1 = make_sentence_block([
            ("NYC", 1, "nsubj", "B-NP"), ("sprawls", "ROOT", "root", "O")])
        b2 = make_sentence_block([
            ("New", 1, "compound", "B-NP"), ("York", 2, "nsubj", "I-NP"),
            ("sprawls", "ROOT", "root", "O")])
        reader = reader_for([b1, b2])
        table = group_term_variations({"NYC": 3, "New York": 5})
        seqs = list(to_unit_sequences(reader, table))
        assert seqs[0].units[0] == seqs[1].units[0]

    def test_unseen_chunk_becomes_singleton(self, reader_for):
        reader = reader_for([SIRI])
        table = TermGroupTable()
        (seq,) = to_unit_sequences(reader, table)
        assert len(table) == 3

    def test_length_law(self, reader_for):
        reader = reader_for([SIRI, NO_CHUNKS])
        table = TermGroupTable()
        for seq, sent in zip(to_unit_sequences(reader, table), reader):
            chunk_len = sum(len(c) for c in sent.chunks)
            assert len(seq.units) == len(sent.tokens) - chunk_len + len(sent.chunks)


class TestTableIO:
    def test_round_trip(self, tmp_path):
        table = group_term_variations({"New York": 100, "NYC": 30, "apple": 5})
        path = tmp_path / "groups.tsv"
        table.save(path)
        loaded = TermGroupTable.load(path)
        assert len(loaded) == len(table)
        for g, h in zip(table.groups, loaded.groups):
            assert (g.id, g.canonical, g.members, g.corpus_frequency) == \
                (h.id, h.canonical, h.members, h.corpus_frequency)

    def test_resolve_via_normalization(self):
        table = group_term_variations({"New York": 100, "NYC": 30})
        assert table.resolve("new-york") == table.resolve("New York")
        assert table.resolve("unseen thing") is None
