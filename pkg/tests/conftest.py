"""Shared fixtures: tiny corpora, a small end-to-end workspace."""

from __future__ import annotations

import textwrap
from pathlib import Path

import pytest

from setxpand.corpus import IngestConfig, ingest_corpus


def write_corpus(path: Path, text: str) -> Path:
    path.write_text(textwrap.dedent(text).lstrip("\n"), encoding="utf-8")
    return path


def token_line(i, surface, head, label, chunk="O", lemma=None, pos="X"):
    lemma = lemma if lemma is not None else surface.lower()
    return f"{i}\t{surface}\t{lemma}\t{pos}\t{head}\t{label}\t{chunk}"


def make_sentence_block(rows, doc=None, bullet=False):
    lines = []
    if doc is not None:
        lines.append(f"#doc {doc}")
    if bullet:
        lines.append("#bullet")
    for i, row in enumerate(rows):
        surface, head, label, chunk = row
        lines.append(token_line(i, surface, head, label, chunk))
    return "\n".join(lines) + "\n\n"


@pytest.fixture()
def corpus_file(tmp_path):
    def build(blocks: list[str], name: str = "corpus.txt") -> Path:
        path = tmp_path / name
        path.write_text("".join(blocks), encoding="utf-8")
        return path
    return build


@pytest.fixture()
def reader_for(corpus_file):
    def build(blocks: list[str], strict: bool = False):
        return ingest_corpus(corpus_file(blocks), IngestConfig(strict=strict))
    return build


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """Small but complete pipeline workspace shared by CLI/service tests."""
    from setxpand.dataset import SynthSpec
    from setxpand.embeddings import TrainConfig
    from setxpand.pipeline import PipelineProfile, Workspace, run_end_to_end

    root = tmp_path_factory.mktemp("demo_ws")
    ws = Workspace(root)
    profile = PipelineProfile(
        synth=SynthSpec(num_classes=6, terms_per_class=12, sentences=900,
                        rng_seed=3),
        train=TrainConfig(dim=24, epochs=15, initial_lr=0.05, min_pair_count=1,
                          subsample_threshold=0.0, rng_seed=4),
        dataset_seed=5,
    )
    engine = run_end_to_end(ws, profile)
    return ws, engine
