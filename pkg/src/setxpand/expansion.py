"""Seed-to-candidate scoring over the five context-type models.

Two scoring methods per model: *cent* ranks candidates by cosine to the
seed centroid; *csum* averages per-seed L1-normalized cosines over the
seed terms.  The ten (context type x method) raw score maps are combined
into softmax-normalized feature vectors for the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .contexts import CONTEXT_TYPES
from .corpus import TermGroupTable
from .embeddings import EmbeddingModel

METHODS = ("cent", "csum")
# Fixed feature column order: context types x methods.
FEATURE_COLUMNS = tuple(f"{ctx}_{m}" for ctx in CONTEXT_TYPES for m in METHODS)


class ExpansionError(Exception):
    pass


@dataclass(frozen=True)
class SeedSet:
    terms: tuple[int, ...]
    resolved_from: tuple[str, ...] = ()
    unresolved: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.terms:
            raise ExpansionError("seed set must contain at least one term")
        if len(set(self.terms)) != len(self.terms):
            raise ExpansionError("seed terms must be unique")


def resolve_seed(strings: Sequence[str], table: TermGroupTable,
                 models: Mapping[str, EmbeddingModel]) -> SeedSet:
    """Resolve input strings to term-group ids present in some model vocab.

    Unresolvable inputs are reported on the seed set, never dropped
    silently; resolving nothing at all is an error.
    """
    ids: list[int] = []
    resolved: list[str] = []
    unresolved: list[str] = []
    for s in strings:
        gid = table.resolve(s)
        if gid is not None and any(gid in m for m in models.values()):
            if gid not in ids:
                ids.append(gid)
                resolved.append(s)
        else:
            unresolved.append(s)
    if not ids:
        raise ExpansionError(f"no seed term could be resolved: {list(strings)}")
    return SeedSet(tuple(ids), tuple(resolved), tuple(unresolved))


@dataclass(frozen=True)
class ScoringParams:
    k: int = 500
    k_prime: int = 500

    def __post_init__(self):
        if self.k < 1 or self.k_prime < 1:
            raise ValueError("k and k_prime must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    candidate: int
    features: tuple[float, ...]  # len 10, FEATURE_COLUMNS order

    def __post_init__(self):
        if len(self.features) != len(FEATURE_COLUMNS):
            raise ValueError("feature vector must have 10 entries")


def score_centroid(model: Optional[EmbeddingModel], seed: SeedSet,
                   k: int) -> dict[int, float]:
    """Cosine of the k nearest non-seed terms to the mean seed vector.

    Seed terms missing from this model's vocab are skipped from the mean;
    when none is present the model contributes no candidates (all scores
    implicitly zero).
    """
    if model is None:
        return {}
    in_vocab = [t for t in seed.terms if t in model]
    if not in_vocab:
        return {}
    centroid = np.mean([model.vector(t) for t in in_vocab], axis=0)
    neighbors = model.nearest(centroid, k, exclude=seed.terms)
    return {gid: sim for gid, sim in neighbors}


def score_combsum(model: Optional[EmbeddingModel], seed: SeedSet,
                  k_prime: int) -> dict[int, float]:
    """Mean over seed terms of per-seed normalized cosine similarities.

    Per seed: take its k' nearest non-seed terms and L1-normalize the
    (negative-clamped) cosines over them; a candidate absent from a seed's
    list contributes 0 for that seed.  The mean runs over the seed terms
    present in this model's vocab.
    """
    if model is None:
        return {}
    in_vocab = [t for t in seed.terms if t in model]
    if not in_vocab:
        return {}
    sums: dict[int, float] = {}
    for s in in_vocab:
        neighbors = model.nearest(s, k_prime, exclude=seed.terms)
        mass = sum(max(sim, 0.0) for _, sim in neighbors)
        for gid, sim in neighbors:
            share = max(sim, 0.0) / mass if mass > 0 else 0.0
            sums[gid] = sums.get(gid, 0.0) + share
    return {gid: total / len(in_vocab) for gid, total in sums.items()}


def score_all(models: Mapping[str, Optional[EmbeddingModel]], seed: SeedSet,
              params: Mapping[str, ScoringParams]) -> dict[str, dict[int, float]]:
    """All ten raw score maps, keyed by feature column name."""
    scores: dict[str, dict[int, float]] = {}
    for ctx in CONTEXT_TYPES:
        model = models.get(ctx)
        p = params.get(ctx, ScoringParams())
        scores[f"{ctx}_cent"] = score_centroid(model, seed, p.k)
        scores[f"{ctx}_csum"] = score_combsum(model, seed, p.k_prime)
    return scores


def softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    e = np.exp(shifted)
    return e / e.sum()


def features_from_scores(scores: Mapping[str, Mapping[int, float]],
                         extra_candidates: Iterable[int] = ()) -> list[FeatureVector]:
    """Softmax-normalize each raw score column over the candidate universe.

    The universe is the union of all score map supports plus any extra
    candidates (used to give labeled examples defined features); candidates
    missing from a column get raw score 0 there.  Columns each sum to 1.
    """
    universe = set(extra_candidates)
    for col in scores.values():
        universe.update(col)
    if not universe:
        raise ExpansionError("empty candidate universe")
    candidates = sorted(universe)
    matrix = np.zeros((len(candidates), len(FEATURE_COLUMNS)))
    for j, name in enumerate(FEATURE_COLUMNS):
        col = scores.get(name, {})
        raw = np.array([col.get(gid, 0.0) for gid in candidates])
        matrix[:, j] = softmax(raw)
    return [FeatureVector(gid, tuple(float(x) for x in matrix[i]))
            for i, gid in enumerate(candidates)]


def build_features(models: Mapping[str, Optional[EmbeddingModel]], seed: SeedSet,
                   params: Mapping[str, ScoringParams],
                   extra_candidates: Iterable[int] = ()) -> list[FeatureVector]:
    """The 10-dimensional softmax-normalized feature vectors, sorted by
    candidate id."""
    return features_from_scores(score_all(models, seed, params), extra_candidates)


def save_features(features: Sequence[FeatureVector], path,
                  table=None) -> None:
    """Feature dump: TSV ``candidate f1..f10`` with a named-column header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("candidate\t" + "\t".join(FEATURE_COLUMNS) + "\n")
        for fv in features:
            name = table.canonical(fv.candidate) if table is not None \
                else str(fv.candidate)
            fh.write(name + "\t" +
                     "\t".join(repr(x) for x in fv.features) + "\n")


def rank_raw_scores(col: Mapping[int, float], n: int) -> list[tuple[int, float]]:
    ranked = sorted(col.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def rank_by_single(models: Mapping[str, Optional[EmbeddingModel]], seed: SeedSet,
                   context_type: str, method: str,
                   params: Mapping[str, ScoringParams], n: int) -> list[tuple[int, float]]:
    """Ranking by one (context type, scoring method) column: descending raw
    score, ties by ascending group id, truncated to n."""
    if context_type not in CONTEXT_TYPES:
        raise ExpansionError(f"unknown context type {context_type!r}")
    if method not in METHODS:
        raise ExpansionError(f"unknown scoring method {method!r}")
    model = models.get(context_type)
    p = params.get(context_type, ScoringParams())
    if method == "cent":
        col = score_centroid(model, seed, p.k)
    else:
        col = score_combsum(model, seed, p.k_prime)
    return rank_raw_scores(col, n)
