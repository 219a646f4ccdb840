"""Skip-gram negative-sampling embeddings over aggregated pair streams.

One model is trained per context type from (focus, context, count) triples.
Focus vectors are updated against context vectors drawn as negatives from
the context unigram distribution raised to 0.75; after training only the
term-group focus rows are retained (word foci and all context vectors are
pruned).  Training is single-threaded and bit-deterministic given the
config seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .corpus import TermGroupTable, Unit, escape_canonical

LR_FLOOR_FACTOR = 1e-4
NEG_POWER = 0.75
# Scores beyond this are treated as fully saturated (gradient 0 in the
# already-correct direction), which keeps batched updates from diverging.
MAX_SCORE = 6.0


class TrainingError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    subsample_threshold: float = 1e-4
    min_pair_count: int = 5
    rng_seed: int = 1
    batch_size: int = 256
    # Guard against runaway vocabularies: focus + context matrices together
    # must fit in this many bytes of float64 storage.
    max_matrix_bytes: int = 4 << 30

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.initial_lr < 0:
            raise ValueError("learning rate must be >= 0")
        if self.min_pair_count < 1:
            raise ValueError("min_pair_count must be >= 1")


class EmbeddingModel:
    """Per-context-type map from term-group id to a dense vector."""

    def __init__(self, context_type: str, vocab: dict[int, int],
                 vectors: np.ndarray, metadata: Optional[dict] = None):
        if len(vocab) != vectors.shape[0]:
            raise ValueError("vocab/vector row mismatch")
        self.context_type = context_type
        self.vocab = vocab
        self.vectors = vectors
        self.metadata = metadata or {}
        self._ids = np.array(sorted(vocab, key=vocab.get), dtype=np.int64)
        norms = np.linalg.norm(vectors, axis=1)
        norms[norms == 0.0] = 1.0
        self.unit_vectors = vectors / norms[:, None]

    def __contains__(self, gid: int) -> bool:
        return gid in self.vocab

    def __len__(self) -> int:
        return len(self.vocab)

    def vector(self, gid: int) -> np.ndarray:
        try:
            return self.vectors[self.vocab[gid]]
        except KeyError:
            raise KeyError(f"term group {gid} not in model vocab") from None

    def cosine(self, a: int, b: int) -> float:
        """Cosine similarity of two stored term vectors."""
        ua = self.unit_vectors[self._row(a)]
        ub = self.unit_vectors[self._row(b)]
        return float(np.dot(ua, ub))

    def _row(self, gid: int) -> int:
        try:
            return self.vocab[gid]
        except KeyError:
            raise KeyError(f"term group {gid} not in model vocab") from None

    def nearest(self, query: Union[int, np.ndarray], k: int,
                exclude: Iterable[int] = ()) -> list[tuple[int, float]]:
        """Top-k terms by cosine, ties broken by ascending group id.

        Querying by id excludes the id itself; ``exclude`` removes further
        ids (e.g. all seed terms) from the candidates.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        skip = set(exclude)
        if isinstance(query, (int, np.integer)):
            row = self._row(int(query))
            vec = self.unit_vectors[row]
            skip.add(int(query))
        else:
            vec = np.asarray(query, dtype=np.float64)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
        sims = self.unit_vectors @ vec
        order = np.lexsort((self._ids, -sims))
        out = []
        for idx in order:
            gid = int(self._ids[idx])
            if gid in skip:
                continue
            out.append((gid, float(sims[idx])))
            if len(out) == k:
                break
        return out

    # --- persistence -------------------------------------------------------

    def save(self, path: Path | str, table: TermGroupTable) -> None:
        """Text format: header ``vocab dim context_type``, then one line per
        term ``canonical floats...`` (spaces in canonicals escaped)."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vocab)} {self.vectors.shape[1]} {self.context_type}\n")
            for gid in sorted(self.vocab):
                row = self.vectors[self.vocab[gid]]
                name = escape_canonical(table.canonical(gid))
                fh.write(name + " " + " ".join(repr(float(x)) for x in row) + "\n")
        meta = dict(self.metadata)
        meta["context_type"] = self.context_type
        with open(path.with_suffix(path.suffix + ".meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: Path | str, table: TermGroupTable) -> "EmbeddingModel":
        path = Path(path)
        by_escaped = {escape_canonical(g.canonical): g.id for g in table.groups}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            size, dim, context_type = int(header[0]), int(header[1]), header[2]
            vocab: dict[int, int] = {}
            vectors = np.empty((size, dim), dtype=np.float64)
            for i, line in enumerate(fh):
                parts = line.rstrip("\n").split(" ")
                name, values = parts[0], parts[1:]
                if name not in by_escaped:
                    raise KeyError(f"term {name!r} not present in group table")
                vocab[by_escaped[name]] = i
                vectors[i] = [float(v) for v in values]
        if len(vocab) != size:
            raise ValueError("model file vocab size mismatch")
        meta_path = path.with_suffix(path.suffix + ".meta.json")
        metadata = {}
        if meta_path.is_file():
            metadata = json.loads(meta_path.read_text(encoding="utf-8"))
        return cls(context_type, vocab, vectors, metadata)


def cosine(model: EmbeddingModel, a: int, b: int) -> float:
    return model.cosine(a, b)


def grouping_similarity(model: EmbeddingModel, table: TermGroupTable):
    """Adapt a trained model into the similarity gate used by term
    variation grouping: cosine when both normalized terms resolve to model
    vocabulary, None (no veto) otherwise."""
    def similarity(a: str, b: str) -> Optional[float]:
        ga, gb = table.resolve(a), table.resolve(b)
        if ga is None or gb is None or ga not in model or gb not in model:
            return None
        return model.cosine(ga, gb)
    return similarity


def nearest(model: EmbeddingModel, query: Union[int, np.ndarray],
            k: int) -> list[tuple[int, float]]:
    return model.nearest(query, k)


# --- training ----------------------------------------------------------------


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable log(sigmoid(x)) for loss reporting.
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))),
                    x - np.log1p(np.exp(-np.abs(x))))


def _keep_probability(count: np.ndarray, total: int, threshold: float) -> np.ndarray:
    """word2vec-style subsampling keep probability per unit frequency."""
    if threshold <= 0:
        return np.ones_like(count, dtype=np.float64)
    z = count / total
    p = (np.sqrt(z / threshold) + 1.0) * (threshold / z)
    return np.minimum(p, 1.0)


def _focus_sort_key(unit: Unit):
    if isinstance(unit, int):
        return (0, unit, "")
    return (1, 0, unit)


def train(pairs: Iterable[tuple[Unit, str, int]], cfg: TrainConfig,
          context_type: str = "lin",
          corpus_fingerprint: str = "") -> EmbeddingModel:
    """Train an SGNS model from an aggregated (focus, context, count) stream.

    For every pair occurrence the objective maximizes
    ``log s(v_f . u_c) + sum_neg log s(-v_f . u_n)`` with negatives drawn
    from the context unigram distribution raised to 0.75.  The learning
    rate decays linearly over all scheduled updates.  Word foci take part
    in training but only term-group rows are kept in the returned model.
    """
    filtered = [(f, c, n) for f, c, n in pairs if n >= cfg.min_pair_count]
    if not filtered:
        raise TrainingError("empty pair stream after min-count filtering")
    filtered.sort(key=lambda t: (_focus_sort_key(t[0]), t[1]))

    foci = sorted({f for f, _, _ in filtered}, key=_focus_sort_key)
    contexts = sorted({c for _, c, _ in filtered})
    needed = (len(foci) + len(contexts)) * cfg.dim * 8
    if needed > cfg.max_matrix_bytes:
        raise TrainingError(
            f"model matrices need {needed} bytes, over the "
            f"{cfg.max_matrix_bytes} budget")
    f_index = {f: i for i, f in enumerate(foci)}
    c_index = {c: i for i, c in enumerate(contexts)}

    f_ids = np.array([f_index[f] for f, _, _ in filtered], dtype=np.int64)
    c_ids = np.array([c_index[c] for _, c, _ in filtered], dtype=np.int64)
    counts = np.array([n for _, _, n in filtered], dtype=np.int64)

    rng = np.random.default_rng(cfg.rng_seed)
    focus_vecs = (rng.random((len(foci), cfg.dim), dtype=np.float64) - 0.5) / cfg.dim
    context_vecs = np.zeros((len(contexts), cfg.dim), dtype=np.float64)

    # Subsampling thins pair occurrences by focus and context frequency.
    total = int(counts.sum())
    f_totals = np.bincount(f_ids, weights=counts, minlength=len(foci))
    c_totals = np.bincount(c_ids, weights=counts, minlength=len(contexts))
    keep = (_keep_probability(f_totals, total, cfg.subsample_threshold)[f_ids]
            * _keep_probability(c_totals, total, cfg.subsample_threshold)[c_ids])
    effective = rng.binomial(counts, keep).astype(np.int64)
    if effective.sum() == 0:
        effective = np.ones_like(counts)  # never drop the whole stream

    stream = np.repeat(np.arange(len(filtered)), effective)
    neg_weights = np.power(c_totals, NEG_POWER)
    neg_cdf = np.cumsum(neg_weights)
    neg_total = neg_cdf[-1]

    total_updates = max(1, len(stream) * cfg.epochs)
    done = 0
    epoch_losses: list[float] = []
    for _ in range(cfg.epochs):
        order = stream.copy()
        rng.shuffle(order)
        loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            fi = f_ids[batch]
            ci = c_ids[batch]
            ni = np.searchsorted(neg_cdf, rng.random((len(batch), cfg.negatives)) * neg_total)

            lr = cfg.initial_lr * max(1.0 - done / total_updates, LR_FLOOR_FACTOR)
            done += len(batch)

            f = focus_vecs[fi]                      # B x d
            c = context_vecs[ci]                    # B x d
            nvecs = context_vecs[ni]                # B x k x d

            pos_score = np.einsum("bd,bd->b", f, c)
            neg_score = np.einsum("bd,bkd->bk", f, nvecs)
            loss += float(-_log_sigmoid(pos_score).sum()
                          - _log_sigmoid(-neg_score).sum())

            g_pos = (1.0 - _saturating_sigmoid(pos_score)) * lr  # B
            g_neg = -_saturating_sigmoid(neg_score) * lr         # B x k

            f_grad = g_pos[:, None] * c + np.einsum("bk,bkd->bd", g_neg, nvecs)
            np.add.at(focus_vecs, fi, f_grad)
            np.add.at(context_vecs, ci, g_pos[:, None] * f)
            np.add.at(context_vecs, ni.ravel(),
                      (g_neg[:, :, None] * f[:, None, :]).reshape(-1, cfg.dim))
        epoch_losses.append(loss)

    term_ids = [f for f in foci if isinstance(f, int)]
    vocab = {gid: row for row, gid in enumerate(sorted(term_ids))}
    vectors = np.empty((len(vocab), cfg.dim), dtype=np.float64)
    for gid, row in vocab.items():
        vectors[row] = focus_vecs[f_index[gid]]

    metadata = {
        "config": asdict(cfg),
        "corpus_fingerprint": corpus_fingerprint,
        "epoch_losses": epoch_losses,
        "pairs": len(filtered),
        "pair_occurrences": total,
        "effective_occurrences": int(effective.sum()),
        "context_vocab": len(contexts),
    }
    return EmbeddingModel(context_type, vocab, vectors, metadata)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _saturating_sigmoid(x: np.ndarray) -> np.ndarray:
    out = _sigmoid(x)
    out[x > MAX_SCORE] = 1.0
    out[x < -MAX_SCORE] = 0.0
    return out
