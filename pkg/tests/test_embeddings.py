"""SGNS trainer and embedding model store."""

import numpy as np
import pytest

from setxpand.corpus import group_term_variations
from setxpand.embeddings import (
    EmbeddingModel,
    TrainConfig,
    TrainingError,
    train,
)


def tiny_cfg(**kw):
    base = dict(dim=16, negatives=3, epochs=10, initial_lr=0.05,
                subsample_threshold=0.0, min_pair_count=1, rng_seed=7)
    base.update(kw)
    return TrainConfig(**base)


def planted_pairs(shared=30, disjoint=30):
    """Groups 0 and 1 share contexts; group 2 uses its own."""
    pairs = []
    for i in range(shared):
        pairs.append((0, f"ctx{i % 10}", 3))
        pairs.append((1, f"ctx{i % 10}", 3))
        pairs.append((2, f"other{i % 10}", 3))
    for i in range(disjoint):
        pairs.append(("filler", f"ctx{i % 10}", 1))
    return pairs


class TestTrain:
    def test_planted_similarity(self):
        for seed in range(5):
            model = train(planted_pairs(), tiny_cfg(rng_seed=seed))
            assert model.cosine(0, 1) > model.cosine(0, 2)

    def test_zero_lr_keeps_initial_vectors(self):
        pairs = [(0, "ctx", 4)]
        init = train(pairs, tiny_cfg(epochs=0))
        untouched = train(pairs, tiny_cfg(epochs=1, initial_lr=0.0))
        assert np.array_equal(init.vectors, untouched.vectors)

    def test_loss_decreases(self):
        rng = np.random.default_rng(0)
        pairs = [(int(rng.integers(0, 10)), f"c{rng.integers(0, 12)}", 1)
                 for _ in range(100)]
        model = train(pairs, tiny_cfg(epochs=5))
        losses = model.metadata["epoch_losses"]
        assert len(losses) == 5
        assert losses[4] < losses[0]

    def test_word_foci_pruned(self):
        pairs = [(0, "ctx", 5), ("word", "ctx", 5)]
        model = train(pairs, tiny_cfg())
        assert 0 in model
        assert len(model) == 1

    def test_min_pair_count_filter(self):
        pairs = [(0, "kept", 5), (1, "dropped", 1)]
        model = train(pairs, tiny_cfg(min_pair_count=2))
        assert 0 in model and 1 not in model

    def test_empty_stream_error(self):
        with pytest.raises(TrainingError):
            train([], tiny_cfg())
        with pytest.raises(TrainingError):
            train([(0, "c", 1)], tiny_cfg(min_pair_count=10))

    def test_memory_budget_error(self):
        with pytest.raises(TrainingError):
            train(planted_pairs(), tiny_cfg(max_matrix_bytes=100))

    def test_deterministic(self):
        a = train(planted_pairs(), tiny_cfg())
        b = train(planted_pairs(), tiny_cfg())
        assert np.array_equal(a.vectors, b.vectors)
        c = train(planted_pairs(), tiny_cfg(rng_seed=8))
        assert not np.array_equal(a.vectors, c.vectors)

    def test_pair_order_does_not_matter(self):
        pairs = planted_pairs()
        a = train(pairs, tiny_cfg())
        b = train(list(reversed(pairs)), tiny_cfg())
        assert np.array_equal(a.vectors, b.vectors)

    def test_no_zero_rows(self):
        model = train(planted_pairs(), tiny_cfg())
        assert np.all(np.linalg.norm(model.vectors, axis=1) > 0)

    def test_positive_pairs_move_together(self):
        pairs = planted_pairs(shared=60, disjoint=60)
        term_pairs = [(0, 1)]  # share all contexts
        before = train(pairs, tiny_cfg(epochs=0))
        after = train(pairs, tiny_cfg(epochs=20))
        mean_before = np.mean([before.cosine(a, b) for a, b in term_pairs])
        mean_after = np.mean([after.cosine(a, b) for a, b in term_pairs])
        assert mean_after > mean_before


class TestCosine:
    @pytest.fixture()
    def model(self):
        vocab = {0: 0, 1: 1, 2: 2}
        vectors = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        return EmbeddingModel("lin", vocab, vectors)

    def test_identity(self, model):
        assert model.cosine(0, 0) == pytest.approx(1.0)

    def test_symmetry(self, model):
        assert model.cosine(0, 2) == pytest.approx(model.cosine(2, 0))

    def test_orthogonal(self, model):
        assert model.cosine(0, 1) == pytest.approx(0.0)

    def test_unknown_id(self, model):
        with pytest.raises(KeyError):
            model.cosine(0, 99)


class TestNearest:
    @pytest.fixture()
    def model(self):
        vocab = {10: 0, 20: 1, 30: 2, 40: 3}
        vectors = np.array([
            [1.0, 0.0],
            [0.9, 0.1],
            [0.0, 1.0],
            [-1.0, 0.0],
        ])
        return EmbeddingModel("lin", vocab, vectors)

    def test_exhaustive(self, model):
        out = model.nearest(10, k=3)
        assert [gid for gid, _ in out] == [20, 30, 40]

    def test_self_excluded(self, model):
        assert all(gid != 10 for gid, _ in model.nearest(10, k=3))

    def test_hand_ranking_by_vector(self, model):
        out = model.nearest(np.array([1.0, 0.0]), k=4)
        assert [gid for gid, _ in out] == [10, 20, 30, 40]
        assert out[0][1] == pytest.approx(1.0)

    def test_tie_broken_by_id(self):
        vocab = {5: 0, 3: 1, 4: 2}
        vectors = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        model = EmbeddingModel("lin", vocab, vectors)
        out = model.nearest(np.array([1.0, 0.0]), k=2)
        assert [gid for gid, _ in out] == [3, 5]

    def test_prefix_property(self, model):
        k3 = model.nearest(10, k=3)
        k2 = model.nearest(10, k=2)
        assert k3[:2] == k2

    def test_unknown_query(self, model):
        with pytest.raises(KeyError):
            model.nearest(99, k=1)

    def test_bad_k(self, model):
        with pytest.raises(ValueError):
            model.nearest(10, k=0)


class TestPersistence:
    def test_round_trip_cosines_exact(self, tmp_path):
        table = group_term_variations({"New York": 30, "Boston": 20,
                                       "spoon": 10})
        gids = [g.id for g in table.groups]
        pairs = [(g, f"c{i % 4}", 2 + i % 3) for i, g in enumerate(gids * 8)]
        model = train(pairs, tiny_cfg())
        path = tmp_path / "lin.txt"
        model.save(path, table)
        loaded = EmbeddingModel.load(path, table)
        assert loaded.context_type == "lin"
        for a in gids:
            for b in gids:
                assert loaded.cosine(a, b) == model.cosine(a, b)

    def test_metadata_sidecar(self, tmp_path):
        table = group_term_variations({"apple": 10})
        model = train([(0, "c", 3)], tiny_cfg())
        path = tmp_path / "m.txt"
        model.save(path, table)
        assert (tmp_path / "m.txt.meta.json").is_file()
        loaded = EmbeddingModel.load(path, table)
        assert loaded.metadata["config"]["dim"] == 16

    def test_unknown_term_in_file(self, tmp_path):
        table = group_term_variations({"apple": 10})
        path = tmp_path / "m.txt"
        path.write_text("1 2 lin\nmystery 0.5 0.5\n", encoding="utf-8")
        with pytest.raises(KeyError):
            EmbeddingModel.load(path, table)
