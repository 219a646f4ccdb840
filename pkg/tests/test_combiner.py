"""MLP combiner: forward pass, gradients, training, ranking, concat baseline."""

import math

import numpy as np
import pytest

from setxpand.combiner import (
    MlpParams,
    MlpTrainConfig,
    TrainingDataError,
    TrainingExample,
    bce_gradients,
    bce_loss,
    concat_baseline_score,
    concat_baseline_train,
    concat_input,
    mlp_forward,
    mlp_train,
    rank_candidates,
)
from setxpand.expansion import FeatureVector, SeedSet
from setxpand.embeddings import EmbeddingModel


def zero_params(input_dim=10, hidden=4, activation="relu"):
    return MlpParams(np.zeros((input_dim, hidden)), np.zeros(hidden),
                     np.zeros(hidden), 0.0, activation)


def hand_forward(weights_in, bias_hidden, weights_out, bias_out, x, activation):
    """Plain-Python forward pass used as the oracle."""
    hidden = []
    for j in range(len(bias_hidden)):
        z = bias_hidden[j]
        for i in range(len(x)):
            z += x[i] * weights_in[i][j]
        if activation == "relu":
            hidden.append(max(z, 0.0))
        else:
            hidden.append(math.tanh(z))
    logit = bias_out
    for j, h in enumerate(hidden):
        logit += h * weights_out[j]
    return 1.0 / (1.0 + math.exp(-logit))


class TestForward:
    def test_all_zero_gives_half(self):
        assert mlp_forward(zero_params(), [0.1] * 10) == pytest.approx(0.5)

    @pytest.mark.parametrize("activation", ["relu", "tanh"])
    def test_hand_computed(self, activation):
        rng = np.random.default_rng(11)
        w_in = rng.normal(size=(10, 4))
        b_h = rng.normal(size=4)
        w_out = rng.normal(size=4)
        b_out = float(rng.normal())
        x = rng.random(10)
        params = MlpParams(w_in, b_h, w_out, b_out, activation)
        expected = hand_forward(w_in.tolist(), b_h.tolist(), w_out.tolist(),
                                b_out, x.tolist(), activation)
        assert mlp_forward(params, x) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_positive_weights(self):
        params = MlpParams(np.full((10, 4), 0.5), np.zeros(4),
                           np.full(4, 0.5), 0.0, "relu")
        x = np.full(10, 0.1)
        lo = mlp_forward(params, x)
        x[3] += 0.2
        hi = mlp_forward(params, x)
        assert hi > lo

    def test_pure_function(self):
        params = zero_params(activation="tanh")
        x = [0.3] * 10
        assert mlp_forward(params, x) == mlp_forward(params, x)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            MlpParams(np.zeros((10, 4)), np.zeros(3), np.zeros(4), 0.0)
        with pytest.raises(ValueError):
            MlpParams(np.zeros((10, 4)), np.zeros(4), np.zeros(4), 0.0,
                      activation="softsign")
        with pytest.raises(ValueError):
            MlpParams(np.full((10, 4), np.nan), np.zeros(4), np.zeros(4), 0.0)


def gradient_check(params: MlpParams, x: np.ndarray, y: np.ndarray,
                   eps: float = 1e-5) -> float:
    """Max relative error of analytic vs central-difference gradients."""
    analytic = bce_gradients(params, x, y)
    tensors = [params.weights_in, params.bias_hidden, params.weights_out]
    worst = 0.0
    for t_idx, tensor in enumerate(tensors):
        grad = np.atleast_1d(np.asarray(analytic[t_idx], dtype=np.float64))
        flat = tensor.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = bce_loss(params, x, y)
            flat[i] = orig - eps
            lo = bce_loss(params, x, y)
            flat[i] = orig
            numeric = (hi - lo) / (2 * eps)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    # scalar bias_out
    orig = params.bias_out
    params.bias_out = orig + eps
    hi = bce_loss(params, x, y)
    params.bias_out = orig - eps
    lo = bce_loss(params, x, y)
    params.bias_out = orig
    numeric = (hi - lo) / (2 * eps)
    denom = max(abs(numeric), abs(analytic[3]), 1e-8)
    return max(worst, abs(numeric - analytic[3]) / denom)


def random_check_instance(rng, activation):
    """Random params/inputs; relu draws keep preactivations off the kink."""
    while True:
        params = MlpParams(rng.normal(size=(10, 4)), rng.normal(size=4),
                           rng.normal(size=4), float(rng.normal()), activation)
        x = rng.normal(size=(6, 10))
        y = (rng.random(6) < 0.5).astype(np.float64)
        if activation == "tanh":
            return params, x, y
        z = x @ params.weights_in + params.bias_hidden
        if np.min(np.abs(z)) > 1e-3:
            return params, x, y


class TestGradients:
    @pytest.mark.parametrize("activation", ["tanh", "relu"])
    def test_finite_difference_check(self, activation):
        rng = np.random.default_rng(21)
        for _ in range(10):
            params, x, y = random_check_instance(rng, activation)
            assert gradient_check(params, x, y) < 1e-4


def separable_examples(n=120, seed=0, flip=False):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        label = i % 2
        center = 0.7 if label else 0.3
        feats = np.clip(rng.normal(center, 0.05, 10), 0.0, 1.0)
        out.append(TrainingExample(tuple(feats), 1 - label if flip else label,
                                   provenance=(i,)))
    return out


def accuracy(params, examples):
    preds = [mlp_forward(params, e.features) > 0.5 for e in examples]
    return float(np.mean([p == (e.label == 1) for p, e in zip(preds, examples)]))


class TestTraining:
    def test_separable_fixture(self):
        examples = separable_examples()
        params, losses = mlp_train(examples, MlpTrainConfig(epochs=200, seed=1))
        assert accuracy(params, examples) >= 0.95
        assert losses[-1] < losses[0]

    def test_duplicated_full_batch_identical(self):
        examples = separable_examples(n=40)
        cfg = MlpTrainConfig(epochs=50, batch=1000, seed=3)
        once, _ = mlp_train(examples, cfg)
        twice, _ = mlp_train(examples + examples, cfg)
        # equality up to float summation order (2N-term vs N-term means)
        np.testing.assert_allclose(once.weights_in, twice.weights_in,
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(once.weights_out, twice.weights_out,
                                   rtol=1e-10, atol=1e-12)
        assert once.bias_out == pytest.approx(twice.bias_out, abs=1e-10)

    def test_single_class_error(self):
        examples = [TrainingExample((0.1,) * 10, 1) for _ in range(10)]
        with pytest.raises(TrainingDataError):
            mlp_train(examples)

    def test_majority_downsampled(self):
        pos = [TrainingExample(tuple(np.full(10, 0.8)), 1, (i,)) for i in range(30)]
        neg = [TrainingExample(tuple(np.full(10, 0.2)), 0, (100 + i,))
               for i in range(10)]
        params, _ = mlp_train(pos + neg, MlpTrainConfig(epochs=30, seed=0))
        assert params.weights_in.shape == (10, 4)

    def test_deterministic_given_seed(self):
        examples = separable_examples()
        cfg = MlpTrainConfig(epochs=50, seed=9)
        a, _ = mlp_train(examples, cfg)
        b, _ = mlp_train(examples, cfg)
        assert np.array_equal(a.weights_in, b.weights_in)

    def test_label_flip_symmetry(self):
        examples = separable_examples(n=200, seed=4)
        flipped = separable_examples(n=200, seed=4, flip=True)
        cfg = MlpTrainConfig(epochs=200, seed=5)
        p_orig, _ = mlp_train(examples, cfg)
        p_flip, _ = mlp_train(flipped, cfg)
        acc_orig = accuracy(p_orig, examples)
        acc_flip_on_orig = accuracy(p_flip, examples)
        assert abs(acc_orig - (1.0 - acc_flip_on_orig)) < 0.05


class TestRanking:
    def make_features(self, scores: dict[int, float]):
        return [FeatureVector(g, tuple([s] + [0.0] * 9))
                for g, s in scores.items()]

    def test_single_candidate(self):
        params = zero_params()
        ranked = rank_candidates(params, self.make_features({7: 0.4}), 5)
        assert [g for g, _ in ranked] == [7]

    def test_equal_probabilities_id_order(self):
        params = zero_params()
        ranked = rank_candidates(params, self.make_features({9: 0.1, 2: 0.1,
                                                             5: 0.1}), 3)
        assert [g for g, _ in ranked] == [2, 5, 9]

    def test_hand_sort(self):
        params = MlpParams(np.eye(10, 4), np.zeros(4), np.ones(4), 0.0, "relu")
        feats = self.make_features({1: 0.9, 2: 0.1, 3: 0.5, 4: 0.7})
        ranked = rank_candidates(params, feats, 4)
        assert [g for g, _ in ranked] == [1, 4, 3, 2]
        probs = [p for _, p in ranked]
        assert probs == sorted(probs, reverse=True)

    def test_truncation(self):
        params = zero_params()
        feats = self.make_features({g: 0.1 * g for g in range(8)})
        assert len(rank_candidates(params, feats, 3)) == 3


def toy_models(dim=2):
    rng = np.random.default_rng(8)
    models = {}
    for ctx in ("lin", "list", "dep", "sp", "up"):
        vocab = {g: g for g in range(6)}
        models[ctx] = EmbeddingModel(ctx, vocab, rng.normal(size=(6, dim)))
    return models


class TestConcatBaseline:
    def test_zero_weights_half(self):
        models = toy_models()
        seed = SeedSet((0, 1))
        dim = sum(2 * m.vectors.shape[1] for m in models.values())
        params = zero_params(input_dim=dim)
        assert concat_baseline_score(params, models, seed, 3) == pytest.approx(0.5)

    def test_input_layout_hand_check(self):
        models = {"lin": EmbeddingModel("lin", {0: 0, 1: 1, 2: 2},
                                        np.array([[1.0, 2.0], [3.0, 4.0],
                                                  [5.0, 6.0]]))}
        seed = SeedSet((0, 1))
        x = concat_input(models, seed, 2)
        assert list(x) == [2.0, 3.0, 5.0, 6.0]  # seed mean then candidate

    def test_out_of_vocab_zero_block(self):
        models = {"lin": EmbeddingModel("lin", {0: 0},
                                        np.array([[1.0, 2.0]]))}
        seed = SeedSet((0,))
        x = concat_input(models, seed, 99)
        assert list(x) == [1.0, 2.0, 0.0, 0.0]

    def test_separable_accuracy(self):
        rng = np.random.default_rng(12)
        vocab = {g: g for g in range(40)}
        vectors = np.concatenate([
            rng.normal(1.0, 0.1, size=(20, 3)),
            rng.normal(-1.0, 0.1, size=(20, 3)),
        ])
        models = {"lin": EmbeddingModel("lin", vocab, vectors)}
        seed = SeedSet((0, 1))
        labeled = [(seed, g, 1 if g < 20 else 0) for g in range(2, 40)]
        params, _ = concat_baseline_train(models, labeled,
                                          MlpTrainConfig(epochs=300, seed=2))
        preds = [concat_baseline_score(params, models, seed, g) > 0.5
                 for _, g, _ in labeled]
        truth = [label == 1 for _, _, label in labeled]
        assert np.mean([p == t for p, t in zip(preds, truth)]) >= 0.9
