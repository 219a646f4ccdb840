"""MLP binary classifier over the 10 similarity features.

A single hidden layer (ten inputs, four hidden units, one sigmoid output)
predicts whether a candidate belongs to the expanded set; candidates are
ranked by that probability.  A baseline variant classifies the
concatenation of per-context seed-centroid and candidate vectors instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .contexts import CONTEXT_TYPES
from .embeddings import EmbeddingModel
from .expansion import FEATURE_COLUMNS, FeatureVector, SeedSet

N_INPUT = len(FEATURE_COLUMNS)
N_HIDDEN = 4


class TrainingDataError(Exception):
    pass


@dataclass
class MlpParams:
    weights_in: np.ndarray   # input_dim x hidden
    bias_hidden: np.ndarray  # hidden
    weights_out: np.ndarray  # hidden
    bias_out: float
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        self.weights_in = np.asarray(self.weights_in, dtype=np.float64)
        self.bias_hidden = np.asarray(self.bias_hidden, dtype=np.float64)
        self.weights_out = np.asarray(self.weights_out, dtype=np.float64)
        hidden = self.weights_in.shape[1]
        if self.bias_hidden.shape != (hidden,) or self.weights_out.shape != (hidden,):
            raise ValueError("inconsistent MLP parameter shapes")
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        for arr in (self.weights_in, self.bias_hidden, self.weights_out):
            if not np.all(np.isfinite(arr)):
                raise ValueError("MLP parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.weights_in.shape[0]

    def save(self, path: Path | str) -> None:
        data = {
            "shapes": {
                "weights_in": list(self.weights_in.shape),
                "bias_hidden": list(self.bias_hidden.shape),
                "weights_out": list(self.weights_out.shape),
            },
            "weights_in": self.weights_in.tolist(),
            "bias_hidden": self.bias_hidden.tolist(),
            "weights_out": self.weights_out.tolist(),
            "bias_out": self.bias_out,
            "activation": self.activation,
            "seed": self.seed,
        }
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "MlpParams":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(np.array(data["weights_in"]), np.array(data["bias_hidden"]),
                   np.array(data["weights_out"]), float(data["bias_out"]),
                   data.get("activation", "relu"), int(data.get("seed", 0)))


@dataclass(frozen=True)
class TrainingExample:
    features: tuple[float, ...]
    label: int  # 1 positive, 0 negative
    provenance: tuple = ()  # (list id, seed-set id, candidate id)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


@dataclass(frozen=True)
class MlpTrainConfig:
    epochs: int = 300
    lr: float = 0.01
    batch: int = 32
    seed: int = 0
    # tanh: relu hidden units sit at the kink on softmax-scale inputs and
    # mini-batch training stalls; tanh converges robustly there.
    activation: str = "tanh"
    init_scale: float = 0.5
    # Inputs are non-negative and nearly collinear, so zero-bias relu units
    # can all start dead; a small positive bias keeps them alive at init.
    bias_init: float = 0.01
    # Adam keeps step sizes usable on softmax-scale inputs (~1/n_candidates);
    # "sgd" selects plain mini-batch gradient descent.
    optimizer: str = "adam"

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def mlp_logit(params: MlpParams, features: Sequence[float] | np.ndarray) -> float:
    """Pre-sigmoid score; the same ordering as the probability but immune
    to float saturation at p -> 1."""
    x = np.asarray(features, dtype=np.float64)
    z = x @ params.weights_in + params.bias_hidden
    h = _activate(z, params.activation)
    return float(h @ params.weights_out + params.bias_out)


def mlp_forward(params: MlpParams, features: Sequence[float] | np.ndarray) -> float:
    """Predicted membership probability for one feature vector."""
    return float(_sigmoid(np.array([mlp_logit(params, features)]))[0])


def _forward_batch(params: MlpParams, x: np.ndarray):
    z = x @ params.weights_in + params.bias_hidden
    h = _activate(z, params.activation)
    logits = h @ params.weights_out + params.bias_out
    return z, h, logits, _sigmoid(logits)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def bce_loss(params: MlpParams, x: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy, computed from logits so it stays smooth
    even where the probability saturates in float arithmetic."""
    _, _, logits, _ = _forward_batch(params, x)
    return float(np.mean(_softplus(logits) - y * logits))


def bce_gradients(params: MlpParams, x: np.ndarray, y: np.ndarray):
    """Analytic gradients of mean BCE w.r.t. every parameter tensor."""
    n = len(x)
    z, h, _, p = _forward_batch(params, x)
    delta_out = (p - y) / n                              # B
    g_weights_out = h.T @ delta_out                      # hidden
    g_bias_out = float(delta_out.sum())
    delta_hidden = np.outer(delta_out, params.weights_out) * _activate_grad(z, params.activation)
    g_weights_in = x.T @ delta_hidden                    # input x hidden
    g_bias_hidden = delta_hidden.sum(axis=0)
    return g_weights_in, g_bias_hidden, g_weights_out, g_bias_out


def _balance(examples: Sequence[TrainingExample],
             rng: np.random.Generator) -> list[TrainingExample]:
    pos = [e for e in examples if e.label == 1]
    neg = [e for e in examples if e.label == 0]
    if not pos or not neg:
        raise TrainingDataError("both classes required for training")
    if len(pos) == len(neg):
        return list(examples)
    major, minor = (pos, neg) if len(pos) > len(neg) else (neg, pos)
    keep = rng.choice(len(major), size=len(minor), replace=False)
    kept = [major[i] for i in sorted(keep)]
    return sorted(minor + kept, key=lambda e: (e.provenance, e.label))


def mlp_train(examples: Sequence[TrainingExample],
              cfg: MlpTrainConfig = MlpTrainConfig(),
              input_dim: int = N_INPUT,
              hidden: int = N_HIDDEN) -> tuple[MlpParams, list[float]]:
    """Mini-batch gradient descent on balanced examples.

    The majority class is down-sampled to a 1:1 balance before training.
    Deterministic given the config seed; returns the fitted parameters and
    the per-epoch training loss curve.
    """
    rng = np.random.default_rng(cfg.seed)
    balanced = _balance(examples, rng)
    x = np.array([e.features for e in balanced], dtype=np.float64)
    y = np.array([e.label for e in balanced], dtype=np.float64)
    if x.shape[1] != input_dim:
        raise TrainingDataError(f"expected {input_dim}-dim features, got {x.shape[1]}")

    params = MlpParams(
        weights_in=rng.normal(0.0, cfg.init_scale, (input_dim, hidden)),
        bias_hidden=np.full(hidden, cfg.bias_init),
        weights_out=rng.normal(0.0, cfg.init_scale, hidden),
        bias_out=0.0,
        activation=cfg.activation,
        seed=cfg.seed,
    )

    stepper = _AdamStepper(params, cfg.lr) if cfg.optimizer == "adam" else None
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), cfg.batch):
            idx = order[start:start + cfg.batch]
            grads = bce_gradients(params, x[idx], y[idx])
            if stepper is not None:
                stepper.step(grads)
            else:
                gw_in, gb_h, gw_out, gb_out = grads
                params.weights_in -= cfg.lr * gw_in
                params.bias_hidden -= cfg.lr * gb_h
                params.weights_out -= cfg.lr * gw_out
                params.bias_out -= cfg.lr * gb_out
        losses.append(bce_loss(params, x, y))
    return params, losses


class _AdamStepper:
    def __init__(self, params: MlpParams, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        shapes = [params.weights_in.shape, params.bias_hidden.shape,
                  params.weights_out.shape, ()]
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, grads) -> None:
        self.t += 1
        updates = []
        for i, g in enumerate(grads):
            g = np.asarray(g, dtype=np.float64)
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            updates.append(self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        p = self.params
        p.weights_in -= updates[0]
        p.bias_hidden -= updates[1]
        p.weights_out -= updates[2]
        p.bias_out -= float(updates[3])


def rank_candidates(params: MlpParams, features: Sequence[FeatureVector],
                    n: int) -> list[tuple[int, float]]:
    """Candidates by predicted probability, ties by ascending id, top n.

    Internally ordered by logit so candidates whose probabilities round to
    the same float still rank by model preference.
    """
    scored = [(fv.candidate, mlp_logit(params, fv.features)) for fv in features]
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return [(gid, float(_sigmoid(np.array([s]))[0])) for gid, s in scored[:n]]


# --- concatenated-embedding baseline ----------------------------------------


def concat_input(models: Mapping[str, Optional[EmbeddingModel]], seed: SeedSet,
                 candidate: int) -> np.ndarray:
    """Per-context seed centroids concatenated with the candidate's vectors.

    Missing models or out-of-vocab terms contribute zero blocks, so the
    input arity is independent of seed size and vocabulary coverage.
    """
    blocks = []
    for ctx in CONTEXT_TYPES:
        model = models.get(ctx)
        dim = model.vectors.shape[1] if model is not None and len(model) else 0
        if model is None or dim == 0:
            continue
        in_vocab = [t for t in seed.terms if t in model]
        if in_vocab:
            blocks.append(np.mean([model.vector(t) for t in in_vocab], axis=0))
        else:
            blocks.append(np.zeros(dim))
        if candidate in model:
            blocks.append(model.vector(candidate))
        else:
            blocks.append(np.zeros(dim))
    if not blocks:
        raise TrainingDataError("no model available for concat input")
    return np.concatenate(blocks)


def concat_input_dim(models: Mapping[str, Optional[EmbeddingModel]]) -> int:
    total = 0
    for ctx in CONTEXT_TYPES:
        model = models.get(ctx)
        if model is not None and len(model):
            total += 2 * model.vectors.shape[1]
    return total


def concat_baseline_train(models: Mapping[str, Optional[EmbeddingModel]],
                          labeled: Sequence[tuple[SeedSet, int, int]],
                          cfg: MlpTrainConfig = MlpTrainConfig(),
                          hidden: int = N_HIDDEN) -> tuple[MlpParams, list[float]]:
    """Train the baseline on (seed set, candidate, label) triples."""
    examples = [
        TrainingExample(tuple(concat_input(models, seed, cand)), label,
                        provenance=(i,))
        for i, (seed, cand, label) in enumerate(labeled)
    ]
    return mlp_train(examples, cfg, input_dim=concat_input_dim(models), hidden=hidden)


def concat_baseline_score(params: MlpParams,
                          models: Mapping[str, Optional[EmbeddingModel]],
                          seed: SeedSet, candidate: int) -> float:
    return mlp_forward(params, concat_input(models, seed, candidate))
