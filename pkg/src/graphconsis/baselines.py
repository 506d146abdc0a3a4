"""Reference detectors: logistic regression and two ablated GNNs.

The GNN baselines run through the exact layer plumbing of the full model
with mechanism switches off (no context embeddings, uniform or
no sampling, mean aggregation), so performance differences are
attributable to the switched-off mechanisms rather than implementation
drift. Logistic regression shares the autodiff/Adam stack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter
from .graph import MultiRelationGraph
from .model import (
    FULL_MEAN_GNN,
    GRAPHCONSIS,
    UNIFORM_SAMPLE_GNN,
    LayerConfig,
    ModelVariant,
    TrainResult,
    derive_rng,
    train,
)
from .validation import check_mask

METHODS = ("graphconsis", "logistic-regression", "uniform-sample-gnn", "full-mean-gnn")

VARIANTS: dict[str, ModelVariant] = {
    "graphconsis": GRAPHCONSIS,
    "uniform-sample-gnn": UNIFORM_SAMPLE_GNN,
    "full-mean-gnn": FULL_MEAN_GNN,
}


@dataclass
class LogisticRegressionParams:
    weights: np.ndarray
    bias: float


def train_logistic_regression(
    features: np.ndarray,
    labels: np.ndarray,
    train_mask: np.ndarray,
    epochs: int = 100,
    learning_rate: float = 0.01,
    seed: int = 0,
) -> tuple[LogisticRegressionParams, list[float]]:
    """Feature-only classifier: BCE-with-logits on raw features via Adam."""
    X = np.asarray(features, dtype=np.float64)
    mask = check_mask(train_mask, X.shape[0], "train_mask")
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("train_mask selects no nodes")
    y = np.asarray(labels)[idx].astype(np.float64)
    if np.any(y < 0):
        raise ValueError("train_mask selects unlabeled nodes")
    Xt = X[idx]
    rng = derive_rng(seed, 0)
    bound = 1.0 / np.sqrt(X.shape[1])
    w = Parameter(rng.uniform(-bound, bound, size=X.shape[1]), "lr_weights")
    b = Parameter(np.zeros(1), "lr_bias")
    history: list[float] = []
    for _ in range(epochs):
        logits = ad.add(ad.matmul(ad.constant(Xt), w), b)  # (n,) + (1,) broadcasts
        loss = ad.bce_with_logits(logits, y)
        history.append(float(loss.value))
        w.zero_grad()
        b.zero_grad()
        ad.backward(loss)
        ad.adam_step([w, b], learning_rate)
    return LogisticRegressionParams(weights=w.value.copy(), bias=float(b.value[0])), history


def predict_logistic_regression(params: LogisticRegressionParams, features: np.ndarray) -> np.ndarray:
    z = np.asarray(features, dtype=np.float64) @ params.weights + params.bias
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(np.minimum(z, 0)) / (1.0 + np.exp(np.minimum(z, 0))))


def train_uniform_sample_gnn(
    g: MultiRelationGraph,
    cfg: LayerConfig,
    train_mask: np.ndarray,
    epochs: int,
    seed: int,
    learning_rate: float = 0.01,
) -> TrainResult:
    """Sampled GNN with uniform neighbor probabilities, no consistency
    filter, no context embeddings, and mean aggregation."""
    return train(g, cfg, train_mask, epochs, seed, UNIFORM_SAMPLE_GNN, learning_rate)


def train_full_mean_gnn(
    g: MultiRelationGraph,
    cfg: LayerConfig,
    train_mask: np.ndarray,
    epochs: int,
    seed: int,
    learning_rate: float = 0.01,
) -> TrainResult:
    """No sampling: every node aggregates the mean of all merged-relation
    neighbors each layer; isolated nodes aggregate themselves."""
    return train(g, cfg, train_mask, epochs, seed, FULL_MEAN_GNN, learning_rate)
