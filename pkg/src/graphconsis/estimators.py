"""scikit-learn style estimators wrapping the functional training API.

Each estimator takes a :class:`~graphconsis.graph.MultiRelationGraph` in
``fit`` and ``predict``; the graph plays the role of ``X`` and carries the
labels, with an optional boolean ``train_mask`` restricting which labeled
nodes contribute to the loss (the transductive setting). ``get_params`` /
``set_params`` / ``clone`` work as usual, so the estimators compose with
sklearn tooling that doesn't assume array inputs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import checkpoint as ckpt
from .baselines import (
    LogisticRegressionParams,
    predict_logistic_regression,
    train_logistic_regression,
)
from .graph import MultiRelationGraph
from .model import (
    FULL_MEAN_GNN,
    GRAPHCONSIS,
    UNIFORM_SAMPLE_GNN,
    LayerConfig,
    ModelVariant,
    predict_scores,
    train,
)
from .validation import check_mask


def _default_mask(graph: MultiRelationGraph, train_mask) -> np.ndarray:
    if train_mask is None:
        return graph.labels != -1
    return check_mask(train_mask, graph.num_nodes, "train_mask")


class _GNNClassifier(ClassifierMixin, BaseEstimator):
    """Shared fit/predict machinery; subclasses pin the model variant."""

    _variant: ModelVariant
    _method: str

    def __init__(
        self,
        num_layers=2,
        samples_per_layer=(10, 5),
        hidden_widths=(200, 100),
        epsilon=0.01,
        combine_mode="concat",
        epochs=100,
        learning_rate=0.01,
        num_forward_passes=10,
        random_state=0,
    ):
        self.num_layers = num_layers
        self.samples_per_layer = samples_per_layer
        self.hidden_widths = hidden_widths
        self.epsilon = epsilon
        self.combine_mode = combine_mode
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.num_forward_passes = num_forward_passes
        self.random_state = random_state

    def _config(self) -> LayerConfig:
        return LayerConfig(
            num_layers=self.num_layers,
            samples_per_layer=tuple(self.samples_per_layer),
            hidden_widths=tuple(self.hidden_widths),
            epsilon=self.epsilon,
            combine_mode=self.combine_mode,
        )

    def fit(self, graph: MultiRelationGraph, train_mask=None):
        mask = _default_mask(graph, train_mask)
        result = train(
            graph,
            self._config(),
            mask,
            epochs=self.epochs,
            seed=self.random_state,
            variant=self._variant,
            learning_rate=self.learning_rate,
        )
        self.params_ = result.params
        self.loss_history_ = result.loss_history
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, graph: MultiRelationGraph) -> np.ndarray:
        scores = self.predict_scores(graph)
        return np.column_stack([1.0 - scores, scores])

    def predict_scores(self, graph: MultiRelationGraph) -> np.ndarray:
        """Fraud probability per node, averaged over sampling passes."""
        if not hasattr(self, "params_"):
            raise RuntimeError("estimator is not fitted")
        return predict_scores(
            graph,
            self.params_,
            self._config(),
            seed=self.random_state,
            num_forward_passes=self.num_forward_passes,
            variant=self._variant,
        )

    def predict(self, graph: MultiRelationGraph) -> np.ndarray:
        return (self.predict_scores(graph) >= 0.5).astype(np.int64)

    def save(self, path) -> None:
        ckpt.save_checkpoint(
            path, self._method, self.params_, self.random_state, self._config(), self._variant
        )


class GraphConsisClassifier(_GNNClassifier):
    """Full model: context embeddings, consistency-filtered sampling, and
    relation attention."""

    _variant = GRAPHCONSIS
    _method = "graphconsis"


class UniformSampleGNNClassifier(_GNNClassifier):
    """Ablation: uniform neighbor sampling and mean aggregation."""

    _variant = UNIFORM_SAMPLE_GNN
    _method = "uniform-sample-gnn"


class FullMeanGNNClassifier(_GNNClassifier):
    """Ablation: full-neighborhood mean aggregation on the merged graph."""

    _variant = FULL_MEAN_GNN
    _method = "full-mean-gnn"


class LogisticRegressionBaseline(ClassifierMixin, BaseEstimator):
    """Feature-only logistic regression trained with the same optimizer."""

    _method = "logistic-regression"

    def __init__(self, epochs=100, learning_rate=0.01, random_state=0):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.random_state = random_state

    def fit(self, graph: MultiRelationGraph, train_mask=None):
        mask = _default_mask(graph, train_mask)
        params, history = train_logistic_regression(
            graph.features,
            graph.labels,
            mask,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.random_state,
        )
        self.params_ = params
        self.loss_history_ = history
        self.classes_ = np.array([0, 1])
        return self

    def predict_scores(self, graph: MultiRelationGraph) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise RuntimeError("estimator is not fitted")
        return predict_logistic_regression(self.params_, graph.features)

    def predict_proba(self, graph: MultiRelationGraph) -> np.ndarray:
        scores = self.predict_scores(graph)
        return np.column_stack([1.0 - scores, scores])

    def predict(self, graph: MultiRelationGraph) -> np.ndarray:
        return (self.predict_scores(graph) >= 0.5).astype(np.int64)

    def save(self, path) -> None:
        ckpt.save_checkpoint(path, self._method, self.params_, self.random_state)


ESTIMATORS = {
    "graphconsis": GraphConsisClassifier,
    "logistic-regression": LogisticRegressionBaseline,
    "uniform-sample-gnn": UniformSampleGNNClassifier,
    "full-mean-gnn": FullMeanGNNClassifier,
}


def make_estimator(method: str, **overrides):
    """Instantiate a registered method, ignoring overrides it doesn't take."""
    cls = ESTIMATORS.get(method)
    if cls is None:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(ESTIMATORS)}")
    valid = cls().get_params()
    kwargs = {k: v for k, v in overrides.items() if k in valid}
    return cls(**kwargs)
