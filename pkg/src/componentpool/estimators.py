"""Scikit-learn style wrappers around the pooling operator and the GNN.

``ComponentPooling`` / ``EdgeContractionPooling`` are transformers mapping
lists of graphs to coarsened graphs; ``GraphClassifier`` is a fit/predict
estimator over labelled graphs. Both expose get_params/set_params so they
compose with the wider scikit-learn ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .edgepool import edgepool_contract
from .graph import Graph
from .nn import Model, ModelConfig, batch_graphs, count_parameters
from .pooling import EdgeScorer, pool
from .training import TrainConfig, train_model


def check_graphs(X) -> list[Graph]:
    """Validate that the input is a nonempty sequence of Graph objects."""
    graphs = list(X)
    if not graphs:
        raise ValueError("expected a nonempty sequence of graphs")
    for g in graphs:
        if not isinstance(g, Graph):
            raise TypeError(f"expected Graph instances, got {type(g).__name__}")
    dims = {g.feature_dim for g in graphs}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
    return graphs


class _PoolingTransformer(TransformerMixin, BaseEstimator):
    """Shared fit/transform logic for the two pooling operators."""

    _operator = "component"

    def __init__(self, threshold: float = 0.0, activation: str = "tanh", random_state: int = 0):
        self.threshold = threshold
        self.activation = activation
        self.random_state = random_state

    def fit(self, X, y=None):
        graphs = check_graphs(X)
        rng = np.random.default_rng(self.random_state)
        self.scorer_ = EdgeScorer.initialize(
            graphs[0].feature_dim,
            rng,
            activation=self.activation,
            threshold=self.threshold,
        )
        return self

    def transform(self, X):
        if not hasattr(self, "scorer_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted")
        graphs = check_graphs(X)
        op = pool if self._operator == "component" else edgepool_contract
        return [op(g, self.scorer_).coarse for g in graphs]


class ComponentPooling(_PoolingTransformer):
    """Threshold-based component pooling as a graph-list transformer."""

    _operator = "component"


class EdgeContractionPooling(_PoolingTransformer):
    """Greedy pairwise edge contraction baseline as a transformer."""

    _operator = "edgepool"


class GraphClassifier(ClassifierMixin, BaseEstimator):
    """Graph-level classifier over architecture strings like "CPCL"."""

    def __init__(
        self,
        architecture: str = "CPCL",
        hidden_size: int = 16,
        epochs: int = 100,
        learning_rate: float = 0.001,
        lr_halving_every: int | None = None,
        dropout: float = 0.0,
        operator: str = "component",
        batch_size: int = 32,
        validation_fraction: float = 0.1,
        random_state: int = 0,
    ):
        self.architecture = architecture
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lr_halving_every = lr_halving_every
        self.dropout = dropout
        self.operator = operator
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y):
        graphs = check_graphs(X)
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] != len(graphs):
            raise ValueError(f"{len(graphs)} graphs but {y.shape[0]} labels")
        self.classes_ = np.unique(y)
        labelled = [
            Graph(g.num_nodes, g.edges, g.features, label=int(np.searchsorted(self.classes_, lbl)))
            for g, lbl in zip(graphs, y)
        ]
        rng = np.random.default_rng(self.random_state)
        perm = rng.permutation(len(labelled))
        n_val = max(1, int(self.validation_fraction * len(labelled)))
        val = [labelled[i] for i in perm[:n_val]]
        train = [labelled[i] for i in perm[n_val:]] or val
        config = TrainConfig(
            model=ModelConfig(
                architecture=self.architecture,
                hidden_size=self.hidden_size,
                num_classes=len(self.classes_),
                input_dim=graphs[0].feature_dim,
                dropout=self.dropout,
                operator=self.operator,
            ),
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            lr_halving_every=self.lr_halving_every,
            seed=self.random_state,
            batch_size=self.batch_size,
        )
        self.model_, self.history_ = train_model(config, train, val)
        self.n_parameters_ = count_parameters(self.model_)
        return self

    def _check_fitted(self) -> Model:
        if not hasattr(self, "model_"):
            raise NotFittedError("GraphClassifier is not fitted")
        return self.model_

    def predict_proba(self, X) -> np.ndarray:
        model = self._check_fitted()
        return model.predict_proba(batch_graphs(check_graphs(X)))

    def score(self, X, y, sample_weight=None) -> float:
        return float(np.average(self.predict(X) == np.asarray(y), weights=sample_weight))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.classes_[self.predict_proba(X).argmax(axis=1)]
