"""Minimal differentiable GNN stack with hand-written backward passes.

Supports the architecture strings over {C, P, L}: graph convolutions,
pooling layers (component pooling or the edge contraction baseline), a
global sum readout, and fully connected layers. Everything runs in float64
on numpy arrays; gradients are exact and checked against finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import edgepool as _edgepool
from .graph import Graph
from .pooling import EdgeScorer, ShapeError, pool, pool_backward

PROB_FLOOR = 1e-12

OPERATORS = ("component", "edgepool", "none")


class UsageError(RuntimeError):
    """Raised when the API is driven out of order or with bad arguments."""


@dataclass
class Parameter:
    """Named tensor with a gradient buffer of the same shape."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


@dataclass
class ModelConfig:
    architecture: str
    hidden_size: int
    num_classes: int
    input_dim: int
    dropout: float = 0.0
    operator: str = "component"

    def __post_init__(self):
        arch = self.architecture.upper()
        if not arch or set(arch) - set("CPL"):
            raise UsageError(f"architecture must be nonempty over C/P/L, got {self.architecture!r}")
        first_l = arch.find("L")
        if first_l == -1 or set(arch[first_l:]) != {"L"}:
            raise UsageError("architecture must end in one or more L layers")
        if "P" in arch and self.operator == "none":
            raise UsageError("architecture contains P but no pooling operator selected")
        if self.operator not in OPERATORS:
            raise UsageError(f"unknown operator {self.operator!r}")
        self.architecture = arch

    @property
    def num_outputs(self) -> int:
        # binary classification uses a single sigmoid output
        return 1 if self.num_classes == 2 else self.num_classes


@dataclass
class GraphBatch:
    """Disjoint union of graphs plus per-node graph membership."""

    graph: Graph
    graph_ids: np.ndarray  # (m,)
    num_graphs: int
    labels: np.ndarray | None = None


def batch_graphs(graphs: list[Graph]) -> GraphBatch:
    """Stack graphs into one disjoint union with a membership vector."""
    if not graphs:
        raise UsageError("cannot batch zero graphs")
    offsets = np.cumsum([0] + [g.num_nodes for g in graphs])
    edges = [g.edges + off for g, off in zip(graphs, offsets) if g.num_edges]
    edges = np.vstack(edges) if edges else np.empty((0, 2), dtype=np.int64)
    features = np.vstack([g.features for g in graphs])
    graph_ids = np.concatenate(
        [np.full(g.num_nodes, i, dtype=np.int64) for i, g in enumerate(graphs)]
    )
    labels = None
    if all(g.label is not None for g in graphs):
        labels = np.array([g.label for g in graphs], dtype=np.int64)
    union = Graph(
        num_nodes=int(offsets[-1]), edges=edges, features=features, label=None
    )
    return GraphBatch(
        graph=union, graph_ids=graph_ids, num_graphs=len(graphs), labels=labels
    )


# ---------------------------------------------------------------------------
# standalone ops


def linear_forward(
    features: np.ndarray, weight: np.ndarray, bias: np.ndarray, activation: str
) -> np.ndarray:
    """activation(X W + b) with activation in {identity, relu, sigmoid, softmax}."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != weight.shape[0]:
        raise ShapeError(
            f"features dim {features.shape[-1]} does not match weight rows {weight.shape[0]}"
        )
    z = features @ weight + bias
    if activation == "identity":
        return z
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return sigmoid(z)
    if activation == "softmax":
        return softmax(z)
    raise ValueError(f"unknown activation {activation!r}")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def gcn_layer_forward(
    graph: Graph, features: np.ndarray, weight: np.ndarray, bias: np.ndarray
) -> np.ndarray:
    """Symmetric-normalized graph convolution with self-loops and ReLU."""
    prop = normalized_adjacency(graph)
    z = prop @ (features @ weight) + bias
    return np.maximum(z, 0.0)


def normalized_adjacency(graph: Graph) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 as CSR."""
    m = graph.num_nodes
    ahat = graph.adjacency() + sp.identity(m, format="csr")
    deg = np.asarray(ahat.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    norm = sp.diags(inv_sqrt)
    return (norm @ ahat @ norm).tocsr()


def global_sum_pool(
    features: np.ndarray, graph_ids: np.ndarray | None = None, num_graphs: int = 1
) -> np.ndarray:
    """Columnwise sum per graph segment; a single graph collapses to a vector."""
    features = np.asarray(features, dtype=np.float64)
    if graph_ids is None:
        return features.sum(axis=0)
    out = np.zeros((num_graphs, features.shape[1]))
    np.add.at(out, graph_ids, features)
    return out


def cross_entropy_loss(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood over probability rows.

    Probabilities below 1e-12 are clamped before the log.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    picked = predictions[np.arange(labels.shape[0]), labels]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


# ---------------------------------------------------------------------------
# layers


class GCNLayer:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str):
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        self.weight = Parameter(f"{name}.weight", rng.uniform(-bound, bound, (in_dim, out_dim)))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim))
        self.out_dim = out_dim

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, graph: Graph, features: np.ndarray):
        prop = normalized_adjacency(graph)
        agg = prop @ features
        z = agg @ self.weight.value + self.bias.value
        out = np.maximum(z, 0.0)
        cache = (prop, agg, z > 0)
        return out, cache

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        prop, agg, mask = cache
        grad_z = grad_out * mask
        self.weight.grad += agg.T @ grad_z
        self.bias.grad += grad_z.sum(axis=0)
        # prop is symmetric, so prop.T = prop
        return prop @ (grad_z @ self.weight.value.T)


class PoolLayer:
    def __init__(self, dim: int, operator: str, rng: np.random.Generator, name: str):
        init = EdgeScorer.initialize(dim, rng)
        self.weight = Parameter(f"{name}.scorer_weight", init.weight)
        self.bias = Parameter(f"{name}.scorer_bias", np.zeros(1))
        self.operator = operator

    def parameters(self):
        return [self.weight, self.bias]

    def _scorer(self) -> EdgeScorer:
        return EdgeScorer(
            weight=self.weight.value,
            bias=float(self.bias.value[0]),
            activation="tanh",
            threshold=0.0,
        )

    def forward(self, graph: Graph, graph_ids: np.ndarray, features: np.ndarray):
        working = Graph(
            num_nodes=graph.num_nodes, edges=graph.edges, features=features
        )
        scorer = self._scorer()
        if self.operator == "edgepool":
            result = _edgepool.edgepool_contract(working, scorer)
        else:
            result = pool(working, scorer)
        assign = result.assignment.assignment
        coarse_ids = np.zeros(result.assignment.num_clusters, dtype=np.int64)
        coarse_ids[assign] = graph_ids  # clusters never span graphs
        cache = (result, scorer)
        return result.coarse, coarse_ids, result.coarse.features, cache

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        result, scorer = cache
        grad_features, grad_weight, grad_bias = pool_backward(result, grad_out, scorer)
        self.weight.grad += grad_weight
        self.bias.grad += grad_bias
        return grad_features


class DenseLayer:
    def __init__(self, in_dim: int, out_dim: int, relu: bool, rng: np.random.Generator, name: str):
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        self.weight = Parameter(f"{name}.weight", rng.uniform(-bound, bound, (in_dim, out_dim)))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim))
        self.relu = relu

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        z = x @ self.weight.value + self.bias.value
        out = np.maximum(z, 0.0) if self.relu else z
        return out, (x, z > 0)

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        x, mask = cache
        grad_z = grad_out * mask if self.relu else grad_out
        self.weight.grad += x.T @ grad_z
        self.bias.grad += grad_z.sum(axis=0)
        return grad_z @ self.weight.value.T


class Dropout:
    """Inverted dropout; identity at rate 0 or in eval mode."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise UsageError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise UsageError("training-mode dropout requires an rng")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, mask, grad_out: np.ndarray) -> np.ndarray:
        return grad_out if mask is None else grad_out * mask


# ---------------------------------------------------------------------------
# model


class Model:
    """Architecture-string model: graph stage, sum readout, dense head."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        arch = config.architecture
        first_l = arch.find("L")
        self.graph_layers: list = []
        self.dense_layers: list[DenseLayer] = []
        self.dropout = Dropout(config.dropout)
        dim = config.input_dim
        for idx, letter in enumerate(arch[:first_l]):
            if letter == "C":
                self.graph_layers.append(GCNLayer(dim, config.hidden_size, rng, f"gcn{idx}"))
                dim = config.hidden_size
            else:  # P
                self.graph_layers.append(PoolLayer(dim, config.operator, rng, f"pool{idx}"))
        n_dense = len(arch) - first_l
        for j in range(n_dense):
            last = j == n_dense - 1
            out_dim = config.num_outputs if last else config.hidden_size
            self.dense_layers.append(
                DenseLayer(dim, out_dim, relu=not last, rng=rng, name=f"dense{first_l + j}")
            )
            dim = out_dim

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for layer in self.graph_layers + self.dense_layers:
            params.extend(layer.parameters())
        return params

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def forward(
        self,
        batch: GraphBatch,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ):
        """Returns (logits, tape); the tape drives backward()."""
        graph, ids, feats = batch.graph, batch.graph_ids, batch.graph.features
        tape = []
        for layer in self.graph_layers:
            if isinstance(layer, GCNLayer):
                out, cache = layer.forward(graph, feats)
                out, mask = self.dropout.forward(out, train, rng)
                tape.append(("gcn", layer, cache, mask))
                feats = out
            else:
                graph, ids, feats, cache = layer.forward(graph, ids, feats)
                tape.append(("pool", layer, cache, None))
        readout = global_sum_pool(feats, ids, batch.num_graphs)
        tape.append(("readout", None, (ids, feats.shape), None))
        x = readout
        for j, layer in enumerate(self.dense_layers):
            out, cache = layer.forward(x)
            mask = None
            if layer.relu:  # hidden dense layer
                out, mask = self.dropout.forward(out, train, rng)
            tape.append(("dense", layer, cache, mask))
            x = out
        return x, tape

    def backward(self, tape, grad_logits: np.ndarray) -> None:
        grad = grad_logits
        for kind, layer, cache, mask in reversed(tape):
            if kind == "dense":
                if mask is not None:
                    grad = self.dropout.backward(mask, grad)
                grad = layer.backward(cache, grad)
            elif kind == "readout":
                ids, shape = cache
                grad = grad[ids]
            elif kind == "gcn":
                grad = self.dropout.backward(mask, grad)
                grad = layer.backward(cache, grad)
            else:  # pool
                grad = layer.backward(cache, grad)

    def predict_proba(self, batch: GraphBatch) -> np.ndarray:
        """Class probabilities, shape (B, num_classes)."""
        logits, _ = self.forward(batch, train=False)
        if self.config.num_outputs == 1:
            p1 = sigmoid(logits[:, 0])
            return np.column_stack([1.0 - p1, p1])
        return softmax(logits)

    def predict(self, batch: GraphBatch) -> np.ndarray:
        """Argmax class per graph; binary predicts 1 iff sigmoid > 0.5."""
        return self.predict_proba(batch).argmax(axis=1)

    def loss_and_backward(
        self, batch: GraphBatch, rng: np.random.Generator | None = None, train: bool = True
    ) -> float:
        """Forward, cross-entropy loss, and gradient accumulation."""
        if batch.labels is None:
            raise UsageError("batch has no labels")
        logits, tape = self.forward(batch, train=train, rng=rng)
        n = batch.num_graphs
        labels = batch.labels
        if self.config.num_outputs == 1:
            p1 = sigmoid(logits[:, 0])
            probs = np.column_stack([1.0 - p1, p1])
            grad_logits = ((p1 - labels) / n).reshape(-1, 1)
        else:
            probs = softmax(logits)
            grad_logits = probs.copy()
            grad_logits[np.arange(n), labels] -= 1.0
            grad_logits /= n
        loss = cross_entropy_loss(probs, labels)
        self.backward(tape, grad_logits)
        return loss


def count_parameters(model: Model) -> int:
    """Total element count over all learnable tensors."""
    return sum(p.size for p in model.parameters())
