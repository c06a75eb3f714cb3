"""Edge-based component pooling: scoring, merge selection, coarsening.

The operator scores every directed edge with a learned linear map over the
concatenated endpoint features, selects edges whose score exceeds a
threshold, clusters nodes via weakly connected components of the selected
edges, and coarsens features and adjacency with a sparse weight matrix.
All forward intermediates are retained so the exact backward pass and the
unpooling inverse can be computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import ClusterAssignment, Graph, connected_components

ACTIVATIONS = ("tanh", "sigmoid", "identity")


class ShapeError(ValueError):
    """Raised on dimension mismatches between graphs, scorers and matrices."""


def _activate(raw: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(raw)
    if activation == "sigmoid":
        out = np.empty_like(raw, dtype=np.float64)
        pos = raw >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
        ez = np.exp(raw[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if activation == "identity":
        return raw
    raise ValueError(f"unknown activation {activation!r}")


def _activate_grad(scores: np.ndarray, activation: str) -> np.ndarray:
    # derivative expressed in terms of the activation output
    if activation == "tanh":
        return 1.0 - scores**2
    if activation == "sigmoid":
        return scores * (1.0 - scores)
    if activation == "identity":
        return np.ones_like(scores)
    raise ValueError(f"unknown activation {activation!r}")


@dataclass
class EdgeScorer:
    """Linear edge scorer over concatenated endpoint features.

    ``weight`` has length 2d; the score of directed edge (i, j) is
    ``activation(weight . (x_i ++ x_j) + bias)``. Scores exceeding
    ``threshold`` (strictly) mark the edge for merging.
    """

    weight: np.ndarray
    bias: float = 0.0
    activation: str = "tanh"
    threshold: float = 0.0

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64).ravel()
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def feature_dim(self) -> int:
        return self.weight.shape[0] // 2

    @classmethod
    def initialize(
        cls,
        feature_dim: int,
        rng: np.random.Generator,
        activation: str = "tanh",
        threshold: float = 0.0,
    ) -> "EdgeScorer":
        """Fan-in uniform init: weights in (-1/sqrt(2d), 1/sqrt(2d)), zero bias."""
        bound = 1.0 / np.sqrt(2 * feature_dim)
        weight = rng.uniform(-bound, bound, size=2 * feature_dim)
        return cls(weight=weight, bias=0.0, activation=activation, threshold=threshold)


@dataclass
class MergeSelection:
    """Scores for every directed edge, the selected merge subset, and W."""

    edges: np.ndarray  # (n, 2), aligned with scores
    scores: np.ndarray  # (n,)
    merge_mask: np.ndarray  # (n,) bool; True iff score > threshold
    weight_matrix: sp.csr_matrix  # (m, m)

    @property
    def merge_edges(self) -> np.ndarray:
        return self.edges[self.merge_mask]

    def scores_by_edge(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(s)
            for (i, j), s in zip(self.edges, self.scores)
        }


@dataclass
class PoolResult:
    """Coarse graph plus every intermediate needed for backward and unpool."""

    graph: Graph
    coarse: Graph
    assignment: ClusterAssignment
    selection: MergeSelection


def score_edges(graph: Graph, scorer: EdgeScorer) -> np.ndarray:
    """Score each directed edge; returns an array aligned with graph.edges."""
    d = graph.feature_dim
    if scorer.weight.shape[0] != 2 * d:
        raise ShapeError(
            f"scorer expects feature dim {scorer.feature_dim}, graph has {d}"
        )
    if graph.num_edges == 0:
        return np.empty(0)
    src, dst = graph.edges[:, 0], graph.edges[:, 1]
    raw = (
        graph.features[src] @ scorer.weight[:d]
        + graph.features[dst] @ scorer.weight[d:]
        + scorer.bias
    )
    return _activate(raw, scorer.activation)


def select_merge_edges(scores: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean mask of edges to merge: strictly greater than the threshold."""
    return np.asarray(scores) > threshold


def build_weight_matrix(
    graph: Graph, scores: np.ndarray, merge_mask: np.ndarray
) -> sp.csr_matrix:
    """Sparse m-by-m weight matrix combining merge scores with unit diagonals.

    Entry (i, j) carries the score of merge edge (i, j); a node untouched by
    any merge edge (either direction) keeps a diagonal 1 so its feature row
    survives coarsening unchanged.
    """
    m = graph.num_nodes
    merge = graph.edges[merge_mask]
    merged_nodes = np.zeros(m, dtype=bool)
    if merge.shape[0]:
        merged_nodes[merge.ravel()] = True
    diag = np.flatnonzero(~merged_nodes)
    rows = np.concatenate([merge[:, 0], diag])
    cols = np.concatenate([merge[:, 1], diag])
    data = np.concatenate([np.asarray(scores)[merge_mask], np.ones(diag.shape[0])])
    return sp.csr_matrix((data, (rows, cols)), shape=(m, m))


def coarsen(
    graph: Graph, assignment: ClusterAssignment, weight_matrix: sp.csr_matrix
) -> Graph:
    """Coarsen features and adjacency onto the clusters.

    Coarse features are (W C)^T X; the coarse adjacency is C^T A C with
    entries clipped to 1, so parallel cluster-to-cluster edges collapse and
    intra-cluster edges become a supernode self-loop.
    """
    m = graph.num_nodes
    if assignment.num_nodes != m:
        raise ShapeError(
            f"assignment covers {assignment.num_nodes} nodes, graph has {m}"
        )
    if weight_matrix.shape != (m, m):
        raise ShapeError(f"weight matrix shape {weight_matrix.shape}, expected {(m, m)}")
    cam = assignment.membership_matrix()
    coarse_features = cam.T @ (weight_matrix.T @ graph.features)
    coarse_features = np.asarray(coarse_features, dtype=np.float64).reshape(
        assignment.num_clusters, graph.feature_dim
    )
    multi = (cam.T @ graph.adjacency() @ cam).tocoo()
    coarse_edges = np.column_stack([multi.row, multi.col]).astype(np.int64)
    if coarse_edges.shape[0]:
        coarse_edges = np.unique(coarse_edges, axis=0)
    return Graph(
        num_nodes=assignment.num_clusters,
        edges=coarse_edges,
        features=coarse_features,
        label=graph.label,
    )


def pool(graph: Graph, scorer: EdgeScorer) -> PoolResult:
    """Full pooling pass: score, select, cluster, weight, coarsen."""
    scores = score_edges(graph, scorer)
    merge_mask = select_merge_edges(scores, scorer.threshold)
    assignment = connected_components(graph.num_nodes, graph.edges[merge_mask])
    weight_matrix = build_weight_matrix(graph, scores, merge_mask)
    coarse = coarsen(graph, assignment, weight_matrix)
    selection = MergeSelection(
        edges=graph.edges,
        scores=scores,
        merge_mask=merge_mask,
        weight_matrix=weight_matrix,
    )
    return PoolResult(
        graph=graph, coarse=coarse, assignment=assignment, selection=selection
    )


def unpool(result: PoolResult, coarse_features: np.ndarray) -> np.ndarray:
    """Restore node count by copying each cluster's row to its members."""
    coarse_features = np.asarray(coarse_features)
    if coarse_features.shape[0] != result.assignment.num_clusters:
        raise ShapeError(
            f"coarse features have {coarse_features.shape[0]} rows, "
            f"expected {result.assignment.num_clusters}"
        )
    return coarse_features[result.assignment.assignment]


def pool_backward(
    result: PoolResult, upstream_grad: np.ndarray, scorer: EdgeScorer
) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact gradients of the coarse features w.r.t. inputs and scorer.

    Cluster membership and the merge selection are constants of the forward
    pass; scores influence the output only through the entries of W. Returns
    (grad_features, grad_weight, grad_bias).
    """
    graph, assignment, selection = result.graph, result.assignment, result.selection
    k, d = assignment.num_clusters, graph.feature_dim
    upstream_grad = np.asarray(upstream_grad, dtype=np.float64)
    if upstream_grad.shape != (k, d):
        raise ShapeError(
            f"upstream gradient shape {upstream_grad.shape}, expected {(k, d)}"
        )
    # direct path: X' = (W C)^T X, so dX = W (C G) with (C G) = G gathered
    gathered = upstream_grad[assignment.assignment]  # (m, d)
    grad_features = selection.weight_matrix @ gathered

    grad_weight = np.zeros(2 * d)
    grad_bias = 0.0
    merge = selection.merge_edges
    if merge.shape[0]:
        src, dst = merge[:, 0], merge[:, 1]
        merge_scores = selection.scores[selection.merge_mask]
        # dL/dW_ij = x_i . G_{cluster(j)}
        d_score = np.einsum(
            "ed,ed->e", graph.features[src], upstream_grad[assignment.assignment[dst]]
        )
        d_raw = d_score * _activate_grad(merge_scores, scorer.activation)
        grad_weight[:d] = d_raw @ graph.features[src]
        grad_weight[d:] = d_raw @ graph.features[dst]
        grad_bias = float(d_raw.sum())
        # score path into the endpoint features
        np.add.at(grad_features, src, np.outer(d_raw, scorer.weight[:d]))
        np.add.at(grad_features, dst, np.outer(d_raw, scorer.weight[d:]))
    return grad_features, grad_weight, grad_bias


def pool_result_to_dict(result: PoolResult) -> dict:
    """JSON-ready debug dump of a pooling pass."""
    return {
        "num_nodes": result.graph.num_nodes,
        "num_clusters": result.assignment.num_clusters,
        "assignment": result.assignment.assignment.tolist(),
        "merge_edges": [
            {"source": int(i), "target": int(j), "score": float(s)}
            for (i, j), s in zip(
                result.selection.merge_edges,
                result.selection.scores[result.selection.merge_mask],
            )
        ],
        "coarse_edges": result.coarse.edges.tolist(),
    }
