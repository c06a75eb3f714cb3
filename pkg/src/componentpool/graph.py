"""Sparse graph container, validation and connected-component detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphValidationError(ValueError):
    """Raised when a graph fails structural validation."""


@dataclass(frozen=True)
class Graph:
    """Immutable graph: node features plus a sparse directed edge list.

    Undirected graphs are stored with both edge directions present.
    Adjacency is derived from the edge list on demand; a dense matrix is
    never materialized here.
    """

    num_nodes: int
    edges: np.ndarray  # (n, 2) int64, lexicographically sorted, no duplicates
    features: np.ndarray  # (m, d) float64
    label: int | None = None

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def adjacency(self) -> sp.csr_matrix:
        """Binary adjacency as CSR, shape (m, m)."""
        m = self.num_nodes
        if self.num_edges == 0:
            return sp.csr_matrix((m, m))
        data = np.ones(self.num_edges)
        return sp.csr_matrix(
            (data, (self.edges[:, 0], self.edges[:, 1])), shape=(m, m)
        )

    def degrees(self) -> np.ndarray:
        """Out-degree per node; equals undirected degree for symmetric graphs."""
        return np.bincount(self.edges[:, 0], minlength=self.num_nodes)


@dataclass(frozen=True)
class ClusterAssignment:
    """Node-to-cluster map; cluster ids are contiguous and each is used."""

    num_clusters: int
    assignment: np.ndarray  # (m,) int64, values in [0, num_clusters)

    @property
    def num_nodes(self) -> int:
        return self.assignment.shape[0]

    def membership_matrix(self) -> sp.csr_matrix:
        """Binary CAM of shape (m, k); each row has exactly one 1."""
        m = self.num_nodes
        data = np.ones(m)
        rows = np.arange(m)
        return sp.csr_matrix(
            (data, (rows, self.assignment)), shape=(m, self.num_clusters)
        )

    def clusters(self) -> list[np.ndarray]:
        """Node indices per cluster, ascending within each cluster."""
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.searchsorted(
            self.assignment[order], np.arange(self.num_clusters + 1)
        )
        return [order[bounds[i] : bounds[i + 1]] for i in range(self.num_clusters)]


def _normalize_edges(num_nodes: int, edge_list) -> np.ndarray:
    edges = np.asarray(edge_list, dtype=np.int64)
    if edges.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise GraphValidationError(f"edge list must be pairs, got shape {edges.shape}")
    bad = (edges < 0) | (edges >= num_nodes)
    if bad.any():
        offender = edges[bad.any(axis=1)][0]
        raise GraphValidationError(
            f"edge ({offender[0]}, {offender[1]}) out of range for {num_nodes} nodes"
        )
    return edges


def _sort_dedupe(edges: np.ndarray) -> np.ndarray:
    if edges.shape[0] == 0:
        return edges
    return np.unique(edges, axis=0)


def build_graph(
    num_nodes: int,
    edge_list,
    features,
    label: int | None = None,
    undirected: bool = True,
) -> Graph:
    """Validate and construct a Graph.

    Duplicate directed edges are dropped. With ``undirected=True`` the
    reverse of every edge is inserted if absent, so the edge set is closed
    under reversal. Self-loops are accepted and preserved.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    if features.size == 0:
        dim = features.shape[1] if features.ndim == 2 else 1
        features = features.reshape(num_nodes, max(dim, 1)) if num_nodes == 0 else features
    if features.shape[0] != num_nodes:
        raise GraphValidationError(
            f"feature matrix has {features.shape[0]} rows for {num_nodes} nodes"
        )
    edges = _normalize_edges(num_nodes, edge_list)
    if undirected and edges.shape[0] > 0:
        edges = np.vstack([edges, edges[:, ::-1]])
    edges = _sort_dedupe(edges)
    return Graph(num_nodes=num_nodes, edges=edges, features=features, label=label)


def connected_components(num_nodes: int, edge_list) -> ClusterAssignment:
    """Weakly connected components via union-find with path compression.

    Singleton nodes form their own cluster. Cluster ids are assigned by
    order of first node appearance, so output is deterministic. Runtime is
    effectively linear in nodes plus edges.
    """
    edges = _normalize_edges(num_nodes, edge_list)
    parent = list(range(num_nodes))

    for i, j in edges.tolist():
        # find roots with path halving
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        if i != j:
            # attach the larger index under the smaller: keeps roots at the
            # minimum node of each component, giving first-appearance order
            if i < j:
                parent[j] = i
            else:
                parent[i] = j

    roots = np.fromiter(
        (_find_root(parent, v) for v in range(num_nodes)),
        dtype=np.int64,
        count=num_nodes,
    )
    # roots are component minima (unions attach the larger root under the
    # smaller), so ascending root order equals first-appearance order
    uniq, assignment = np.unique(roots, return_inverse=True)
    return ClusterAssignment(
        num_clusters=len(uniq), assignment=assignment.astype(np.int64)
    )


def _find_root(parent: list[int], v: int) -> int:
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v
