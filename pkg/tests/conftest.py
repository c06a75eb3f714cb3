import numpy as np
import pytest

from componentpool.graph import Graph, build_graph
from componentpool.pooling import EdgeScorer


def random_graph(
    rng: np.random.Generator,
    max_nodes: int = 12,
    feature_dim: int | None = None,
    min_nodes: int = 1,
    edge_prob: float = 0.35,
    label: int | None = None,
) -> Graph:
    """Random symmetrized graph with uniform features in [-1, 1]."""
    m = int(rng.integers(min_nodes, max_nodes + 1))
    d = feature_dim or int(rng.integers(1, 4))
    pairs = [
        (i, j)
        for i in range(m)
        for j in range(i + 1, m)
        if rng.random() < edge_prob
    ]
    features = rng.uniform(-1, 1, size=(m, d))
    return build_graph(m, pairs, features, label=label)


def random_scorer(rng: np.random.Generator, feature_dim: int, threshold: float = 0.0) -> EdgeScorer:
    weight = rng.uniform(-1, 1, size=2 * feature_dim)
    return EdgeScorer(
        weight=weight, bias=float(rng.uniform(-0.5, 0.5)), threshold=threshold
    )


def dense_cam(assignment: np.ndarray, num_clusters: int) -> np.ndarray:
    m = assignment.shape[0]
    cam = np.zeros((m, num_clusters))
    cam[np.arange(m), assignment] = 1.0
    return cam


def dense_adjacency(graph: Graph) -> np.ndarray:
    a = np.zeros((graph.num_nodes, graph.num_nodes))
    for i, j in graph.edges:
        a[i, j] = 1.0
    return a


def dense_coarsen_oracle(graph, assignment, weight_dense):
    """Direct dense evaluation of the coarsening matrix products."""
    cam = dense_cam(assignment.assignment, assignment.num_clusters)
    coarse_features = (weight_dense @ cam).T @ graph.features
    multiplicity = cam.T @ dense_adjacency(graph) @ cam
    coarse_adjacency = np.minimum(multiplicity, 1.0)
    edge_set = {
        (i, j)
        for i in range(assignment.num_clusters)
        for j in range(assignment.num_clusters)
        if coarse_adjacency[i, j] == 1.0
    }
    return coarse_features, coarse_adjacency, edge_set


def bfs_components_oracle(num_nodes: int, edges) -> list[set[int]]:
    """Flood-fill reference for connected components, first-appearance order."""
    neighbors: dict[int, set[int]] = {v: set() for v in range(num_nodes)}
    for i, j in edges:
        neighbors[int(i)].add(int(j))
        neighbors[int(j)].add(int(i))
    seen: set[int] = set()
    components = []
    for start in range(num_nodes):
        if start in seen:
            continue
        frontier = [start]
        comp = {start}
        seen.add(start)
        while frontier:
            v = frontier.pop()
            for w in neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    frontier.append(w)
        components.append(comp)
    return components


def relative_error(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1.0)
    return float(np.linalg.norm(a - b) / denom)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
