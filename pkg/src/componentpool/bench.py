"""Pooling scaling benchmark: timings over random sparse graphs.

Generates graphs with twice as many undirected edges as nodes, times
repeated pooling calls, and fits a log-log slope to the median timings to
check the near-linear complexity of the component-pool operator.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .edgepool import edgepool_contract
from .graph import Graph
from .pooling import EdgeScorer, pool


@dataclass
class BenchRow:
    num_nodes: int
    num_edges: int
    median_seconds: float


def random_sparse_graph(
    num_nodes: int, rng: np.random.Generator, feature_dim: int = 4
) -> Graph:
    """Random symmetric graph with about 2|V| undirected edges."""
    target = 2 * num_nodes
    pairs = rng.integers(0, num_nodes, size=(int(target * 1.2) + 4, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    undirected = np.unique(np.column_stack([lo, hi]), axis=0)[:target]
    edges = np.vstack([undirected, undirected[:, ::-1]])
    edges = np.unique(edges, axis=0)
    features = rng.standard_normal((num_nodes, feature_dim))
    return Graph(num_nodes=num_nodes, edges=edges, features=features)


def fit_loglog_slope(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(times), 1)
    return float(slope)


def bench_pool_scaling(
    operator: str,
    sizes: list[int],
    repeats: int = 10,
    seed: int = 0,
    feature_dim: int = 4,
) -> tuple[list[BenchRow], float | None]:
    """Time ``repeats`` pooling calls per size; returns rows and the slope.

    The slope is omitted (None) when fewer than two sizes are given.
    """
    if sorted(sizes) != list(sizes):
        raise ValueError("sizes must be ascending")
    rng = np.random.default_rng(seed)
    op = pool if operator in ("component", "component-pool") else edgepool_contract
    rows = []
    for num_nodes in sizes:
        graph = random_sparse_graph(num_nodes, rng, feature_dim)
        scorer = EdgeScorer.initialize(feature_dim, rng)
        timings = []
        for _ in range(repeats):
            start = time.perf_counter()
            op(graph, scorer)
            timings.append(time.perf_counter() - start)
        rows.append(
            BenchRow(
                num_nodes=num_nodes,
                num_edges=graph.num_edges,
                median_seconds=float(np.median(timings)),
            )
        )
    slope = None
    if len(rows) >= 2:
        slope = fit_loglog_slope(
            [r.num_nodes for r in rows], [r.median_seconds for r in rows]
        )
    return rows, slope
