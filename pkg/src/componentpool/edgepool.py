"""Greedy edge contraction pooling baseline.

Edges are sorted by descending score and contracted greedily; a node can
join at most one pair, and contraction stops once half the nodes have been
merged. Coarsening reuses the component-pool machinery with pairwise
clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ClusterAssignment, Graph
from .pooling import (
    EdgeScorer,
    MergeSelection,
    PoolResult,
    build_weight_matrix,
    coarsen,
    score_edges,
)


@dataclass
class ContractionPlan:
    """Outcome of the greedy pass over the sorted edges."""

    ordered_edges: np.ndarray  # (n, 2) directed edges, descending score
    contracted_pairs: list[tuple[int, int]]  # disjoint node pairs
    merged_fraction: float


def plan_contraction(graph: Graph, scores: np.ndarray) -> ContractionPlan:
    """Greedy selection of disjoint highest-scored pairs up to the 50% budget.

    The budget counts contractions: at most floor(m/2) pairs. Ties break on
    lexicographic (i, j) order, lower first.
    """
    m = graph.num_nodes
    if graph.num_edges:
        # stable sort on the lexicographic edge order, then by descending score
        lex = np.lexsort((graph.edges[:, 1], graph.edges[:, 0]))
        order = lex[np.argsort(-scores[lex], kind="stable")]
    else:
        order = np.empty(0, dtype=np.int64)
    ordered = graph.edges[order]

    budget = m // 2
    taken = np.zeros(m, dtype=bool)
    pairs: list[tuple[int, int]] = []
    for i, j in ordered.tolist():
        if len(pairs) >= budget:
            break
        if i == j or taken[i] or taken[j]:
            continue
        taken[i] = taken[j] = True
        pairs.append((i, j))
    merged = 2 * len(pairs)
    return ContractionPlan(
        ordered_edges=ordered,
        contracted_pairs=pairs,
        merged_fraction=merged / m if m else 0.0,
    )


def _pairs_to_assignment(num_nodes: int, pairs: list[tuple[int, int]]) -> ClusterAssignment:
    assignment = np.full(num_nodes, -1, dtype=np.int64)
    partner = {}
    for i, j in pairs:
        partner[i] = j
        partner[j] = i
    k = 0
    for v in range(num_nodes):
        if assignment[v] >= 0:
            continue
        assignment[v] = k
        other = partner.get(v)
        if other is not None:
            assignment[other] = k
        k += 1
    return ClusterAssignment(num_clusters=k, assignment=assignment)


def edgepool_contract(graph: Graph, scorer: EdgeScorer) -> PoolResult:
    """Baseline pooling pass: greedy pairwise contraction of top-scored edges."""
    scores = score_edges(graph, scorer)
    plan = plan_contraction(graph, scores)
    assignment = _pairs_to_assignment(graph.num_nodes, plan.contracted_pairs)

    # both directed scores of a contracted pair enter W, mirroring the
    # component-pool weight construction on a pairwise merge set
    contracted = set()
    for i, j in plan.contracted_pairs:
        contracted.add((i, j))
        contracted.add((j, i))
    merge_mask = np.fromiter(
        ((int(i), int(j)) in contracted for i, j in graph.edges),
        dtype=bool,
        count=graph.num_edges,
    )
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
