"""Benchmark dataset ingestion, feature synthesis and split generation.

Parses the plain-text benchmark distribution format: an edge file with
comma-separated 1-indexed node pairs, a node-to-graph indicator file and a
graph label file, plus optional node label / node attribute files. Node
labels become one-hot feature columns; attributes are used as-is.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .checkpoint import CACHE_MAGIC, FORMAT_VERSION, ContainerError, _read_str, _read_u64, _write_str, _write_u64
from .graph import Graph, build_graph

FEATURE_MODES = ("native", "scalar-one", "degree-one-hot")


class IngestionError(IOError):
    """Raised when dataset files are missing or malformed."""


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: list[Graph]
    num_classes: int
    feature_mode: str = "native"

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def feature_dim(self) -> int:
        return self.graphs[0].feature_dim


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise IngestionError(f"missing required file: {path}")
    with open(path) as fh:
        return [line.strip() for line in fh if line.strip()]


def parse_tudataset(directory: str | Path, name: str) -> Dataset:
    """Load a dataset from ``directory`` containing ``<name>_*.txt`` files."""
    directory = Path(directory)
    edges_raw = _read_lines(directory / f"{name}_A.txt")
    indicator = np.array(
        [int(x) for x in _read_lines(directory / f"{name}_graph_indicator.txt")],
        dtype=np.int64,
    )
    graph_labels_raw = np.array(
        [int(float(x)) for x in _read_lines(directory / f"{name}_graph_labels.txt")],
        dtype=np.int64,
    )

    num_nodes_total = indicator.shape[0]
    num_graphs = int(indicator.max()) if num_nodes_total else 0
    if graph_labels_raw.shape[0] != num_graphs:
        raise IngestionError(
            f"{name}: {graph_labels_raw.shape[0]} labels for {num_graphs} graphs"
        )

    edges = np.empty((len(edges_raw), 2), dtype=np.int64)
    for idx, line in enumerate(edges_raw):
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise IngestionError(f"{name}_A.txt line {idx + 1}: expected a pair, got {line!r}")
        edges[idx] = (int(parts[0]) - 1, int(parts[1]) - 1)

    # optional per-node files
    node_label_path = directory / f"{name}_node_labels.txt"
    node_attr_path = directory / f"{name}_node_attributes.txt"
    feature_blocks: list[np.ndarray] = []
    if node_label_path.exists():
        node_labels = np.array(
            [int(float(x)) for x in _read_lines(node_label_path)], dtype=np.int64
        )
        if node_labels.shape[0] != num_nodes_total:
            raise IngestionError(f"{name}: node label count mismatch")
        values = np.unique(node_labels)
        onehot = np.zeros((num_nodes_total, values.shape[0]))
        onehot[np.arange(num_nodes_total), np.searchsorted(values, node_labels)] = 1.0
        feature_blocks.append(onehot)
    if node_attr_path.exists():
        attrs = np.array(
            [[float(x) for x in line.replace(",", " ").split()] for line in _read_lines(node_attr_path)]
        )
        if attrs.shape[0] != num_nodes_total:
            raise IngestionError(f"{name}: node attribute count mismatch")
        feature_blocks.append(attrs)
    if feature_blocks:
        features_all = np.hstack(feature_blocks)
    else:
        features_all = np.ones((num_nodes_total, 1))

    # remap graph labels to contiguous 0-based classes
    classes = np.unique(graph_labels_raw)
    graph_labels = np.searchsorted(classes, graph_labels_raw)

    # partition nodes per graph; indicator is 1-indexed and non-decreasing
    node_graph = indicator - 1
    if num_nodes_total and (np.diff(node_graph) < 0).any():
        raise IngestionError(f"{name}: graph indicator is not non-decreasing")
    graph_of_edge = node_graph[edges[:, 0]]
    if (graph_of_edge != node_graph[edges[:, 1]]).any():
        bad = edges[graph_of_edge != node_graph[edges[:, 1]]][0]
        raise IngestionError(
            f"{name}: edge ({bad[0] + 1}, {bad[1] + 1}) crosses graph boundary"
        )

    counts = np.bincount(node_graph, minlength=num_graphs)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    order = np.argsort(graph_of_edge, kind="stable")
    edge_bounds = np.searchsorted(graph_of_edge[order], np.arange(num_graphs + 1))

    graphs = []
    for g in range(num_graphs):
        lo, hi = offsets[g], offsets[g + 1]
        local_edges = edges[order[edge_bounds[g] : edge_bounds[g + 1]]] - lo
        graphs.append(
            build_graph(
                num_nodes=int(hi - lo),
                edge_list=local_edges,
                features=features_all[lo:hi],
                label=int(graph_labels[g]),
            )
        )
    return Dataset(
        name=name, graphs=graphs, num_classes=len(classes), feature_mode="native"
    )


def synthesize_degree_features(dataset: Dataset, max_degree_cap: int | None = None) -> Dataset:
    """One-hot encode each node's degree; dimension is dataset max degree + 1."""
    max_degree = 0
    for g in dataset.graphs:
        if g.num_nodes:
            max_degree = max(max_degree, int(g.degrees().max(initial=0)))
    if max_degree_cap is not None:
        max_degree = min(max_degree, max_degree_cap)
    dim = max_degree + 1
    graphs = []
    for g in dataset.graphs:
        idx = np.minimum(g.degrees(), max_degree)
        feats = np.zeros((g.num_nodes, dim))
        feats[np.arange(g.num_nodes), idx] = 1.0
        graphs.append(replace(g, features=feats))
    return replace(dataset, graphs=graphs, feature_mode="degree-one-hot")


def set_scalar_features(dataset: Dataset) -> Dataset:
    """Set every node's feature to the scalar 1."""
    graphs = [
        replace(g, features=np.ones((g.num_nodes, 1))) for g in dataset.graphs
    ]
    return replace(dataset, graphs=graphs, feature_mode="scalar-one")


def apply_feature_mode(dataset: Dataset, mode: str) -> Dataset:
    if mode == "native":
        return dataset
    if mode == "scalar-one":
        return set_scalar_features(dataset)
    if mode == "degree-one-hot":
        return synthesize_degree_features(dataset)
    raise ValueError(f"unknown feature mode {mode!r}")


def split_dataset(
    dataset: Dataset, seed: int
) -> tuple[list[Graph], list[Graph], list[Graph]]:
    """Deterministic shuffled 80/10/10 split."""
    n = len(dataset)
    if n < 10:
        raise ValueError(f"dataset too small to split: {n} graphs")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(0.8 * n)
    n_val = int(0.1 * n)
    train = [dataset.graphs[i] for i in perm[:n_train]]
    val = [dataset.graphs[i] for i in perm[n_train : n_train + n_val]]
    test = [dataset.graphs[i] for i in perm[n_train + n_val :]]
    return train, val, test


def standardize_features(
    train: list[Graph], *others: list[Graph]
) -> tuple[list[Graph], ...]:
    """Per-feature standardization with statistics from the training split only."""
    stacked = np.vstack([g.features for g in train])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0] = 1.0

    def apply(graphs: list[Graph]) -> list[Graph]:
        return [replace(g, features=(g.features - mean) / std) for g in graphs]

    return tuple(apply(split) for split in (train, *others))


# ---------------------------------------------------------------------------
# binary cache (same container conventions as model checkpoints)


def save_dataset_cache(dataset: Dataset, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        _write_str(fh, dataset.name)
        _write_str(fh, dataset.feature_mode)
        _write_u64(fh, dataset.num_classes)
        _write_u64(fh, len(dataset))
        for g in dataset.graphs:
            _write_u64(fh, g.num_nodes)
            _write_u64(fh, g.num_edges)
            _write_u64(fh, g.feature_dim)
            fh.write(struct.pack("<q", -1 if g.label is None else g.label))
            fh.write(g.edges.astype("<i8").tobytes(order="C"))
            fh.write(g.features.astype("<f8").tobytes(order="C"))


def load_dataset_cache(path: str | Path) -> Dataset:
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise ContainerError(f"{path}: not a dataset cache")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ContainerError(f"{path}: unsupported version {version}")
        name = _read_str(fh)
        mode = _read_str(fh)
        num_classes = _read_u64(fh)
        count = _read_u64(fh)
        graphs = []
        for _ in range(count):
            m = _read_u64(fh)
            n_edges = _read_u64(fh)
            d = _read_u64(fh)
            (label,) = struct.unpack("<q", fh.read(8))
            edges = np.frombuffer(fh.read(16 * n_edges), dtype="<i8").reshape(n_edges, 2)
            feats = np.frombuffer(fh.read(8 * m * d), dtype="<f8").reshape(m, d)
            graphs.append(
                Graph(
                    num_nodes=m,
                    edges=edges.copy(),
                    features=feats.copy(),
                    label=None if label < 0 else int(label),
                )
            )
    return Dataset(name=name, graphs=graphs, num_classes=num_classes, feature_mode=mode)
