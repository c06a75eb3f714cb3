"""Edge-based graph component pooling and its training pipeline."""

from .graph import ClusterAssignment, Graph, GraphValidationError, build_graph, connected_components
from .pooling import (
    EdgeScorer,
    MergeSelection,
    PoolResult,
    ShapeError,
    build_weight_matrix,
    coarsen,
    pool,
    pool_backward,
    score_edges,
    select_merge_edges,
    unpool,
)
from .edgepool import ContractionPlan, edgepool_contract, plan_contraction
from .nn import (
    GraphBatch,
    Model,
    ModelConfig,
    Parameter,
    UsageError,
    batch_graphs,
    count_parameters,
    cross_entropy_loss,
    gcn_layer_forward,
    global_sum_pool,
    linear_forward,
)
from .optim import Adam, halved_learning_rate
from .data import (
    Dataset,
    IngestionError,
    parse_tudataset,
    set_scalar_features,
    split_dataset,
    synthesize_degree_features,
)
from .training import (
    ResultRecord,
    TrainConfig,
    TrainingError,
    evaluate,
    run_experiment,
    train_model,
)
from .stats import t_test
from .bench import bench_pool_scaling
from .estimators import ComponentPooling, EdgeContractionPooling, GraphClassifier

__all__ = [
    "Adam",
    "ClusterAssignment",
    "ComponentPooling",
    "ContractionPlan",
    "Dataset",
    "EdgeContractionPooling",
    "EdgeScorer",
    "Graph",
    "GraphBatch",
    "GraphClassifier",
    "GraphValidationError",
    "IngestionError",
    "MergeSelection",
    "Model",
    "ModelConfig",
    "Parameter",
    "PoolResult",
    "ResultRecord",
    "ShapeError",
    "TrainConfig",
    "TrainingError",
    "UsageError",
    "batch_graphs",
    "bench_pool_scaling",
    "build_graph",
    "build_weight_matrix",
    "coarsen",
    "connected_components",
    "count_parameters",
    "cross_entropy_loss",
    "edgepool_contract",
    "evaluate",
    "gcn_layer_forward",
    "global_sum_pool",
    "halved_learning_rate",
    "linear_forward",
    "parse_tudataset",
    "plan_contraction",
    "pool",
    "pool_backward",
    "run_experiment",
    "score_edges",
    "select_merge_edges",
    "set_scalar_features",
    "split_dataset",
    "synthesize_degree_features",
    "t_test",
    "train_model",
    "unpool",
]

__version__ = "0.1.0"
