"""Consistency-aware GNN fraud detection on multi-relation graphs."""

__version__ = "0.1.0"

from .graph import MultiRelationGraph, build_graph, graph_stats
from .metrics import (
    CharacteristicReport,
    context_characteristic,
    feature_characteristic,
    relation_report,
)
from .model import (
    FULL_MEAN_GNN,
    GRAPHCONSIS,
    UNIFORM_SAMPLE_GNN,
    LayerConfig,
    ModelParams,
    ModelVariant,
    SampledNeighborhood,
    aggregate_neighborhood,
    consistency_scores,
    filter_and_sample,
    init_params,
    layer_forward,
    model_forward,
    compute_loss,
    predict_scores,
    relation_attention_weights,
    train,
)
from .data import (
    RelationSpec,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    load_dataset_dir,
    save_dataset,
    save_dataset_dir,
    split_dataset,
)
from .baselines import (
    METHODS,
    train_full_mean_gnn,
    train_logistic_regression,
    train_uniform_sample_gnn,
)
from .estimators import (
    ESTIMATORS,
    FullMeanGNNClassifier,
    GraphConsisClassifier,
    LogisticRegressionBaseline,
    UniformSampleGNNClassifier,
    make_estimator,
)
from .evaluation import (
    EvalResult,
    ExperimentGrid,
    RunSettings,
    auc_score,
    f1_score,
    run_experiment,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "__version__",
    "MultiRelationGraph", "build_graph", "graph_stats",
    "CharacteristicReport", "context_characteristic", "feature_characteristic", "relation_report",
    "LayerConfig", "ModelParams", "ModelVariant",
    "GRAPHCONSIS", "UNIFORM_SAMPLE_GNN", "FULL_MEAN_GNN",
    "SampledNeighborhood", "consistency_scores", "filter_and_sample",
    "relation_attention_weights", "aggregate_neighborhood",
    "init_params", "layer_forward", "model_forward", "compute_loss",
    "train", "predict_scores",
    "RelationSpec", "SyntheticSpec", "SplitSpec",
    "generate_synthetic", "save_dataset", "load_dataset",
    "save_dataset_dir", "load_dataset_dir", "split_dataset",
    "METHODS", "train_logistic_regression", "train_uniform_sample_gnn", "train_full_mean_gnn",
    "ESTIMATORS", "make_estimator", "GraphConsisClassifier", "LogisticRegressionBaseline",
    "UniformSampleGNNClassifier", "FullMeanGNNClassifier",
    "EvalResult", "ExperimentGrid", "RunSettings", "f1_score", "auc_score", "run_experiment",
    "Checkpoint", "save_checkpoint", "load_checkpoint",
]
