"""Frame-element induction over contextual argument embeddings.

Pipeline: load or synthesize a corpus of argument instances, optionally
fit a metric head with a triplet or angular-margin loss, cluster instances
into role clusters (globally or per frame), merge with the true frames, and
score against gold frame elements.
"""

from .baselines import boolean_cluster, dependency_cluster
from .clustering import (
    ClusterCount,
    DistanceThreshold,
    FEClustering,
    RoleClustering,
    calibrate_threshold,
    cross_frame_cluster,
    group_average_cluster,
    intra_frame_cluster,
    merge_frame_role,
    role_cluster_count,
)
from .corpus import (
    ArgumentInstance,
    Dataset,
    DatasetStats,
    FoldSplit,
    Position,
    SynthConfig,
    dataset_stats,
    generate_synthetic,
    load_corpus,
    normalize_embeddings,
    save_corpus,
    split_folds,
)
from .errors import DataError, NumericalError
from .evaluation import EvalReport, evaluate, ranking_recall
from .metric_learning import (
    ArcFaceHead,
    MetricHead,
    TrainConfig,
    TrainedModel,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentInstance",
    "ArcFaceHead",
    "ClusterCount",
    "DataError",
    "Dataset",
    "DatasetStats",
    "DistanceThreshold",
    "EvalReport",
    "FEClustering",
    "FoldSplit",
    "MetricHead",
    "NumericalError",
    "Position",
    "RoleClustering",
    "SynthConfig",
    "TrainConfig",
    "TrainedModel",
    "boolean_cluster",
    "calibrate_threshold",
    "cross_frame_cluster",
    "dataset_stats",
    "dependency_cluster",
    "evaluate",
    "generate_synthetic",
    "group_average_cluster",
    "intra_frame_cluster",
    "load_corpus",
    "merge_frame_role",
    "normalize_embeddings",
    "ranking_recall",
    "role_cluster_count",
    "save_corpus",
    "split_folds",
    "train",
]
