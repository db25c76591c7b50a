"""Adaptive k-nearest-neighbor classification of geo-spatial points.

The classifier picks k separately for every query point: for each candidate k
it looks up the training points whose k-neighborhoods look most like the
query's, measures how often standard kNN at that k got them right, and keeps
the k with the best record.
"""

from .acker import (AckerClassifier, AckerConfig, Prediction, acker_classify,
                    acker_classify_batch, expected_accuracy)
from .data_io import CsvSchema, SyntheticSpec, generate, load_csv, write_csv
from .evaluation import (Acker, FoldPlan, StandardKnn, SweepReport, pearson_r,
                         roc_auc, run_cv, sweep_fixed_k, sweep_kmax, sweep_l,
                         sweep_roc)
from .feature_index import FeatureIndexSet, KRange, build_feature_index, most_similar
from .features import FeatureKind, feature_value, similarity
from .geo import DataError, Dataset, GeoPoint, LabeledPoint, ParameterError, distance
from .kernels import default as kernel_backend
from .knn import TrainingSet, VoteResult, accuracy, knn_classify, knn_predict
from .spatial import KDTree, NeighborList, SpatialIndex, build, k_nearest

__version__ = "0.1.0"

__all__ = [
    "Acker", "AckerClassifier", "AckerConfig", "CsvSchema", "DataError", "Dataset",
    "FeatureIndexSet", "FeatureKind", "FoldPlan", "GeoPoint", "KDTree", "KRange",
    "LabeledPoint", "NeighborList", "ParameterError", "Prediction", "SpatialIndex",
    "StandardKnn", "SweepReport", "SyntheticSpec", "TrainingSet", "VoteResult",
    "accuracy", "acker_classify", "acker_classify_batch", "build", "build_feature_index",
    "distance", "expected_accuracy", "feature_value", "generate", "k_nearest",
    "kernel_backend", "knn_classify", "knn_predict", "load_csv", "most_similar",
    "pearson_r", "roc_auc", "run_cv", "similarity", "sweep_fixed_k", "sweep_kmax",
    "sweep_l", "sweep_roc", "write_csv",
]
