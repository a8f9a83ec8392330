from src.features.extract import extract_features, features_table, graph_features, rank_features
from src.features.flops import FlopBreakdown, count_flops, layer_flops
from src.features.vector import FEATURE_NAMES, N_FEATURES, FeatureVector

__all__ = [
    "FEATURE_NAMES",
    "N_FEATURES",
    "FeatureVector",
    "FlopBreakdown",
    "count_flops",
    "extract_features",
    "features_table",
    "graph_features",
    "layer_flops",
    "rank_features",
]
