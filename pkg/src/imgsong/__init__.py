"""Image-based music recommendation through tripartite network embedding."""

from .embedding import EmbeddingModel, TrainConfig, load_model, save_model, train
from .features import FeatureStore, histogram_extract, load_features, save_features
from .graph import TripartiteGraph, VertexKind, load_edges, save_edges
from .retrieval import RetrievalConfig, knn, recommend

__version__ = "0.1.0"

__all__ = [
    "EmbeddingModel",
    "FeatureStore",
    "RetrievalConfig",
    "TrainConfig",
    "TripartiteGraph",
    "VertexKind",
    "histogram_extract",
    "knn",
    "load_edges",
    "load_features",
    "load_model",
    "recommend",
    "save_edges",
    "save_features",
    "save_model",
    "train",
]
