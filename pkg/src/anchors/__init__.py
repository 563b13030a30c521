from .graph import AnchorSampleGraph, AnchorSet, build_asg, select_anchors
from .kmeans import KMeansResult, kmeans
from .propagation import AnchorModel, PropagationCache, build_anchor_model, exact_anchor_model, precompute_propagation

__all__ = [
    "AnchorModel",
    "AnchorSampleGraph",
    "AnchorSet",
    "KMeansResult",
    "PropagationCache",
    "build_anchor_model",
    "build_asg",
    "exact_anchor_model",
    "kmeans",
    "precompute_propagation",
    "select_anchors",
]
