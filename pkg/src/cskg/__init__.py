"""Commonsense knowledge-graph mining and knowledge-only zero-shot relation prediction."""

__version__ = "0.1.0"

from .data import (Scene, Triplet, TripletDataset, ZeroShotIndex, amplify_zero_shot, build_zero_shot_index,
                   filter_test_common_relations, load_triplets)
from .evaluation import RecallReport, evaluate
from .graph import (EntityVocabulary, FeatureTable, GraphBuilder, IngestOptions, KnowledgeGraph, link_classes,
                    load_edges, load_features, neighbors)
from .integrators import (IntegratorConfig, fused_integrate, message_pass, neighbor_integrate, path_integrate,
                          sort_pool)
from .midpaths import (PathStatistics, accumulate_statistics, conditional_probability, enumerate_midpaths,
                       marginal_probability, midpath_score, top_midpaths_per_relation)
from .pathgraph import PathGraph, build_all_hops, build_path_graph
from .predictor import RelationPredictor, TrainingConfig, score_pair, train_predictor
from .similarity import jaccard, neighbor_embedding, rank_similar_pairs

__all__ = [
    "Scene",
    "Triplet",
    "TripletDataset",
    "ZeroShotIndex",
    "amplify_zero_shot",
    "build_zero_shot_index",
    "filter_test_common_relations",
    "load_triplets",
    "RecallReport",
    "evaluate",
    "EntityVocabulary",
    "FeatureTable",
    "GraphBuilder",
    "IngestOptions",
    "KnowledgeGraph",
    "link_classes",
    "load_edges",
    "load_features",
    "neighbors",
    "IntegratorConfig",
    "fused_integrate",
    "message_pass",
    "neighbor_integrate",
    "path_integrate",
    "sort_pool",
    "PathStatistics",
    "accumulate_statistics",
    "conditional_probability",
    "enumerate_midpaths",
    "marginal_probability",
    "midpath_score",
    "top_midpaths_per_relation",
    "PathGraph",
    "build_all_hops",
    "build_path_graph",
    "RelationPredictor",
    "TrainingConfig",
    "score_pair",
    "train_predictor",
    "jaccard",
    "neighbor_embedding",
    "rank_similar_pairs",
]
