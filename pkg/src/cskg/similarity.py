"""Neighborhood overlap between entity classes and neighbor-averaged features."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import EntityVocabulary, FeatureTable, KnowledgeGraph


def jaccard(graph: KnowledgeGraph, a: int, b: int) -> float:
    """Jaccard overlap of the neighbor sets of ``a`` and ``b`` (0 when both are empty)."""
    na = graph.neighbors(a)
    nb = graph.neighbors(b)
    if not na and not nb:
        return 0.0
    inter = len(na & nb)
    return inter / (len(na) + len(nb) - inter)


@dataclass(frozen=True)
class SimilarityReport:
    """Class pairs ranked by neighbor Jaccard, highest first."""

    pairs: tuple[tuple[str, str, float], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"a": a, "b": b, "jaccard": s}) + "\n" for a, b, s in self.pairs)


def rank_similar_pairs(graph: KnowledgeGraph, vocab: EntityVocabulary, top_n: int) -> SimilarityReport:
    """Score every unordered class pair and keep the ``top_n`` best.

    Ties are broken by the (a, b) name pair, with each pair's names in
    vocabulary order.
    """
    if top_n < 1:
        raise ValueError("top_n must be a positive integer")
    scored = [
        (vocab.classes[i], vocab.classes[j], jaccard(graph, vocab.node_of(i), vocab.node_of(j)))
        for i, j in combinations(range(len(vocab.classes)), 2)
    ]
    scored.sort(key=lambda t: (-t[2], t[0], t[1]))
    return SimilarityReport(tuple(scored[:top_n]))


def neighbor_embedding(graph: KnowledgeGraph, features: FeatureTable, c: int) -> np.ndarray:
    """Mean feature vector over the neighbors of ``c``; zeros if ``c`` is isolated."""
    nbrs = graph.neighbors(c)
    if not nbrs:
        return np.zeros(features.dim)
    # sorted so the floating-point sum does not depend on set iteration order
    return features.rows(sorted(nbrs)).mean(axis=0)
