"""Seeded synthetic worlds for controlled zero-shot experiments.

Entity classes fall into clusters. Classes of one cluster link to a shared
pool of concept nodes, so their graph neighborhoods overlap; the relation of
a triplet is fixed by the (subject cluster, object cluster) pair. A random
fraction of the (subject, relation, object) combinations is held out of
training and appears only in test scenes, which makes those test triplets
zero-shot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Scene, Triplet, TripletDataset
from .graph import EntityVocabulary, FeatureTable, GraphBuilder, KnowledgeGraph

EDGE_LABELS = ("RelatedTo", "IsA", "AtLocation", "UsedFor")


@dataclass
class SyntheticWorld:
    graph: KnowledgeGraph
    features: FeatureTable
    vocab: EntityVocabulary
    data: TripletDataset
    cluster_of: tuple[int, ...]
    relation_table: np.ndarray
    held_out: frozenset[Triplet]


def make_clustered_world(
    seed: int,
    n_clusters: int = 4,
    classes_per_cluster: int = 6,
    n_relations: int = 8,
    concepts_per_cluster: int = 8,
    link_prob: float = 0.7,
    hub_nodes: int = 6,
    hub_links: int = 1,
    feature_dim: int = 8,
    holdout: float = 0.2,
    nonzero_test: int = 20,
    symmetric: bool = True,
    partners_per_class: int | None = None,
    class_feature_noise: float | None = 0.5,
) -> SyntheticWorld:
    """Build a graph, features and a train/test triplet dataset.

    Each ordered pair of distinct classes is one combination, labelled by a
    random relation table over cluster pairs (symmetric when ``symmetric``).
    With ``partners_per_class`` each class is the subject of only that many
    randomly chosen combinations, so most class pairs never occur.
    Concept and hub features are standard normal. Class features are the
    mean of their neighbors' features plus Gaussian noise of scale
    ``class_feature_noise`` (semantic embeddings of related concepts are
    close); with ``None`` they are standard normal as well.
    ``holdout`` of the combinations become single-triplet test scenes;
    ``nonzero_test`` further test scenes repeat training combinations.
    """
    rng = np.random.default_rng(seed)
    n_classes = n_clusters * classes_per_cluster
    cluster_of = tuple(i // classes_per_cluster for i in range(n_classes))
    class_names = [f"class{i}" for i in range(n_classes)]

    b = GraphBuilder()
    for name in class_names:
        b.add_node(name)
    for i, name in enumerate(class_names):
        c = cluster_of[i]
        linked = rng.random(concepts_per_cluster) < link_prob
        if not linked.any():
            linked[rng.integers(concepts_per_cluster)] = True
        for m in np.flatnonzero(linked):
            b.add_edge(EDGE_LABELS[rng.integers(len(EDGE_LABELS))], name, f"concept{c}_{m}")
        for h in rng.choice(hub_nodes, size=min(hub_links, hub_nodes), replace=False):
            b.add_edge("RelatedTo", name, f"hub{h}")
    graph = b.finalize()
    matrix = rng.normal(size=(graph.node_count, feature_dim))
    if class_feature_noise is not None:
        for name in class_names:
            v = graph.node_id(name)
            nbrs = sorted(graph.neighbors(v))
            matrix[v] = matrix[nbrs].mean(axis=0) + class_feature_noise * rng.normal(size=feature_dim)
    features = FeatureTable(feature_dim, matrix, np.ones(graph.node_count, dtype=bool))

    table = rng.integers(n_relations, size=(n_clusters, n_clusters))
    if symmetric:
        table = np.triu(table) + np.triu(table, 1).T
    relations = tuple(f"rel{r}" for r in range(n_relations))
    vocab = EntityVocabulary(tuple(class_names), relations, tuple(graph.node_id(n) for n in class_names))

    if partners_per_class is None:
        pairs = [(a, o) for a in range(n_classes) for o in range(n_classes) if a != o]
    else:
        pairs = []
        for a in range(n_classes):
            others = [o for o in range(n_classes) if o != a]
            pairs += [(a, int(o)) for o in sorted(rng.choice(others, size=partners_per_class, replace=False))]
    combos = [Triplet(a, int(table[cluster_of[a], cluster_of[o]]), o) for a, o in pairs]
    perm = rng.permutation(len(combos))
    n_hold = int(round(holdout * len(combos)))
    held = [combos[i] for i in sorted(perm[:n_hold])]
    kept = [combos[i] for i in sorted(perm[n_hold:])]

    scenes = [Scene(f"train{i:05d}", "train", (t,)) for i, t in enumerate(kept)]
    scenes += [Scene(f"test{i:05d}", "test", (t,)) for i, t in enumerate(held)]
    for j, i in enumerate(rng.choice(len(kept), size=min(nonzero_test, len(kept)), replace=False)):
        scenes.append(Scene(f"testseen{j:05d}", "test", (kept[i],)))
    data = TripletDataset(vocab, tuple(scenes))
    return SyntheticWorld(graph, features, vocab, data, cluster_of, table, frozenset(held))
