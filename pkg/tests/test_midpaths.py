import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cskg.data import Triplet
from cskg.errors import GraphError, LinkingError
from cskg.graph import EntityVocabulary, graph_from_edges
from cskg.midpaths import (PathStatistics, accumulate_statistics, conditional_probability, enumerate_midpaths,
                           hop_count, marginal_probability, midpath_nodes, midpath_score, render_midpath,
                           reverse_midpath, top_midpaths_per_relation)

from conftest import dfs_midpaths, names_of, random_edge_list


def people_graph():
    return graph_from_edges([
        ("RelatedTo", "people", "cars"),
        ("RelatedTo", "cars", "street"),
        ("AtLocation", "people", "street"),
        ("RelatedTo", "automobile", "street"),
        ("IsA", "automobile", "cars"),
    ])


def test_people_automobile_two_hop_paths():
    g = people_graph()
    res = enumerate_midpaths(g, g.node_id("people"), g.node_id("automobile"), 2)
    rendered = sorted(render_midpath(g, p) for p in res.paths)
    assert rendered == ["AtLocation-street-RelatedTo", "RelatedTo-cars-IsA"]
    assert not res.truncated
    three = enumerate_midpaths(g, g.node_id("people"), g.node_id("automobile"), 3).paths
    assert "RelatedTo-cars-RelatedTo-street-RelatedTo" in {render_midpath(g, p) for p in three}


def test_direct_edge_is_single_label_path():
    g = graph_from_edges([("R", "a", "b"), ("S", "a", "b")])
    assert enumerate_midpaths(g, 0, 1, 1).paths == [(0,), (1,)]


def test_no_connection_gives_empty():
    g = graph_from_edges([("R", "a", "b"), ("R", "c", "d")])
    res = enumerate_midpaths(g, g.node_id("a"), g.node_id("c"), 3)
    assert res.paths == [] and not res.truncated


def test_argument_errors():
    g = people_graph()
    with pytest.raises(GraphError):
        enumerate_midpaths(g, 0, 0, 2)
    with pytest.raises(GraphError):
        enumerate_midpaths(g, 0, 1, 4)
    with pytest.raises(GraphError):
        enumerate_midpaths(g, 0, 1, 0)
    with pytest.raises(GraphError):
        enumerate_midpaths(g, 0, 99, 2)


def test_matches_dfs_oracle_25_nodes(rng):
    edges = random_edge_list(rng, 25, 60, 3)
    g = graph_from_edges(edges)
    names = g.node_names
    for a in range(0, len(names), 3):
        for b in range(1, len(names), 4):
            if a == b:
                continue
            got = sorted((names_of(g, p) for p in enumerate_midpaths(g, a, b, 3).paths), key=lambda p: (len(p), p))
            assert got == dfs_midpaths(edges, names[a], names[b], 3)


def test_output_is_ordered_and_simple(rng):
    edges = random_edge_list(rng, 15, 50, 2)
    g = graph_from_edges(edges)
    paths = enumerate_midpaths(g, 0, 1, 3).paths
    assert paths == sorted(paths, key=lambda p: (len(p), p))
    for p in paths:
        nodes = [0, *midpath_nodes(p), 1]
        assert len(set(nodes)) == len(nodes)
        assert len(p) == 2 * hop_count(p) - 1


def test_truncation_is_prefix_of_full_list(rng):
    edges = random_edge_list(rng, 12, 60, 3)
    g = graph_from_edges(edges)
    full = enumerate_midpaths(g, 0, 1, 3)
    assert len(full.paths) > 5
    cut = enumerate_midpaths(g, 0, 1, 3, cap=5)
    assert cut.truncated and cut.paths == full.paths[:5]
    exact = enumerate_midpaths(g, 0, 1, 3, cap=len(full.paths))
    assert not exact.truncated and exact.paths == full.paths


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 3))
def test_reversal_and_monotonicity(seed, L):
    rng = np.random.default_rng(seed)
    edges = random_edge_list(rng, 10, 25, 2)
    g = graph_from_edges(edges)
    if g.node_count < 2:
        return
    a, b = 0, g.node_count - 1
    fwd = enumerate_midpaths(g, a, b, L).paths
    back = enumerate_midpaths(g, b, a, L).paths
    assert sorted((reverse_midpath(p) for p in back), key=lambda p: (len(p), p)) == fwd
    if L < 3:
        assert set(fwd) <= set(enumerate_midpaths(g, a, b, L + 1).paths)


# -- statistics ---------------------------------------------------------------

P1, P2 = (0, 5, 1), (2,)


def hand_stats():
    return PathStatistics.from_counts({(P1, 0): 3, (P1, 1): 1, (P2, 0): 1})


def test_hand_computed_score():
    s = hand_stats()
    assert conditional_probability(s, P1, 0) == pytest.approx(0.75)
    assert marginal_probability(s, P1) == pytest.approx(0.8)
    assert midpath_score(s, P1, 0) == pytest.approx(-0.05)
    assert midpath_score(s, P1, 1) == pytest.approx(0.2)
    assert midpath_score(s, P2, 0) == pytest.approx(0.05)


def test_unknown_relation_and_empty_stats():
    with pytest.raises(KeyError):
        conditional_probability(hand_stats(), P1, 7)
    with pytest.raises(ValueError):
        marginal_probability(PathStatistics(), P1)
    with pytest.raises(ValueError):
        top_midpaths_per_relation(PathStatistics(), 3)


def test_top_midpaths_ranking_and_ties():
    s = hand_stats()
    top = top_midpaths_per_relation(s, 5)
    assert [p for p, _ in top[0]] == [P2, P1]
    assert [p for p, _ in top[1]] == [P1]
    tie = PathStatistics.from_counts({((3,), 0): 1, ((1,), 0): 1, ((2,), 1): 2})
    assert [p for p, _ in top_midpaths_per_relation(tie, 1)[0]] == [(1,)]
    with pytest.raises(ValueError):
        top_midpaths_per_relation(s, 0)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.tuples(st.sampled_from([(0,), (1,), (0, 3, 1), (2, 4, 2)]), st.integers(0, 3)),
                       st.integers(1, 20), min_size=1))
def test_probabilities_normalize(counts):
    s = PathStatistics.from_counts(counts)
    paths = {p for p, _ in counts}
    for r in s.relation_totals:
        assert sum(conditional_probability(s, p, r) for p in paths) == pytest.approx(1.0, abs=1e-9)
    assert sum(marginal_probability(s, p) for p in paths) == pytest.approx(1.0, abs=1e-9)
    for (p, r) in counts:
        assert -1.0 <= midpath_score(s, p, r) <= 1.0


def test_merge_adds_counts():
    s = hand_stats().merge(hand_stats())
    assert s.grand_total == 10 and s.cooccur[(P1, 0)] == 6


def test_accumulate_statistics_on_triplets():
    g = people_graph()
    nodes = (g.node_id("people"), g.node_id("automobile"), g.node_id("street"))
    vocab = EntityVocabulary(("people", "automobile", "street"), ("near", "on"), nodes)
    trips = [Triplet(0, 0, 1), Triplet(0, 0, 1), Triplet(1, 1, 2), Triplet(2, 1, 2)]
    s = accumulate_statistics(g, vocab, trips, L=2)
    n_pa = len(enumerate_midpaths(g, nodes[0], nodes[1], 2).paths)
    n_as = len(enumerate_midpaths(g, nodes[1], nodes[2], 2).paths)
    assert s.relation_totals[0] == 2 * n_pa
    assert s.relation_totals[1] == n_as  # same-class triplet adds nothing
    assert s.grand_total == 2 * n_pa + n_as
    rows = [json.loads(l) for l in s.to_jsonl(g, vocab.relations).splitlines()]
    assert sum(r["count"] for r in rows) == s.grand_total
    with pytest.raises(LinkingError):
        accumulate_statistics(g, vocab, [Triplet(0, 0, 9)])
