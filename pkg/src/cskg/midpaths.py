"""MidPath enumeration between node pairs and path/relation co-occurrence scoring.

A MidPath is a tuple ``(label, node, label, ..., label)`` holding the edge
labels and intermediate nodes of a simple path, without its endpoints. An
h-hop path gives a tuple of length ``2h - 1``. MidPaths are oriented from
the first node of the query pair to the second.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, NamedTuple

from .errors import GraphError, LinkingError
from .graph import EntityVocabulary, KnowledgeGraph

MidPath = tuple[int, ...]

MAX_HOPS = 3
DEFAULT_HOPS = 2
DEFAULT_PATH_CAP = 4096


class PathEnumeration(NamedTuple):
    paths: list[MidPath]
    truncated: bool


def hop_count(midpath: MidPath) -> int:
    return (len(midpath) + 1) // 2


def midpath_nodes(midpath: MidPath) -> tuple[int, ...]:
    """Intermediate node ids of a MidPath."""
    return midpath[1::2]


def reverse_midpath(midpath: MidPath) -> MidPath:
    return midpath[::-1]


def render_midpath(graph: KnowledgeGraph, midpath: MidPath) -> str:
    """Human-readable form, e.g. ``RelatedTo-cars-RelatedTo``."""
    return "-".join(
        graph.label_names[x] if i % 2 == 0 else graph.node_names[x] for i, x in enumerate(midpath)
    )


def midpath_names(graph: KnowledgeGraph, midpath: MidPath) -> list[str]:
    return [graph.label_names[x] if i % 2 == 0 else graph.node_names[x] for i, x in enumerate(midpath)]


def _check_hops(max_hops: int) -> None:
    if max_hops < 1:
        raise GraphError("max_hops must be at least 1")
    if max_hops > MAX_HOPS:
        raise GraphError(f"max_hops={max_hops} exceeds the ceiling of {MAX_HOPS}")


def _level(graph: KnowledgeGraph, a: int, b: int, hops: int) -> list[MidPath]:
    adj = graph._adj
    out: list[MidPath] = []
    if hops == 1:
        out.extend((lab,) for lab in adj[a].get(b, ()))
    elif hops == 2:
        na, nb = adj[a], adj[b]
        small, big = (na, nb) if len(na) <= len(nb) else (nb, na)
        for x in small:
            if x in big and x != a and x != b:
                for l1, l2 in product(na[x], adj[x][b]):
                    out.append((l1, x, l2))
    elif hops == 3:
        nb = adj[b]
        for x, labs_ax in adj[a].items():
            if x == b:
                continue
            nx = adj[x]
            small, big = (nx, nb) if len(nx) <= len(nb) else (nb, nx)
            for y in small:
                if y in big and y != a and y != b and y != x:
                    for l1, l2, l3 in product(labs_ax, nx[y], adj[y][b]):
                        out.append((l1, x, l2, y, l3))
    return out


def enumerate_midpaths(
    graph: KnowledgeGraph, a: int, b: int, max_hops: int = DEFAULT_HOPS, cap: int = DEFAULT_PATH_CAP
) -> PathEnumeration:
    """All simple undirected paths of 1..max_hops hops from ``a`` to ``b`` as MidPaths.

    Ordered by hop count, then lexicographically by element ids. When more
    than ``cap`` paths exist the ordered list is cut at ``cap`` and
    ``truncated`` is set.
    """
    graph._check(a)
    graph._check(b)
    if a == b:
        raise GraphError("path endpoints must differ")
    _check_hops(max_hops)
    if cap < 1:
        raise GraphError("cap must be positive")
    paths: list[MidPath] = []
    for hops in range(1, max_hops + 1):
        level = sorted(_level(graph, a, b, hops))
        room = cap - len(paths)
        if len(level) > room:
            paths.extend(level[:room])
            return PathEnumeration(paths, True)
        paths.extend(level)
    return PathEnumeration(paths, False)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass
class PathStatistics:
    """Co-occurrence counts of MidPaths with relations.

    ``cooccur[(p, r)]`` counts how often MidPath ``p`` connects the subject
    and object of a triplet labelled ``r``. The totals are kept in step.
    """

    cooccur: Counter = field(default_factory=Counter)
    midpath_totals: Counter = field(default_factory=Counter)
    relation_totals: Counter = field(default_factory=Counter)
    grand_total: int = 0

    def add(self, midpath: MidPath, relation: int, count: int = 1) -> None:
        self.cooccur[(midpath, relation)] += count
        self.midpath_totals[midpath] += count
        self.relation_totals[relation] += count
        self.grand_total += count

    def merge(self, other: "PathStatistics") -> "PathStatistics":
        """Sum of two statistics objects (neither input is modified)."""
        out = PathStatistics()
        out.cooccur = self.cooccur + other.cooccur
        out.midpath_totals = self.midpath_totals + other.midpath_totals
        out.relation_totals = self.relation_totals + other.relation_totals
        out.grand_total = self.grand_total + other.grand_total
        return out

    @classmethod
    def from_counts(cls, counts: dict[tuple[MidPath, int], int]) -> "PathStatistics":
        stats = cls()
        for (p, r), n in counts.items():
            if n:
                stats.add(p, r, n)
        return stats

    def midpaths_for(self, relation: int) -> list[MidPath]:
        return [p for (p, r), n in self.cooccur.items() if r == relation and n > 0]

    def to_jsonl(self, graph: KnowledgeGraph, relation_names: tuple[str, ...]) -> str:
        rows = sorted(self.cooccur.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        return "".join(
            json.dumps({"midpath": midpath_names(graph, p), "relation": relation_names[r], "count": n}) + "\n"
            for (p, r), n in rows
        )


def accumulate_statistics(
    graph: KnowledgeGraph,
    vocab: EntityVocabulary,
    triplets,
    L: int = DEFAULT_HOPS,
    cap: int = DEFAULT_PATH_CAP,
    split: str | None = None,
) -> PathStatistics:
    """Count MidPath/relation co-occurrences over ``triplets``.

    ``triplets`` is a TripletDataset (optionally restricted to ``split``) or
    any iterable of objects with ``subject``, ``relation`` and ``object``
    class indices. Triplets whose subject and object are the same class have
    no MidPaths and add nothing.
    """
    _check_hops(L)
    if hasattr(triplets, "iter_triplets"):
        items: Iterable = triplets.iter_triplets(split)
    else:
        items = triplets
    stats = PathStatistics()
    cache: dict[tuple[int, int], list[MidPath]] = {}
    n_classes = len(vocab.classes)
    for t in items:
        if not (0 <= t.subject < n_classes and 0 <= t.object < n_classes):
            raise LinkingError([f"triplet {t!r} references an unlinked class"])
        if not 0 <= t.relation < len(vocab.relations):
            raise LinkingError([f"triplet {t!r} references an unknown relation"])
        a, b = vocab.node_of(t.subject), vocab.node_of(t.object)
        if a == b:
            continue
        paths = cache.get((a, b))
        if paths is None:
            paths = cache[(a, b)] = enumerate_midpaths(graph, a, b, L, cap).paths
        for p in paths:
            stats.add(p, t.relation)
    return stats


def conditional_probability(stats: PathStatistics, p: MidPath, r: int) -> float:
    """Share of relation ``r``'s path occurrences that are ``p``."""
    total = stats.relation_totals.get(r, 0)
    if total <= 0:
        raise KeyError(f"relation {r} never observed with any MidPath")
    return stats.cooccur.get((p, r), 0) / total


def marginal_probability(stats: PathStatistics, p: MidPath) -> float:
    if stats.grand_total <= 0:
        raise ValueError("statistics are empty")
    return stats.midpath_totals.get(p, 0) / stats.grand_total


def midpath_score(stats: PathStatistics, p: MidPath, r: int) -> float:
    """Lift of ``p`` under relation ``r`` over its overall frequency."""
    return conditional_probability(stats, p, r) - marginal_probability(stats, p)


def top_midpaths_per_relation(stats: PathStatistics, top_n: int) -> dict[int, list[tuple[MidPath, float]]]:
    """Best-scoring MidPaths observed with each relation, ties in MidPath order."""
    if top_n < 1:
        raise ValueError("top_n must be a positive integer")
    if stats.grand_total <= 0:
        raise ValueError("statistics are empty")
    by_rel: dict[int, list[MidPath]] = {}
    for (p, r), n in stats.cooccur.items():
        if n > 0:
            by_rel.setdefault(r, []).append(p)
    out = {}
    for r in sorted(by_rel):
        scored = [(p, midpath_score(stats, p, r)) for p in by_rel[r]]
        scored.sort(key=lambda t: (-t[1], t[0]))
        out[r] = scored[:top_n]
    return out
