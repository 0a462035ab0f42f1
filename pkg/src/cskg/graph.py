"""Knowledge graph storage, feature tables and class-name linking.

The graph is built once through :class:`GraphBuilder` (or :func:`load_edges`)
and is read-only afterwards. Edges are stored undirected with their label:
adding ``(u, v, label)`` makes ``(v, label)`` visible from ``u`` and
``(u, label)`` visible from ``v``. Distinct labels between the same pair
are kept as separate entries.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import GraphError, LinkingError, ParseError

logger = logging.getLogger(__name__)

NameNormalizer = Callable[[str], str]

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Lowercase and turn internal whitespace into underscores."""
    return _WS.sub("_", name.strip().lower())


def conceptnet_name(uri: str, language: str | None = None) -> str | None:
    """Reduce a ConceptNet URI to a bare concept or relation name.

    ``/c/en/traffic_light/n`` -> ``traffic_light``, ``/r/RelatedTo`` -> ``RelatedTo``.
    Returns None for concepts outside ``language`` (when given).
    Plain names without a leading slash pass through unchanged.
    """
    if not uri.startswith("/"):
        return uri
    parts = uri.split("/")
    # ['', 'c', 'en', 'chair', 'n', ...]
    if len(parts) >= 4 and parts[1] == "c":
        if language is not None and parts[2] != language:
            return None
        return parts[3]
    if len(parts) >= 3 and parts[1] == "r":
        return "/".join(parts[2:])
    return uri


@dataclass(frozen=True)
class IngestOptions:
    """How to read an edge file.

    ``columns`` gives the zero-based column indices of (relation, head, tail).
    With ``conceptnet_uris`` the three fields are reduced by
    :func:`conceptnet_name`; rows whose head or tail falls outside
    ``language`` are skipped.
    """

    columns: tuple[int, int, int] = (0, 1, 2)
    conceptnet_uris: bool = False
    language: str | None = None
    comment_prefix: str = "#"


class KnowledgeGraph:
    """Interned, undirected, edge-labelled multigraph. Read-only.

    Node and label ids are dense integers assigned in first-appearance order.
    """

    __slots__ = ("_node_names", "_node_ids", "_label_names", "_label_ids", "_adj", "_nbrs", "edge_count")

    def __init__(self, node_names, label_names, adjacency, edge_count):
        self._node_names: tuple[str, ...] = tuple(node_names)
        self._node_ids: dict[str, int] = {n: i for i, n in enumerate(self._node_names)}
        self._label_names: tuple[str, ...] = tuple(label_names)
        self._label_ids: dict[str, int] = {n: i for i, n in enumerate(self._label_names)}
        # per node: neighbor id -> sorted tuple of label ids
        self._adj: tuple[dict[int, tuple[int, ...]], ...] = tuple(adjacency)
        self._nbrs: tuple[frozenset[int], ...] = tuple(frozenset(d) for d in self._adj)
        self.edge_count: int = edge_count

    # -- sizes / names -----------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._node_names)

    @property
    def label_count(self) -> int:
        return len(self._label_names)

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._node_names

    @property
    def label_names(self) -> tuple[str, ...]:
        return self._label_names

    def node_id(self, name: str) -> int:
        try:
            return self._node_ids[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def find_node(self, name: str) -> int | None:
        return self._node_ids.get(name)

    def node_name(self, node: int) -> str:
        self._check(node)
        return self._node_names[node]

    def label_id(self, name: str) -> int:
        try:
            return self._label_ids[name]
        except KeyError:
            raise GraphError(f"unknown edge label {name!r}") from None

    def label_name(self, label: int) -> str:
        if not 0 <= label < len(self._label_names):
            raise GraphError(f"invalid label id {label}")
        return self._label_names[label]

    def __contains__(self, name: str) -> bool:
        return name in self._node_ids

    def __repr__(self) -> str:
        return (f"KnowledgeGraph(nodes={self.node_count}, edges={self.edge_count}, "
                f"labels={self.label_count})")

    # -- adjacency ---------------------------------------------------------

    def _check(self, node: int) -> None:
        if not isinstance(node, (int, np.integer)) or not 0 <= node < len(self._node_names):
            raise GraphError(f"invalid node id {node!r}")

    def neighbors(self, node: int) -> frozenset[int]:
        """Distinct adjacent node ids, labels ignored."""
        self._check(node)
        return self._nbrs[node]

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def labels_between(self, u: int, v: int) -> tuple[int, ...]:
        """Sorted label ids of all edges joining ``u`` and ``v`` (empty if none)."""
        self._check(u)
        self._check(v)
        return self._adj[u].get(v, ())

    def adjacency(self, node: int) -> list[tuple[int, int]]:
        """Adjacency entries ``(neighbor, label)`` of ``node`` sorted by (neighbor, label)."""
        self._check(node)
        d = self._adj[node]
        return [(v, lab) for v in sorted(d) for lab in d[v]]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Each undirected edge once as ``(u, v, label)`` with ``u < v``."""
        for u, d in enumerate(self._adj):
            for v in sorted(d):
                if v > u:
                    for lab in d[v]:
                        yield u, v, lab


class GraphBuilder:
    """Accumulates edges, then produces an immutable :class:`KnowledgeGraph`."""

    def __init__(self):
        self._node_ids: dict[str, int] = {}
        self._label_ids: dict[str, int] = {}
        self._adj: list[dict[int, set[int]]] = []
        self._edge_count = 0
        self._finalized = False

    def _intern_node(self, name: str) -> int:
        i = self._node_ids.get(name)
        if i is None:
            i = self._node_ids[name] = len(self._node_ids)
            self._adj.append({})
        return i

    def add_node(self, name: str) -> int:
        if self._finalized:
            raise GraphError("graph already finalized")
        return self._intern_node(name)

    def add_edge(self, label: str, head: str, tail: str) -> bool:
        """Add an undirected labelled edge. Returns False for self-loops and duplicates."""
        if self._finalized:
            raise GraphError("graph already finalized")
        if head == tail:
            return False
        u = self._intern_node(head)
        v = self._intern_node(tail)
        lab = self._label_ids.get(label)
        if lab is None:
            lab = self._label_ids[label] = len(self._label_ids)
        labels = self._adj[u].setdefault(v, set())
        if lab in labels:
            return False
        labels.add(lab)
        self._adj[v].setdefault(u, set()).add(lab)
        self._edge_count += 1
        return True

    def finalize(self) -> KnowledgeGraph:
        self._finalized = True
        adjacency = [{v: tuple(sorted(labs)) for v, labs in d.items()} for d in self._adj]
        return KnowledgeGraph(list(self._node_ids), list(self._label_ids), adjacency, self._edge_count)


def graph_from_edges(edges: Iterable[tuple[str, str, str]]) -> KnowledgeGraph:
    """Build a graph from ``(label, head, tail)`` name triples."""
    b = GraphBuilder()
    for label, head, tail in edges:
        b.add_edge(label, head, tail)
    return b.finalize()


def load_edges(path, options: IngestOptions | None = None) -> KnowledgeGraph:
    """Read a tab-separated edge list into a finalized graph.

    Each non-comment line holds relation, head and tail columns (extra
    columns ignored). Duplicates collapse, self-loops are dropped.
    """
    options = options or IngestOptions()
    rel_col, head_col, tail_col = options.columns
    need = max(options.columns) + 1
    builder = GraphBuilder()
    seen_any = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith(options.comment_prefix):
                continue
            cols = line.split("\t")
            if len(cols) < need:
                raise ParseError(f"expected at least {need} tab-separated columns, got {len(cols)}", path, lineno)
            rel, head, tail = cols[rel_col], cols[head_col], cols[tail_col]
            if not rel or not head or not tail:
                raise ParseError("empty relation, head or tail field", path, lineno)
            seen_any = True
            if options.conceptnet_uris:
                rel = conceptnet_name(rel)
                head = conceptnet_name(head, options.language)
                tail = conceptnet_name(tail, options.language)
                if head is None or tail is None:
                    continue
            builder.add_edge(rel, head, tail)
    if not seen_any:
        raise ParseError("edge file contains no edges", path)
    graph = builder.finalize()
    logger.info("loaded %s from %s", graph, path)
    return graph


def write_edges(graph: KnowledgeGraph, path) -> None:
    """Write ``graph`` back out in edge-file form (one line per undirected edge)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v, lab in graph.edges():
            fh.write(f"{graph.label_names[lab]}\t{graph.node_names[u]}\t{graph.node_names[v]}\n")


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


class FeatureTable:
    """Dense per-node feature matrix; nodes without a row read as zeros."""

    def __init__(self, dim: int, matrix: np.ndarray, present: np.ndarray, skipped_rows: int = 0):
        if dim < 1:
            raise ValueError("feature dimension must be positive")
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != dim:
            raise ValueError(f"feature matrix must have {dim} columns")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("feature matrix contains non-finite values")
        matrix.setflags(write=False)
        self.dim = dim
        self.matrix = matrix
        self.present = np.asarray(present, dtype=bool)
        self.skipped_rows = skipped_rows

    @classmethod
    def from_mapping(cls, graph: KnowledgeGraph, dim: int, rows: dict[str, Sequence[float]]) -> "FeatureTable":
        """Build a table from ``node name -> vector``; unknown names are counted as skipped."""
        matrix = np.zeros((graph.node_count, dim))
        present = np.zeros(graph.node_count, dtype=bool)
        skipped = 0
        for name, vec in rows.items():
            i = graph.find_node(name)
            if i is None:
                skipped += 1
                continue
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dim,):
                raise ValueError(f"vector for {name!r} has shape {vec.shape}, expected ({dim},)")
            matrix[i] = vec
            present[i] = True
        return cls(dim, matrix, present, skipped)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def lookup(self, node: int) -> np.ndarray:
        if not 0 <= node < self.matrix.shape[0]:
            raise GraphError(f"invalid node id {node!r}")
        return self.matrix[node]

    def rows(self, nodes: Sequence[int]) -> np.ndarray:
        return self.matrix[np.asarray(nodes, dtype=np.intp)]


def load_features(path, graph: KnowledgeGraph) -> FeatureTable:
    """Read a whitespace-separated feature file.

    The first line is the dimension ``k`` (a word2vec-style ``count k``
    header is also accepted). Each following line is a node name and ``k``
    numbers. Rows for nodes missing from ``graph`` are counted in
    ``skipped_rows``, not stored.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ParseError("feature file is empty", path, 1)
        head = header.split()
        try:
            dim = int(head[-1]) if len(head) in (1, 2) else None
        except ValueError:
            dim = None
        if dim is None or dim < 1:
            raise ParseError(f"bad header {header.strip()!r}; expected the feature dimension", path, 1)
        matrix = np.zeros((graph.node_count, dim))
        present = np.zeros(graph.node_count, dtype=bool)
        skipped = 0
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ParseError(f"expected name and {dim} values, got {len(parts) - 1} values", path, lineno)
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise ParseError(f"non-numeric value: {exc}", path, lineno) from None
            if not np.all(np.isfinite(vec)):
                raise ParseError("non-finite value", path, lineno)
            node = graph.find_node(parts[0])
            if node is None:
                skipped += 1
                continue
            matrix[node] = vec
            present[node] = True
    if skipped:
        logger.info("%s: skipped %d rows naming nodes not in the graph", path, skipped)
    return FeatureTable(dim, matrix, present, skipped)


# ---------------------------------------------------------------------------
# Vocabulary linking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntityVocabulary:
    """Dataset entity classes and relations, with each class tied to a graph node."""

    classes: tuple[str, ...]
    relations: tuple[str, ...]
    class_to_node: tuple[int, ...]
    _class_index: dict = field(init=False, repr=False, compare=False)
    _relation_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class names in vocabulary")
        if len(set(self.relations)) != len(self.relations):
            raise ValueError("duplicate relation names in vocabulary")
        if len(self.class_to_node) != len(self.classes):
            raise ValueError("class_to_node must have one entry per class")
        object.__setattr__(self, "_class_index", {c: i for i, c in enumerate(self.classes)})
        object.__setattr__(self, "_relation_index", {r: i for i, r in enumerate(self.relations)})

    def class_index(self, name: str) -> int:
        try:
            return self._class_index[name]
        except KeyError:
            raise LinkingError([name]) from None

    def relation_index(self, name: str) -> int:
        try:
            return self._relation_index[name]
        except KeyError:
            raise LinkingError([name]) from None

    def has_class(self, name: str) -> bool:
        return name in self._class_index

    def has_relation(self, name: str) -> bool:
        return name in self._relation_index

    def node_of(self, class_idx: int) -> int:
        return self.class_to_node[class_idx]


def link_classes(
    class_names: Sequence[str],
    graph: KnowledgeGraph,
    normalizer: NameNormalizer = normalize_name,
    relations: Sequence[str] = (),
) -> EntityVocabulary:
    """Resolve every class name to a node via ``normalizer``.

    Raises :class:`LinkingError` listing all names that do not resolve.
    """
    nodes = []
    missing = []
    for name in class_names:
        node = graph.find_node(normalizer(name))
        if node is None:
            missing.append(name)
        nodes.append(node)
    if missing:
        raise LinkingError(missing)
    return EntityVocabulary(tuple(class_names), tuple(relations), tuple(nodes))


def read_name_list(path) -> list[str]:
    """One name per line; blank lines and ``#`` comments skipped."""
    names = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            name = line.strip()
            if name and not name.startswith("#"):
                names.append(name)
    return names


def neighbors(graph: KnowledgeGraph, node: int) -> frozenset[int]:
    return graph.neighbors(node)
