"""Knowledge embeddings for an entity-class pair.

Three integrators turn a node pair ``(a, b)`` into a fixed-size vector:

* ``neighbor``: relu(MLP([mean neighbor features of a ; of b])).
* ``path``: for each hop count l = 1..L, message passing over the path graph
  G_l (states start at the node features, l rounds), then global sort
  pooling; the L pooled vectors are concatenated.
* ``fused``: as ``path`` but each member state starts at the element-wise
  mean of its own features and its neighbor-averaged features.

Each integrator has a forward pass on precomputed inputs and a matching
backward pass returning gradients for its MLP, so they can be trained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GraphError
from .graph import FeatureTable, KnowledgeGraph
from .midpaths import DEFAULT_HOPS, DEFAULT_PATH_CAP, MAX_HOPS
from .nn import Mlp, _check_input, _forward, mlp_backward, relu
from .pathgraph import PathGraph, build_all_hops
from .similarity import neighbor_embedding

MODES = ("neighbor", "path", "fused")


@dataclass(frozen=True)
class IntegratorConfig:
    mode: str = "neighbor"
    feature_dim: int = 1
    hops: int = DEFAULT_HOPS
    sort_pool_k: int = 5
    path_cap: int = DEFAULT_PATH_CAP

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.hops <= MAX_HOPS:
            raise ValueError(f"hops must be in 1..{MAX_HOPS}")
        if self.sort_pool_k < 1:
            raise ValueError("sort_pool_k must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.path_cap < 1:
            raise ValueError("path_cap must be >= 1")

    @property
    def output_dim(self) -> int:
        """Embedding size for the path and fused modes (L*K*k)."""
        return self.hops * self.sort_pool_k * self.feature_dim


# ---------------------------------------------------------------------------
# Neighbor integrator
# ---------------------------------------------------------------------------


def neighbor_input(graph: KnowledgeGraph, features: FeatureTable, a: int, b: int) -> np.ndarray:
    return np.concatenate([neighbor_embedding(graph, features, a), neighbor_embedding(graph, features, b)])


def neighbor_forward(params: Mlp, x) -> np.ndarray:
    return relu(_forward(params, _check_input(params, x))[0])


def neighbor_backward(params: Mlp, x, upstream) -> list[np.ndarray]:
    x = _check_input(params, x)
    z = _forward(params, x)[0]
    grads, _ = mlp_backward(params, x, np.asarray(upstream) * (z > 0))
    return grads


def neighbor_integrate(graph: KnowledgeGraph, features: FeatureTable, a: int, b: int, params: Mlp) -> np.ndarray:
    x = neighbor_input(graph, features, a, b)
    if params.input_dim != x.size:
        raise ValueError(f"MLP expects input size {params.input_dim}, neighbor input has {x.size}")
    return neighbor_forward(params, x)


# ---------------------------------------------------------------------------
# Message passing and pooling
# ---------------------------------------------------------------------------


def _propagate(adj: np.ndarray, init: np.ndarray, edge_mlp: Mlp, iterations: int) -> list[np.ndarray]:
    """States S_0..S_t with S_t = S_{t-1} + A @ MLP(S_{t-1})."""
    states = [init]
    s = init
    for _ in range(iterations):
        if adj.any():
            s = s + adj @ _forward(edge_mlp, s)[0]
        states.append(s)
    return states


def _propagate_backward(adj, states, edge_mlp: Mlp, upstream) -> tuple[list[np.ndarray], np.ndarray]:
    grads = [np.zeros_like(p) for p in edge_mlp.parameters()]
    g = upstream
    for s_prev in reversed(states[:-1]):
        if not adj.any():
            continue
        msg_grad = adj.T @ g
        pg, dx = mlp_backward(edge_mlp, s_prev, msg_grad)
        for acc, d in zip(grads, pg):
            acc += d
        g = g + dx
    return grads, g


def message_pass(g: PathGraph, init, edge_mlp: Mlp, iterations: int) -> np.ndarray:
    """Run ``iterations`` synchronous rounds; returns the final member states (n x k).

    Every member adds the edge-MLP output of each path-graph neighbor's
    previous state to its own previous state.
    """
    if iterations != g.hop_count:
        raise GraphError(f"iterations ({iterations}) must equal the hop count ({g.hop_count})")
    init = np.asarray(init, dtype=np.float64)
    if init.ndim != 2 or init.shape[0] != g.size:
        raise ValueError(f"need one initial state per member ({g.size}), got shape {init.shape}")
    if init.shape[1] != edge_mlp.input_dim or edge_mlp.output_dim != edge_mlp.input_dim:
        raise ValueError("edge MLP must map the state size onto itself")
    return _propagate(g.adjacency_matrix(), init, edge_mlp, iterations)[-1]


def sort_pool_order(T: np.ndarray, K: int) -> np.ndarray:
    """Indices of the rows kept by :func:`sort_pool`, in output order."""
    n = T.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    # lexsort: last key is primary -> descending last channel, then ascending index
    order = np.lexsort((np.arange(n), -T[:, -1]))
    return order[:K]


def sort_pool(T, K: int) -> np.ndarray:
    """Top-K rows by the last channel (descending, ties by row index), zero-padded and flattened."""
    T = np.asarray(T, dtype=np.float64)
    if T.ndim != 2 or T.shape[1] < 1:
        raise ValueError("sort_pool expects an (n, k) matrix with k >= 1")
    if K < 1:
        raise ValueError("K must be positive")
    out = np.zeros((K, T.shape[1]))
    order = sort_pool_order(T, K)
    out[:len(order)] = T[order]
    return out.ravel()


# ---------------------------------------------------------------------------
# Path / fused integrators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HopInput:
    """Precomputed per-hop input: adjacency over members and their initial states."""

    adjacency: np.ndarray
    init: np.ndarray
    hops: int


def path_graphs(graph: KnowledgeGraph, a: int, b: int, config: IntegratorConfig) -> list[PathGraph]:
    if a == b:
        # a class paired with itself has no simple paths
        return [PathGraph(l, (a, a), ()) for l in range(1, config.hops + 1)]
    return build_all_hops(graph, a, b, config.hops, config.path_cap)


def member_init(graph: KnowledgeGraph, features: FeatureTable, members, fused: bool) -> np.ndarray:
    rows = features.rows(members)
    if not fused:
        return rows.copy()
    nb = np.stack([neighbor_embedding(graph, features, m) for m in members])
    return (rows + nb) / 2.0


def path_inputs(graph: KnowledgeGraph, features: FeatureTable, a: int, b: int, config: IntegratorConfig,
                fused: bool | None = None) -> list[HopInput]:
    if fused is None:
        fused = config.mode == "fused"
    if features.dim != config.feature_dim:
        raise ValueError(f"feature table has dim {features.dim}, config says {config.feature_dim}")
    return [HopInput(g.adjacency_matrix(), member_init(graph, features, g.members, fused), g.hop_count)
            for g in path_graphs(graph, a, b, config)]


def path_forward(inputs: list[HopInput], edge_mlp: Mlp, K: int):
    """Returns (embedding, cache) for :func:`path_backward`."""
    pooled = []
    cache = []
    for hop in inputs:
        states = _propagate(hop.adjacency, hop.init, edge_mlp, hop.hops)
        order = sort_pool_order(states[-1], K)
        out = np.zeros((K, states[-1].shape[1]))
        out[:len(order)] = states[-1][order]
        pooled.append(out.ravel())
        cache.append((hop, states, order))
    return np.concatenate(pooled), cache


def path_backward(cache, edge_mlp: Mlp, upstream, K: int) -> list[np.ndarray]:
    grads = [np.zeros_like(p) for p in edge_mlp.parameters()]
    upstream = np.asarray(upstream, dtype=np.float64)
    pos = 0
    for hop, states, order in cache:
        k = states[-1].shape[1]
        block = upstream[pos:pos + K * k].reshape(K, k)
        pos += K * k
        d_final = np.zeros_like(states[-1])
        d_final[order] = block[:len(order)]
        pg, _ = _propagate_backward(hop.adjacency, states, edge_mlp, d_final)
        for acc, d in zip(grads, pg):
            acc += d
    return grads


def path_integrate(graph: KnowledgeGraph, features: FeatureTable, a: int, b: int, config: IntegratorConfig,
                   params: Mlp) -> np.ndarray:
    """Concatenated sort-pooled message-passing embeddings for hops 1..L (length L*K*k)."""
    inputs = path_inputs(graph, features, a, b, config, fused=False)
    return path_forward(inputs, params, config.sort_pool_k)[0]


def fused_integrate(graph: KnowledgeGraph, features: FeatureTable, a: int, b: int, config: IntegratorConfig,
                    params: Mlp) -> np.ndarray:
    inputs = path_inputs(graph, features, a, b, config, fused=True)
    return path_forward(inputs, params, config.sort_pool_k)[0]


def integrate(graph, features, a, b, config: IntegratorConfig, params: Mlp) -> np.ndarray:
    if config.mode == "neighbor":
        return neighbor_integrate(graph, features, a, b, params)
    if config.mode == "path":
        return path_integrate(graph, features, a, b, config, params)
    return fused_integrate(graph, features, a, b, config, params)
