"""Small dense-network toolkit: affine layers, relu, softmax cross-entropy, SGD.

Everything is float64 numpy. Inputs may be a single vector ``(in,)`` or a
batch ``(B, in)``; parameter gradients from a batch are summed over rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import CheckpointError, TrainingError
from .fileio import atomic_write_text

ACTIVATIONS = ("identity", "relu")

CHECKPOINT_FORMAT = "cskg-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"bad layer shapes {self.weight.shape}, {self.bias.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


class Mlp:
    """A chain of :class:`DenseLayer` objects."""

    def __init__(self, layers: Sequence[DenseLayer]):
        layers = list(layers)
        if not layers:
            raise ValueError("an Mlp needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    @property
    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def describe(self) -> list:
        """Architecture descriptor: ``[[in, out, activation], ...]``."""
        return [[l.in_dim, l.out_dim, l.activation] for l in self.layers]

    def copy(self) -> "Mlp":
        return Mlp([DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __call__(self, x):
        return mlp_forward(self, x)

    def __repr__(self):
        dims = [self.input_dim] + [l.out_dim for l in self.layers]
        return f"Mlp({'->'.join(map(str, dims))})"


def relu(x):
    return np.maximum(x, 0.0)


def _check_input(m: Mlp, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (m.input_dim,) or x.ndim > 2:
        raise ValueError(f"expected input of size {m.input_dim}, got shape {x.shape}")
    return x


def _forward(m: Mlp, x: np.ndarray):
    """Forward pass keeping (input, pre-activation) per layer."""
    cache = []
    h = x
    for layer in m.layers:
        z = h @ layer.weight.T + layer.bias
        cache.append((h, z))
        h = relu(z) if layer.activation == "relu" else z
    return h, cache


def mlp_forward(m: Mlp, x) -> np.ndarray:
    x = _check_input(m, x)
    return _forward(m, x)[0]


def mlp_backward(m: Mlp, x, upstream) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients of ``upstream . mlp_forward(m, x)``.

    Returns parameter gradients in :meth:`Mlp.parameters` order and the
    gradient with respect to ``x``.
    """
    x = _check_input(m, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    expected = x.shape[:-1] + (m.output_dim,)
    if upstream.shape != expected:
        raise ValueError(f"upstream shape {upstream.shape} does not match output shape {expected}")
    _, cache = _forward(m, x)
    grads: list[np.ndarray] = [None] * (2 * len(m.layers))  # type: ignore[list-item]
    g = upstream
    for i in range(len(m.layers) - 1, -1, -1):
        layer = m.layers[i]
        h, z = cache[i]
        if layer.activation == "relu":
            g = g * (z > 0)
        if g.ndim == 1:
            grads[2 * i] = np.outer(g, h)
            grads[2 * i + 1] = g.copy()
        else:
            grads[2 * i] = g.T @ h
            grads[2 * i + 1] = g.sum(axis=0)
        g = g @ layer.weight
    return grads, g


def init_mlp(dims: Sequence[int], rng: np.random.Generator, activations: Sequence[str] | None = None) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.

    ``activations`` defaults to relu on every layer except the last.
    """
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    n = len(dims) - 1
    if activations is None:
        activations = ["relu"] * (n - 1) + ["identity"]
    layers = []
    for fan_in, fan_out, act in zip(dims, dims[1:], activations):
        s = 1.0 / np.sqrt(fan_in)
        layers.append(DenseLayer(rng.uniform(-s, s, (fan_out, fan_in)), rng.uniform(-s, s, fan_out), act))
    return Mlp(layers)


def make_mlp(in_dim: int, out_dim: int, rng: np.random.Generator, hidden: int | None = None) -> Mlp:
    """Default network shape: one relu hidden layer (width ``in_dim`` unless given), linear output."""
    return init_mlp([in_dim, hidden or in_dim, out_dim], rng)


def identity_mlp(dim: int) -> Mlp:
    return Mlp([DenseLayer(np.eye(dim), np.zeros(dim))])


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label) -> tuple[float, np.ndarray]:
    """Loss and gradient for a single example, or batch means for 2-D ``logits``."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim == 1:
        if z.size < 1:
            raise ValueError("need at least one logit")
        if not 0 <= int(label) < z.size:
            raise ValueError(f"label {label} out of range for {z.size} classes")
        m = z.max()
        lse = m + np.log(np.exp(z - m).sum())
        grad = softmax(z)
        grad[int(label)] -= 1.0
        return float(lse - z[int(label)]), grad
    labels = np.asarray(label, dtype=np.intp)
    n, c = z.shape
    if labels.shape != (n,) or np.any(labels < 0) or np.any(labels >= c):
        raise ValueError("labels must be a vector of valid class indices")
    m = z.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]
    rows = np.arange(n)
    grad = softmax(z)
    grad[rows, labels] -= 1.0
    return float(np.mean(lse - z[rows, labels])), grad / n


# ---------------------------------------------------------------------------
# Parameters and optimisation
# ---------------------------------------------------------------------------


def flatten(arrays: Sequence[np.ndarray]) -> np.ndarray:
    if not arrays:
        return np.zeros(0)
    return np.concatenate([np.ravel(a) for a in arrays])


def assign(arrays: Sequence[np.ndarray], vector: np.ndarray) -> None:
    """Copy ``vector`` into ``arrays`` in place (inverse of :func:`flatten`)."""
    total = sum(a.size for a in arrays)
    if vector.shape != (total,):
        raise ValueError(f"parameter vector has length {vector.size}, expected {total}")
    pos = 0
    for a in arrays:
        a[...] = vector[pos:pos + a.size].reshape(a.shape)
        pos += a.size


@dataclass(frozen=True)
class TrainState:
    parameters: np.ndarray
    learning_rate: float
    rng_seed: int = 0
    step_count: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be non-negative")


def sgd_step(state: TrainState, gradients) -> TrainState:
    g = np.asarray(gradients, dtype=np.float64)
    if g.shape != state.parameters.shape:
        raise ValueError(f"gradient length {g.size} != parameter length {state.parameters.size}")
    if not np.all(np.isfinite(g)):
        raise TrainingError("non-finite gradient", state.step_count)
    return replace(state, parameters=state.parameters - state.learning_rate * g, step_count=state.step_count + 1)


def step_decay(base_lr: float, step: int, decay_steps: int, decay_rate: float) -> float:
    """``base_lr / decay_rate ** (step // decay_steps)``; ``decay_steps <= 0`` disables decay."""
    if decay_steps <= 0 or decay_rate == 1:
        return base_lr
    return base_lr / decay_rate ** (step // decay_steps)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, descriptor: dict, parameters: np.ndarray) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "descriptor": descriptor,
        "parameters": [float(v) for v in np.ravel(parameters)],
    }
    atomic_write_text(path, json.dumps(doc))


def load_checkpoint(path, expected_descriptor: dict | None = None) -> tuple[dict, np.ndarray]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: not a version {CHECKPOINT_VERSION} checkpoint")
    descriptor = doc["descriptor"]
    if expected_descriptor is not None and descriptor != json.loads(json.dumps(expected_descriptor)):
        raise CheckpointError(f"{path}: architecture descriptor does not match")
    return descriptor, np.asarray(doc["parameters"], dtype=np.float64)
