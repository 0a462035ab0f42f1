"""Relation prediction from knowledge embeddings alone (no visual features).

A :class:`RelationPredictor` embeds a class pair with one of the integrators
and feeds the embedding to a classifier MLP scoring every relation. The
``onehot`` mode replaces the knowledge embedding with one-hot class
indicators; it is the no-knowledge baseline.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import TripletDataset
from .errors import CheckpointError, LinkingError, TrainingError
from .graph import EntityVocabulary, FeatureTable, KnowledgeGraph
from .integrators import (IntegratorConfig, neighbor_backward, neighbor_forward, neighbor_input, path_backward,
                          path_forward, path_inputs)
from .nn import (Mlp, TrainState, assign, flatten, load_checkpoint, make_mlp, mlp_backward, mlp_forward,
                 save_checkpoint, sgd_step, softmax_cross_entropy, step_decay)

logger = logging.getLogger(__name__)

PREDICTOR_MODES = ("neighbor", "path", "fused", "onehot")


@dataclass(frozen=True)
class TrainingConfig:
    seed: int = 0
    learning_rate: float = 0.1
    decay_steps: int = 0
    decay_rate: float = 10.0
    max_steps: int = 2000
    batch_size: int = 32
    target_loss: float | None = None
    clip_norm: float | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.max_steps < 0 or self.batch_size < 1:
            raise ValueError("max_steps must be >= 0 and batch_size >= 1")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")


class RelationPredictor:
    def __init__(self, mode: str, vocab: EntityVocabulary, graph: KnowledgeGraph | None,
                 features: FeatureTable | None, config: IntegratorConfig | None,
                 integrator: Mlp | None, head: Mlp):
        if mode not in PREDICTOR_MODES:
            raise ValueError(f"mode must be one of {PREDICTOR_MODES}")
        if mode != "onehot" and (config is None or integrator is None or graph is None or features is None):
            raise ValueError(f"mode {mode!r} needs a graph, features, config and integrator MLP")
        if config is not None and mode != "onehot" and config.mode != mode:
            raise ValueError("config.mode does not match predictor mode")
        if head.output_dim != len(vocab.relations):
            raise ValueError("head must output one score per relation")
        self.mode = mode
        self.vocab = vocab
        self.graph = graph
        self.features = features
        self.config = config
        self.integrator = integrator
        self.head = head
        self._inputs: dict[tuple[int, int], object] = {}

    # -- construction --------------------------------------------------------

    @classmethod
    def create(cls, mode: str, vocab: EntityVocabulary, graph: KnowledgeGraph | None = None,
               features: FeatureTable | None = None, config: IntegratorConfig | None = None,
               rng: np.random.Generator | None = None, seed: int = 0) -> "RelationPredictor":
        """Randomly initialised predictor. The integrator MLP is drawn before the head."""
        rng = rng if rng is not None else np.random.default_rng(seed)
        n_rel = len(vocab.relations)
        if mode == "onehot":
            in_dim = 2 * len(vocab.classes)
            return cls(mode, vocab, None, None, None, None, make_mlp(in_dim, n_rel, rng))
        if config is None:
            config = IntegratorConfig(mode=mode, feature_dim=features.dim)
        k = config.feature_dim
        if mode == "neighbor":
            integrator = make_mlp(2 * k, 2 * k, rng)
            emb = 2 * k
        else:
            integrator = make_mlp(k, k, rng)
            emb = config.output_dim
        return cls(mode, vocab, graph, features, config, integrator, make_mlp(emb, n_rel, rng))

    def descriptor(self) -> dict:
        return {
            "mode": self.mode,
            "integrator_config": asdict(self.config) if self.config is not None else None,
            "integrator": self.integrator.describe() if self.integrator is not None else None,
            "head": self.head.describe(),
            "classes": list(self.vocab.classes),
            "relations": list(self.vocab.relations),
        }

    def parameters(self) -> list[np.ndarray]:
        own = self.integrator.parameters() if self.integrator is not None else []
        return own + self.head.parameters()

    def get_flat(self) -> np.ndarray:
        return flatten(self.parameters())

    def set_flat(self, vector: np.ndarray) -> None:
        assign(self.parameters(), vector)

    def save(self, path) -> None:
        save_checkpoint(path, self.descriptor(), self.get_flat())

    @classmethod
    def load(cls, path, vocab: EntityVocabulary, graph: KnowledgeGraph | None = None,
             features: FeatureTable | None = None, config: IntegratorConfig | None = None,
             mode: str | None = None) -> "RelationPredictor":
        """Load a checkpoint.

        ``mode`` and ``config``, when given, must match what the checkpoint
        stores; so must the vocabulary.
        """
        descriptor, params = load_checkpoint(path)
        stored_mode = descriptor.get("mode")
        if stored_mode not in PREDICTOR_MODES:
            raise CheckpointError(f"{path}: unknown mode {stored_mode!r}")
        if mode is not None and mode != stored_mode:
            raise CheckpointError(f"{path}: checkpoint mode {stored_mode!r} differs from requested {mode!r}")
        mode = stored_mode
        stored = descriptor.get("integrator_config")
        if mode != "onehot":
            stored_cfg = IntegratorConfig(**stored)
            if config is not None and config != stored_cfg:
                raise CheckpointError(f"{path}: integrator settings differ from the run configuration")
            config = stored_cfg
        model = cls.create(mode, vocab, graph, features, config if mode != "onehot" else None)
        if model.descriptor() != descriptor:
            raise CheckpointError(f"{path}: architecture descriptor does not match")
        if params.size != model.get_flat().size:
            raise CheckpointError(f"{path}: parameter count mismatch")
        model.set_flat(params)
        return model

    # -- forward / backward ----------------------------------------------------

    def _class_index(self, c) -> int:
        if isinstance(c, str):
            return self.vocab.class_index(c)
        c = int(c)
        if not 0 <= c < len(self.vocab.classes):
            raise LinkingError([f"class index {c}"])
        return c

    def pair_input(self, a: int, b: int):
        """Parameter-free input for pair (a, b) of class indices; cached."""
        key = (a, b)
        inp = self._inputs.get(key)
        if inp is None:
            if self.mode == "onehot":
                n = len(self.vocab.classes)
                inp = np.zeros(2 * n)
                inp[a] = 1.0
                inp[n + b] = 1.0
            else:
                na, nb = self.vocab.node_of(a), self.vocab.node_of(b)
                if self.mode == "neighbor":
                    inp = neighbor_input(self.graph, self.features, na, nb)
                else:
                    inp = path_inputs(self.graph, self.features, na, nb, self.config)
            self._inputs[key] = inp
        return inp

    def _embed_batch(self, pairs):
        if self.mode == "onehot":
            return np.stack([self.pair_input(a, b) for a, b in pairs]), None
        if self.mode == "neighbor":
            x = np.stack([self.pair_input(a, b) for a, b in pairs])
            return neighbor_forward(self.integrator, x), x
        K = self.config.sort_pool_k
        outs, caches = zip(*(path_forward(self.pair_input(a, b), self.integrator, K) for a, b in pairs))
        return np.stack(outs), caches

    def _embed_backward(self, cache, d_emb) -> list[np.ndarray]:
        if self.mode == "onehot":
            return []
        if self.mode == "neighbor":
            return neighbor_backward(self.integrator, cache, d_emb)
        K = self.config.sort_pool_k
        grads = [np.zeros_like(p) for p in self.integrator.parameters()]
        for c, d in zip(cache, d_emb):
            for acc, g in zip(grads, path_backward(c, self.integrator, d, K)):
                acc += g
        return grads

    def embed(self, a, b) -> np.ndarray:
        """Knowledge embedding of a class pair (the one-hot input in ``onehot`` mode)."""
        return self._embed_batch([(self._class_index(a), self._class_index(b))])[0][0]

    def score_pairs(self, pairs) -> np.ndarray:
        """Relation scores (rows) for a list of class-index pairs."""
        pairs = [(self._class_index(a), self._class_index(b)) for a, b in pairs]
        if not pairs:
            return np.zeros((0, len(self.vocab.relations)))
        emb, _ = self._embed_batch(pairs)
        return mlp_forward(self.head, emb)

    def score_pair(self, a, b) -> np.ndarray:
        return self.score_pairs([(a, b)])[0]

    def __call__(self, a, b) -> np.ndarray:
        return self.score_pair(a, b)

    def loss_and_grad(self, pairs, labels) -> tuple[float, np.ndarray]:
        """Mean softmax cross-entropy over a batch and its flat parameter gradient."""
        emb, cache = self._embed_batch(pairs)
        logits = mlp_forward(self.head, emb)
        loss, d_logits = softmax_cross_entropy(logits, np.asarray(labels))
        head_grads, d_emb = mlp_backward(self.head, emb, d_logits)
        return loss, flatten(self._embed_backward(cache, d_emb) + head_grads)


def score_pair(model: RelationPredictor, a, b) -> np.ndarray:
    """Unnormalised relation scores for classes ``a`` and ``b`` (names or indices)."""
    return model.score_pair(a, b)


@dataclass
class TrainingResult:
    model: RelationPredictor
    losses: list[float] = field(default_factory=list)
    steps: int = 0


def train_predictor(data: TripletDataset, mode: str, training: TrainingConfig,
                    graph: KnowledgeGraph | None = None, features: FeatureTable | None = None,
                    config: IntegratorConfig | None = None) -> TrainingResult:
    """Fit a predictor on the training triplets with minibatch SGD.

    All randomness (initialisation, then per-epoch shuffles) comes from
    ``training.seed``. Stops after ``max_steps`` or once the batch loss drops
    below ``target_loss``. ``clip_norm`` rescales any gradient whose norm
    exceeds it.
    """
    examples = [((t.subject, t.object), t.relation) for t in data.iter_triplets("train")]
    if not examples:
        raise ValueError("training split is empty")
    rng = np.random.default_rng(training.seed)
    model = RelationPredictor.create(mode, data.vocab, graph, features, config, rng=rng)
    state = TrainState(model.get_flat(), training.learning_rate, training.seed)
    result = TrainingResult(model)
    order = np.arange(0)
    pos = 0
    for step in range(training.max_steps):
        if pos >= len(order):
            order = rng.permutation(len(examples))
            pos = 0
        idx = order[pos:pos + training.batch_size]
        pos += training.batch_size
        pairs = [examples[i][0] for i in idx]
        labels = [examples[i][1] for i in idx]
        loss, grad = model.loss_and_grad(pairs, labels)
        if not math.isfinite(loss):
            raise TrainingError("non-finite loss", step)
        if training.clip_norm is not None:
            norm = float(np.linalg.norm(grad))
            if norm > training.clip_norm:
                grad = grad * (training.clip_norm / norm)
        lr = step_decay(training.learning_rate, step, training.decay_steps, training.decay_rate)
        state = sgd_step(TrainState(state.parameters, lr, state.rng_seed, state.step_count), grad)
        model.set_flat(state.parameters)
        result.losses.append(loss)
        result.steps = state.step_count
        if training.target_loss is not None and loss < training.target_loss:
            logger.info("target loss reached at step %d", step)
            break
    return result
