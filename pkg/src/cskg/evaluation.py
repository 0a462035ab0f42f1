"""Recall@K on zero-shot test triplets, with and without the graph constraint.

Setting: relation classification. For each test scene the candidate pairs
are the distinct ordered (subject, object) class pairs of its ground-truth
triplets. Every (pair, relation) is a candidate, scored by the model.
With the graph constraint only each pair's best relation stays a candidate.
Candidates are ranked by score, ties by pair position then relation index,
and a ground-truth triplet counts as recalled at K if it is in the top K.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import TripletDataset, ZeroShotIndex

DEFAULT_KS = (20, 50, 100)


def _score_matrix(model, pairs) -> np.ndarray:
    if hasattr(model, "score_pairs"):
        return np.asarray(model.score_pairs(pairs), dtype=np.float64)
    return np.asarray([model(a, b) for a, b in pairs], dtype=np.float64)


def candidate_ranks(scores: np.ndarray, constrained: bool) -> dict[tuple[int, int], int]:
    """0-based rank of every (pair index, relation) candidate that survives the constraint."""
    n_pairs, n_rel = scores.shape
    if constrained:
        best = np.argmax(scores, axis=1)
        cands = [(p, int(best[p])) for p in range(n_pairs)]
    else:
        cands = [(p, r) for p in range(n_pairs) for r in range(n_rel)]
    cands.sort(key=lambda c: (-scores[c[0], c[1]], c[0], c[1]))
    return {c: i for i, c in enumerate(cands)}


@dataclass
class RecallReport:
    ks: tuple[int, ...]
    zR: dict[int, float]
    ng_zR: dict[int, float]
    nonzero_R: dict[int, float]
    ng_nonzero_R: dict[int, float]
    R: dict[int, float]
    ng_R: dict[int, float]
    per_relation: dict[int, dict[str, float]]
    ng_per_relation: dict[int, dict[str, float]]
    mean_zR: dict[int, float]
    zR_per_scene: dict[int, float]
    n_zero_shot: int
    n_nonzero: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def keyed(d):
            return {str(k): v for k, v in d.items()}

        return {
            "ks": list(self.ks),
            "zR": keyed(self.zR),
            "ng_zR": keyed(self.ng_zR),
            "nonzero_R": keyed(self.nonzero_R),
            "ng_nonzero_R": keyed(self.ng_nonzero_R),
            "R": keyed(self.R),
            "ng_R": keyed(self.ng_R),
            "per_relation": keyed(self.per_relation),
            "ng_per_relation": keyed(self.ng_per_relation),
            "mean_zR": keyed(self.mean_zR),
            "zR_per_scene": keyed(self.zR_per_scene),
            "n_zero_shot": self.n_zero_shot,
            "n_nonzero": self.n_nonzero,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def summary(self) -> str:
        cols = [f"zR@{k}={self.zR[k]:.4f} ng-zR@{k}={self.ng_zR[k]:.4f}" for k in self.ks]
        return f"zero-shot={self.n_zero_shot} non-zero-shot={self.n_nonzero}  " + "  ".join(cols)


def _ratio(hit: int, total: int) -> float:
    return hit / total if total else 0.0


def evaluate(model, data: TripletDataset, index: ZeroShotIndex, ks: Sequence[int] = DEFAULT_KS) -> RecallReport:
    """Recall report over the test split.

    ``model`` is a :class:`~cskg.predictor.RelationPredictor` or any object
    with ``score_pairs(pairs)`` or ``__call__(a, b)`` returning relation scores.
    """
    ks = tuple(int(k) for k in ks)
    if not ks or any(k <= 0 for k in ks):
        raise ValueError("every K must be a positive integer")
    test = data.test
    if not test:
        raise ValueError("test split is empty")
    rel_names = data.vocab.relations

    hits = {(v, z): defaultdict(int) for v in ("gc", "ng") for z in (True, False)}
    totals = {True: 0, False: 0}
    rel_hits = {v: defaultdict(lambda: defaultdict(int)) for v in ("gc", "ng")}
    rel_totals: dict[int, int] = defaultdict(int)
    scene_recalls: dict[int, list[float]] = defaultdict(list)

    for scene in test:
        pairs = list(dict.fromkeys((t.subject, t.object) for t in scene.triplets))
        pos = {p: i for i, p in enumerate(pairs)}
        scores = _score_matrix(model, pairs)
        ranks = {"gc": candidate_ranks(scores, True), "ng": candidate_ranks(scores, False)}
        scene_z = 0
        scene_hit = defaultdict(int)
        for t in scene.triplets:
            z = index.is_zero_shot(t)
            totals[z] += 1
            key = (pos[(t.subject, t.object)], t.relation)
            if z:
                rel_totals[t.relation] += 1
                scene_z += 1
            for v in ("gc", "ng"):
                rank = ranks[v].get(key)
                for k in ks:
                    if rank is not None and rank < k:
                        hits[(v, z)][k] += 1
                        if z:
                            rel_hits[v][k][t.relation] += 1
                            if v == "gc":
                                scene_hit[k] += 1
        if scene_z:
            for k in ks:
                scene_recalls[k].append(scene_hit[k] / scene_z)

    nz, nn = totals[True], totals[False]
    per_rel = {v: {k: {rel_names[r]: _ratio(rel_hits[v][k][r], n) for r, n in sorted(rel_totals.items())}
                   for k in ks} for v in ("gc", "ng")}
    return RecallReport(
        ks=ks,
        zR={k: _ratio(hits[("gc", True)][k], nz) for k in ks},
        ng_zR={k: _ratio(hits[("ng", True)][k], nz) for k in ks},
        nonzero_R={k: _ratio(hits[("gc", False)][k], nn) for k in ks},
        ng_nonzero_R={k: _ratio(hits[("ng", False)][k], nn) for k in ks},
        R={k: _ratio(hits[("gc", True)][k] + hits[("gc", False)][k], nz + nn) for k in ks},
        ng_R={k: _ratio(hits[("ng", True)][k] + hits[("ng", False)][k], nz + nn) for k in ks},
        per_relation=per_rel["gc"],
        ng_per_relation=per_rel["ng"],
        mean_zR={k: float(np.mean(list(per_rel["gc"][k].values()))) if rel_totals else 0.0 for k in ks},
        zR_per_scene={k: float(np.mean(scene_recalls[k])) if scene_recalls[k] else 0.0 for k in ks},
        n_zero_shot=nz,
        n_nonzero=nn,
    )
