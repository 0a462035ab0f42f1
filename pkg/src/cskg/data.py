"""Scene triplet datasets, zero-shot flags and dataset manipulations."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import LinkingError, ParseError
from .graph import EntityVocabulary

SPLITS = ("train", "test")


class Triplet(NamedTuple):
    """Class/relation indices into an :class:`EntityVocabulary`."""

    subject: int
    relation: int
    object: int


@dataclass(frozen=True)
class Scene:
    scene_id: str
    split: str
    triplets: tuple[Triplet, ...]


@dataclass(frozen=True)
class TripletDataset:
    vocab: EntityVocabulary
    scenes: tuple[Scene, ...]

    def __post_init__(self):
        nc, nr = len(self.vocab.classes), len(self.vocab.relations)
        ids = set()
        for s in self.scenes:
            if s.split not in SPLITS:
                raise ValueError(f"scene {s.scene_id!r}: split must be train or test, got {s.split!r}")
            if s.scene_id in ids:
                raise ValueError(f"duplicate scene id {s.scene_id!r}")
            ids.add(s.scene_id)
            if len(set(s.triplets)) != len(s.triplets):
                raise ValueError(f"scene {s.scene_id!r} has duplicate triplets")
            for t in s.triplets:
                if not (0 <= t.subject < nc and 0 <= t.object < nc and 0 <= t.relation < nr):
                    raise LinkingError([f"scene {s.scene_id!r}: triplet {tuple(t)} outside the vocabulary"])

    def split_scenes(self, split: str | None) -> list[Scene]:
        return [s for s in self.scenes if split is None or s.split == split]

    @property
    def train(self) -> list[Scene]:
        return self.split_scenes("train")

    @property
    def test(self) -> list[Scene]:
        return self.split_scenes("test")

    def iter_triplets(self, split: str | None = None) -> Iterator[Triplet]:
        for s in self.scenes:
            if split is None or s.split == split:
                yield from s.triplets

    def triplet_count(self, split: str | None = None) -> int:
        return sum(1 for _ in self.iter_triplets(split))

    def names(self, t: Triplet) -> tuple[str, str, str]:
        v = self.vocab
        return v.classes[t.subject], v.relations[t.relation], v.classes[t.object]

    def to_tsv(self) -> str:
        lines = []
        for s in self.scenes:
            for t in s.triplets:
                subj, rel, obj = self.names(t)
                lines.append(f"{s.scene_id}\t{subj}\t{rel}\t{obj}\t{s.split}\n")
        return "".join(lines)


def dataset_from_records(vocab: EntityVocabulary, records: Iterable[tuple[str, str, str, str, str]]) -> TripletDataset:
    """Build a dataset from ``(scene_id, subject, relation, object, split)`` name records.

    Scenes keep first-appearance order; repeated triplets in a scene are dropped.
    """
    order: list[str] = []
    splits: dict[str, str] = {}
    trips: dict[str, dict[Triplet, None]] = {}
    for scene_id, subj, rel, obj, split in records:
        t = Triplet(vocab.class_index(subj), vocab.relation_index(rel), vocab.class_index(obj))
        if scene_id not in splits:
            order.append(scene_id)
            splits[scene_id] = split
            trips[scene_id] = {}
        elif splits[scene_id] != split:
            raise ValueError(f"scene {scene_id!r} appears in both splits")
        trips[scene_id][t] = None
    return TripletDataset(vocab, tuple(Scene(sid, splits[sid], tuple(trips[sid])) for sid in order))


def load_triplets(path, vocab: EntityVocabulary) -> TripletDataset:
    """Read ``scene_id<TAB>subject<TAB>relation<TAB>object<TAB>split`` lines."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ParseError(f"expected 5 tab-separated columns, got {len(cols)}", path, lineno)
            scene_id, subj, rel, obj, split = (c.strip() for c in cols)
            if split not in SPLITS:
                raise ParseError(f"split must be 'train' or 'test', got {split!r}", path, lineno)
            for kind, name, ok in (("class", subj, vocab.has_class(subj)), ("relation", rel, vocab.has_relation(rel)),
                                   ("class", obj, vocab.has_class(obj))):
                if not ok:
                    raise ParseError(f"unknown {kind} {name!r}", path, lineno)
            records.append((scene_id, subj, rel, obj, split))
    try:
        return dataset_from_records(vocab, records)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


# ---------------------------------------------------------------------------
# Zero-shot bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroShotIndex:
    """Triplet combinations seen in training; a test triplet outside them is zero-shot."""

    seen: frozenset[Triplet]
    flags: tuple[tuple[bool, ...], ...] = field(default=())  # per test scene, per triplet

    def is_zero_shot(self, t: Triplet) -> bool:
        return t not in self.seen


def build_zero_shot_index(data: TripletDataset) -> ZeroShotIndex:
    seen = frozenset(data.iter_triplets("train"))
    if not seen:
        raise ValueError("training split is empty")
    flags = tuple(tuple(t not in seen for t in s.triplets) for s in data.test)
    return ZeroShotIndex(seen, flags)


def relation_frequencies(data: TripletDataset, split: str | None = "train") -> Counter:
    return Counter(t.relation for t in data.iter_triplets(split))


def common_relations(data: TripletDataset, n: int | None = None) -> list[int]:
    """Relations by descending training frequency (ties by index); first ``n`` if given."""
    freq = relation_frequencies(data)
    ranked = sorted(freq, key=lambda r: (-freq[r], r))
    return ranked if n is None else ranked[:n]


def amplify_zero_shot(data: TripletDataset, tail_count: int, target_fraction: float) -> TripletDataset:
    """Drop training scenes until the ``tail_count`` rarest relations are thinned out.

    Training scenes are visited in scene-id order; a scene is removed when it
    contains a tail relation whose count is still above ``target_fraction``
    of its original training count. Test scenes are untouched.
    """
    n_rel = len(data.vocab.relations)
    if not 0 < target_fraction < 1:
        raise ValueError("target_fraction must lie strictly between 0 and 1")
    if not 0 < tail_count < n_rel:
        raise ValueError(f"tail_count must be in 1..{n_rel - 1}")
    freq = relation_frequencies(data)
    # rarest relations among those present in training
    tail = sorted(freq, key=lambda r: (freq[r], r))[:tail_count]
    limit = {r: target_fraction * freq[r] for r in tail}
    counts = dict(freq)
    removed: set[str] = set()
    for scene in sorted(data.train, key=lambda s: s.scene_id):
        if any(r in limit and counts[r] > limit[r] for r in {t.relation for t in scene.triplets}):
            removed.add(scene.scene_id)
            for t in scene.triplets:
                counts[t.relation] -= 1
    return TripletDataset(data.vocab, tuple(s for s in data.scenes if s.scene_id not in removed))


def filter_test_common_relations(data: TripletDataset, index: ZeroShotIndex,
                                 relations_to_remove: Sequence[int]) -> TripletDataset:
    """Remove zero-shot test triplets whose relation is listed; test scenes left empty are dropped."""
    drop = set(relations_to_remove)
    for r in drop:
        if not 0 <= r < len(data.vocab.relations):
            raise ValueError(f"invalid relation id {r}")
    if not drop:
        return data
    scenes = []
    for s in data.scenes:
        if s.split == "test":
            kept = tuple(t for t in s.triplets if not (t.relation in drop and index.is_zero_shot(t)))
            if not kept:
                continue
            s = Scene(s.scene_id, s.split, kept)
        scenes.append(s)
    return TripletDataset(data.vocab, tuple(scenes))
