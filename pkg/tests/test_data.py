import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cskg.data import (Scene, Triplet, TripletDataset, amplify_zero_shot, build_zero_shot_index, common_relations,
                       dataset_from_records, filter_test_common_relations, load_triplets, relation_frequencies)
from cskg.errors import LinkingError, ParseError
from cskg.graph import EntityVocabulary

VOCAB = EntityVocabulary(("man", "horse", "hat", "street"), ("on", "wearing", "riding", "near"), (0, 1, 2, 3))


def ds(*scenes):
    return TripletDataset(VOCAB, tuple(Scene(sid, split, tuple(Triplet(*t) for t in ts)) for sid, split, ts in scenes))


def test_load_triplets(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("s1\tman\triding\thorse\ttrain\ns1\tman\twearing\that\ttrain\n"
                 "s1\tman\triding\thorse\ttrain\ns2\thorse\ton\tstreet\ttest\n")
    d = load_triplets(p, VOCAB)
    assert [s.scene_id for s in d.scenes] == ["s1", "s2"]
    assert d.train[0].triplets == (Triplet(0, 2, 1), Triplet(0, 1, 2))
    assert d.triplet_count("test") == 1
    assert d.names(Triplet(0, 2, 1)) == ("man", "riding", "horse")
    assert "s2\thorse\ton\tstreet\ttest" in d.to_tsv()


@pytest.mark.parametrize("line, fragment", [
    ("s1\tman\tflying\thorse\ttrain\n", "flying"),
    ("s1\tunicorn\ton\thorse\ttrain\n", "unicorn"),
    ("s1\tman\ton\thorse\n", "5"),
    ("s1\tman\ton\thorse\tvalid\n", "valid"),
])
def test_load_triplets_errors(tmp_path, line, fragment):
    p = tmp_path / "t.tsv"
    p.write_text("s0\tman\ton\tstreet\ttrain\n" + line)
    with pytest.raises(ParseError) as exc:
        load_triplets(p, VOCAB)
    assert exc.value.line == 2 and fragment in str(exc.value)


def test_scene_in_both_splits_rejected():
    with pytest.raises(ValueError):
        dataset_from_records(VOCAB, [("s", "man", "on", "horse", "train"), ("s", "man", "on", "hat", "test")])


def test_dataset_validation():
    with pytest.raises(ValueError):
        ds(("a", "dev", [(0, 0, 1)]))
    with pytest.raises(ValueError):
        ds(("a", "train", [(0, 0, 1)]), ("a", "test", [(0, 0, 2)]))
    with pytest.raises(LinkingError):
        ds(("a", "train", [(0, 9, 1)]))


def test_zero_shot_index():
    d = ds(("a", "train", [(0, 2, 1), (0, 1, 2)]), ("b", "test", [(0, 2, 1), (1, 3, 0)]))
    idx = build_zero_shot_index(d)
    assert idx.flags == ((False, True),)
    assert idx.is_zero_shot(Triplet(1, 3, 0)) and not idx.is_zero_shot(Triplet(0, 2, 1))
    with pytest.raises(ValueError):
        build_zero_shot_index(ds(("b", "test", [(0, 2, 1)])))


def test_relation_frequencies_and_common():
    d = ds(("a", "train", [(0, 0, 1), (0, 0, 2), (1, 3, 0)]), ("b", "train", [(2, 0, 3), (3, 3, 2)]),
           ("c", "test", [(0, 1, 1)]))
    assert relation_frequencies(d) == {0: 3, 3: 2}
    assert common_relations(d) == [0, 3]
    assert common_relations(d, 1) == [0]


def test_amplify_removes_scenes_in_order():
    # relation 3 is rare (4 scenes), relation 0 common
    scenes = [(f"s{i}", "train", [(0, 0, 1), (1, 3, 2)] if i < 4 else [(0, 0, 1)]) for i in range(8)]
    scenes.append(("t", "test", [(0, 3, 1)]))
    d = ds(*scenes)
    out = amplify_zero_shot(d, tail_count=1, target_fraction=0.5)
    assert [s.scene_id for s in out.train] == ["s2", "s3", "s4", "s5", "s6", "s7"]
    assert relation_frequencies(out)[3] == 2
    assert out.test == d.test


def test_amplify_argument_checks():
    d = ds(("a", "train", [(0, 0, 1)]))
    for frac in (0.0, 1.0):
        with pytest.raises(ValueError):
            amplify_zero_shot(d, 1, frac)
    for tail in (0, 4):
        with pytest.raises(ValueError):
            amplify_zero_shot(d, tail, 0.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1,
                         max_size=4, unique=True), min_size=2, max_size=12),
       st.integers(1, 3), st.floats(0.05, 0.95))
def test_amplify_properties(scene_trips, tail, frac):
    d = ds(*[(f"s{i:02d}", "train", ts) for i, ts in enumerate(scene_trips)])
    out = amplify_zero_shot(d, tail, frac)
    kept = {s.scene_id for s in out.train}
    assert kept <= {s.scene_id for s in d.train}
    before, after = relation_frequencies(d), relation_frequencies(out)
    tail_rels = sorted(before, key=lambda r: (before[r], r))[:tail]
    for r in tail_rels:
        assert after[r] <= frac * before[r]
    for s in d.train:
        if s.scene_id not in kept:
            assert any(t.relation in tail_rels for t in s.triplets)


def test_filter_common_relations():
    d = ds(("a", "train", [(0, 0, 1)]),
           ("b", "test", [(0, 0, 1), (0, 0, 2)]),
           ("c", "test", [(1, 0, 3)]),
           ("e", "test", [(1, 3, 3)]))
    idx = build_zero_shot_index(d)
    out = filter_test_common_relations(d, idx, [0])
    # the seen triplet (0, 0, 1) survives; scene c becomes empty and is dropped
    assert [(s.scene_id, s.triplets) for s in out.test] == [("b", (Triplet(0, 0, 1),)), ("e", (Triplet(1, 3, 3),))]
    assert filter_test_common_relations(d, idx, []) is d
    with pytest.raises(ValueError):
        filter_test_common_relations(d, idx, [9])
