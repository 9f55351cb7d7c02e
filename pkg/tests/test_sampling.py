import logging

import pytest

from fecluster.corpus import Dataset
from fecluster.metric_learning import sample_triplets

from conftest import make_instance


def two_by_two_by_three():
    insts = []
    n = 0
    for frame in ("Giving", "Placing"):
        for fe in ("A", "B"):
            for _ in range(3):
                insts.append(make_instance(n, frame=frame, fe=fe, dim=6))
                n += 1
    return Dataset.from_instances(insts)


def lookup(ds):
    return {i.instance_id: i for i in ds.instances}


def test_one_triplet_per_anchor():
    ds = two_by_two_by_three()
    for mode in ("cross", "intra"):
        assert len(sample_triplets(ds, mode, epoch=0, seed=1)) == 12


def test_intra_negatives_share_frame_differ_fe():
    ds = two_by_two_by_three()
    by_id = lookup(ds)
    for t in sample_triplets(ds, "intra", epoch=2, seed=5):
        a, p, n = by_id[t.anchor_id], by_id[t.positive_id], by_id[t.negative_id]
        assert a.fe_key == p.fe_key and t.anchor_id != t.positive_id
        assert n.frame == a.frame and n.fe_label != a.fe_label


def test_cross_negatives_any_other_fe():
    ds = two_by_two_by_three()
    by_id = lookup(ds)
    seen_other_frame = False
    for epoch in range(5):
        for t in sample_triplets(ds, "cross", epoch=epoch, seed=5):
            a, n = by_id[t.anchor_id], by_id[t.negative_id]
            assert n.fe_key != a.fe_key
            seen_other_frame |= n.frame != a.frame
    assert seen_other_frame


def test_deterministic_given_seed_and_epoch():
    ds = two_by_two_by_three()
    a = sample_triplets(ds, "cross", epoch=3, seed=9)
    b = sample_triplets(ds, "cross", epoch=3, seed=9)
    assert a == b
    c = sample_triplets(ds, "cross", epoch=4, seed=9)
    assert a != c


def test_single_fe_frame_skipped_in_intra(caplog):
    insts = [make_instance(i, frame="Solo", fe="Only", dim=6) for i in range(3)]
    insts += [make_instance(10 + i, frame="Duo", fe=fe, dim=6)
              for i, fe in enumerate(("A", "A", "B", "B"))]
    ds = Dataset.from_instances(insts)
    with caplog.at_level(logging.WARNING):
        triplets = sample_triplets(ds, "intra", epoch=0, seed=0)
    anchors = {t.anchor_id for t in triplets}
    assert all(not a.startswith("i0") or a == "i0" for a in anchors)
    assert not any(ds.instances[i].frame == "Solo"
                   for i, inst in enumerate(ds.instances)
                   if inst.instance_id in anchors)
    assert "skipped 3" in caplog.text


def test_singleton_group_skipped():
    insts = [make_instance(0, frame="F", fe="A", dim=6)]
    insts += [make_instance(1 + i, frame="F", fe="B", dim=6) for i in range(2)]
    ds = Dataset.from_instances(insts)
    triplets = sample_triplets(ds, "intra", epoch=0, seed=0)
    assert {t.anchor_id for t in triplets} == {"i1", "i2"}


def test_bad_mode():
    ds = two_by_two_by_three()
    with pytest.raises(ValueError):
        sample_triplets(ds, "global", epoch=0, seed=0)
