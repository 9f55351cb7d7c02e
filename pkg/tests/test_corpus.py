import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fecluster.corpus import (
    Dataset,
    Position,
    SynthConfig,
    dataset_stats,
    generate_synthetic,
    load_corpus,
    normalize_embeddings,
    save_corpus,
    split_folds,
)
from fecluster.errors import DataError

from conftest import make_instance


def write_lines(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def record(i, dim=4, **overrides):
    base = {
        "instance_id": f"i{i}",
        "sentence_id": f"s{i}",
        "frame": "Giving",
        "fe_label": "Donor",
        "verb_lemma": "give",
        "position": "before",
        "dep_label": "nsubj",
        "embedding": [float(i), 1.0, 0.0, 0.5][:dim],
    }
    base.update(overrides)
    return base


class TestLoadCorpus:
    def test_three_valid_records(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(i) for i in range(3)])
        ds = load_corpus(path)
        assert len(ds) == 3
        assert ds.embedding_dim == 4
        assert ds.instances[0].position is Position.BEFORE

    def test_dimension_mismatch_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        recs = [record(0), record(1, embedding=[1.0, 2.0, 3.0]), record(2)]
        write_lines(path, recs)
        with pytest.raises(DataError, match="line 2"):
            load_corpus(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0), record(0)])
        with pytest.raises(DataError, match="duplicate instance_id"):
            load_corpus(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        with open(path, "w") as fh:
            fh.write(json.dumps(record(0)) + "\n")
            fh.write("{not json\n")
        with pytest.raises(DataError, match="line 2"):
            load_corpus(path)

    def test_bad_position_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0, position="left")])
        with pytest.raises(DataError, match="position"):
            load_corpus(path)

    def test_unknown_field_warns(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record(0, extra_field=1)])
        with pytest.warns(UserWarning, match="extra_field"):
            ds = load_corpus(path)
        assert len(ds) == 1

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        with pytest.raises(DataError, match="no records"):
            load_corpus(path)

    def test_save_load_save_is_byte_stable(self, tmp_path):
        ds = generate_synthetic(SynthConfig(n_frames=3, fes_per_frame=2,
                                            instances_per_fe=2, dim=5), seed=3)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_corpus(ds, p1)
        save_corpus(load_corpus(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20)
    def test_round_trip_preserves_fields(self, seed, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("rt")
        ds = generate_synthetic(SynthConfig(n_frames=2, fes_per_frame=2,
                                            instances_per_fe=2, dim=4,
                                            noise_scale=0.5), seed=seed)
        path = tmp / "c.jsonl"
        save_corpus(ds, path)
        back = load_corpus(path)
        assert back.ids == ds.ids
        for a, b in zip(ds.instances, back.instances):
            assert (a.frame, a.fe_label, a.position, a.dep_label) == \
                   (b.frame, b.fe_label, b.position, b.dep_label)
            assert np.array_equal(a.embedding, b.embedding)


class TestSplitFolds:
    def test_symmetric_six_frames(self):
        insts = []
        for f in range(6):
            for i in range(10):
                insts.append(make_instance(f * 10 + i, frame=f"F{f}"))
        ds = Dataset.from_instances(insts)
        split = split_folds(ds, 3, seed=0)
        sizes = [len(split.subset(ds, k)) for k in range(3)]
        assert sizes == [20, 20, 20]
        assert all(len(split.frames_in_fold(k)) == 2 for k in range(3))

    def test_greedy_packing_hand_trace(self):
        counts = {"A": 70, "B": 10, "C": 10, "D": 5, "E": 5}
        insts = []
        n = 0
        for frame, c in counts.items():
            for _ in range(c):
                insts.append(make_instance(n, frame=frame))
                n += 1
        ds = Dataset.from_instances(insts)
        split = split_folds(ds, 3, seed=0)
        sizes = sorted(len(split.subset(ds, k)) for k in range(3))
        assert sizes == [15, 15, 70]

    def test_too_few_frames(self):
        ds = Dataset.from_instances([make_instance(0, frame="only")])
        with pytest.raises(DataError):
            split_folds(ds, 3, seed=0)

    @given(n_frames=st.integers(3, 12), seed=st.integers(0, 100))
    @settings(max_examples=25)
    def test_frame_disjoint(self, n_frames, seed):
        rng = np.random.default_rng(seed)
        insts = []
        n = 0
        for f in range(n_frames):
            for _ in range(int(rng.integers(1, 8))):
                insts.append(make_instance(n, frame=f"F{f}"))
                n += 1
        ds = Dataset.from_instances(insts)
        split = split_folds(ds, 3, seed=seed)
        fold_frames = [set(split.frames_in_fold(k)) for k in range(3)]
        assert fold_frames[0] | fold_frames[1] | fold_frames[2] == set(ds.frames())
        assert not (fold_frames[0] & fold_frames[1])
        assert not (fold_frames[0] & fold_frames[2])
        assert not (fold_frames[1] & fold_frames[2])


class TestDatasetStats:
    def test_empty(self):
        ds = Dataset((), 4)
        s = dataset_stats(ds)
        assert (s.n_frames, s.n_fes, s.n_examples, s.n_instances) == (0, 0, 0, 0)

    def test_giving_frame_example_sentences(self):
        # Three annotated sentences, eight bracketed argument spans.
        spans = [
            ("s1", "Theme"), ("s1", "Donor"),
            ("s2", "Donor"), ("s2", "Theme"), ("s2", "Recipient"),
            ("s3", "Donor"), ("s3", "Recipient"), ("s3", "Theme"),
        ]
        insts = [
            make_instance(i, frame="Giving", fe=fe, sentence=sent)
            for i, (sent, fe) in enumerate(spans)
        ]
        s = dataset_stats(Dataset.from_instances(insts))
        assert (s.n_frames, s.n_fes, s.n_examples, s.n_instances) == (1, 3, 3, 8)


class TestGenerateSynthetic:
    def test_deterministic(self):
        cfg = SynthConfig(n_frames=3, fes_per_frame=2, instances_per_fe=3, dim=8)
        a = generate_synthetic(cfg, seed=11)
        b = generate_synthetic(cfg, seed=11)
        assert a.ids == b.ids
        assert np.array_equal(a.matrix(), b.matrix())
        assert [i.position for i in a.instances] == [i.position for i in b.instances]

    def test_stats_match_config(self):
        cfg = SynthConfig(n_frames=4, fes_per_frame=3, instances_per_fe=5, dim=8)
        s = dataset_stats(generate_synthetic(cfg, seed=2))
        assert s.n_frames == 4
        assert s.n_fes == 12
        assert s.n_examples == 20
        assert s.n_instances == 60

    def test_zero_noise_collapses_fes(self):
        cfg = SynthConfig(n_frames=3, fes_per_frame=2, instances_per_fe=4,
                          dim=8, noise_scale=0.0)
        ds = generate_synthetic(cfg, seed=5)
        by_fe = ds.indices_by_fe()
        for members in by_fe.values():
            block = ds.matrix()[members]
            assert np.all(block == block[0])

    def test_unit_norm_instances(self):
        ds = generate_synthetic(SynthConfig(n_frames=2, fes_per_frame=2,
                                            instances_per_fe=3, dim=8), seed=1)
        norms = np.linalg.norm(ds.matrix().astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-6)

    def test_degenerate_config_rejected(self):
        with pytest.raises(ValueError):
            SynthConfig(n_frames=0)
        with pytest.raises(ValueError):
            SynthConfig(dim=3)


class TestNormalize:
    def test_closed_form(self):
        ds = Dataset.from_instances([make_instance(0, emb=[3.0, 4.0, 0.0, 0.0])])
        out = normalize_embeddings(ds)
        assert np.allclose(out.instances[0].embedding, [0.6, 0.8, 0.0, 0.0], atol=1e-7)

    def test_idempotent(self):
        ds = Dataset.from_instances([make_instance(i, dim=6) for i in range(5)])
        once = normalize_embeddings(ds)
        twice = normalize_embeddings(once)
        for a, b in zip(once.instances, twice.instances):
            assert np.max(np.abs(a.embedding - b.embedding)) <= 1e-12

    def test_zero_norm_reports_instance(self):
        ds = Dataset.from_instances([
            make_instance(0, emb=[1.0, 0.0, 0.0, 0.0]),
            make_instance(1, emb=[0.0, 0.0, 0.0, 0.0]),
        ])
        with pytest.raises(DataError, match="i1"):
            normalize_embeddings(ds)

    @given(seed=st.integers(0, 1000), n=st.integers(1, 20), dim=st.integers(2, 16))
    def test_norms_within_tolerance(self, seed, n, dim):
        rng = np.random.default_rng(seed)
        insts = [make_instance(i, emb=rng.normal(size=dim) * 10, dim=dim)
                 for i in range(n)]
        ds = normalize_embeddings(Dataset.from_instances(insts))
        norms = np.linalg.norm(ds.matrix().astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-6)
        assert ds.ids == [f"i{i}" for i in range(n)]


def test_duplicate_instance_ids_rejected():
    with pytest.raises(DataError, match="duplicate"):
        Dataset.from_instances([make_instance(0), make_instance(0)])


def test_mixed_dims_rejected():
    with pytest.raises(DataError):
        Dataset.from_instances([make_instance(0, dim=4), make_instance(1, dim=5)])
