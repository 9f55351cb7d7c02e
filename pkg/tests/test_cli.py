import json
from pathlib import Path

import pytest

import fecluster as fc
from fecluster.cli import (
    ExperimentConfig,
    export_viz,
    generate_report,
    load_viz_dataset,
    main,
    run_cv,
)
from fecluster.corpus import SynthConfig, generate_synthetic, save_corpus


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "small.jsonl"
    cfg = SynthConfig(n_frames=6, fes_per_frame=2, instances_per_fe=5, dim=8)
    save_corpus(generate_synthetic(cfg, 3), path)
    return str(path)


def tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestSubcommands:
    def test_synth_validate_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "c.jsonl"
        assert main(["synth", "--out", str(out), "--frames", "4", "--fes", "2",
                     "--instances", "3", "--dim", "8", "--seed", "5"]) == 0
        assert main(["validate", "--corpus", str(out)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_validate_bad_file_exits_2(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"instance_id": "x"}\n')
        assert main(["validate", "--corpus", str(bad)]) == 2

    def test_validate_missing_file_exits_2(self):
        assert main(["validate", "--corpus", "/does/not/exist.jsonl"]) == 2

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["run-cv", "--model", "nonsense"])
        assert exc.value.code == 1

    def test_missing_model_is_usage_error(self, small_corpus):
        with pytest.raises(SystemExit) as exc:
            main(["run-cv", "--corpus", small_corpus])
        assert exc.value.code == 1

    def test_margin_off_grid_is_usage_error(self, small_corpus, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["run-cv", "--corpus", small_corpus, "--model", "triplet",
                  "--margin", "0.3", "--out", str(tmp_path)])
        assert exc.value.code == 1

    def test_train_cluster_evaluate_chain(self, small_corpus, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        assert main(["train", "--corpus", small_corpus, "--model", "triplet",
                     "--method", "intra", "--margin", "0.5", "--epochs", "2",
                     "--seed", "3", "--out", str(model_path)]) == 0
        clu = tmp_path / "clusters.jsonl"
        assert main(["cluster", "--corpus", small_corpus, "--model-file",
                     str(model_path), "--method", "intra", "--theta", "0.8",
                     "--out", str(clu)]) == 0
        assert main(["evaluate", "--pred", str(clu), "--corpus", small_corpus,
                     "--method", "intra", "--model", "triplet"]) == 0
        out = capsys.readouterr().out
        assert "BcF" in out

    def test_cluster_requires_stop_parameter(self, small_corpus, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["cluster", "--corpus", small_corpus, "--method", "cross",
                  "--out", str(tmp_path / "c.jsonl")])
        assert exc.value.code == 1

    def test_config_file_defaults_and_cli_override(self, small_corpus, tmp_path, capsys):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(
            f"corpus = {small_corpus}\nmodel = boolean\nseed = 3\nout = {tmp_path / 'a'}\n"
        )
        assert main(["run-cv", "--config", str(cfg_file)]) == 0
        assert (tmp_path / "a" / "boolean" / "summary.json").exists()
        # command line wins over the file
        assert main(["run-cv", "--config", str(cfg_file), "--model", "dependency",
                     "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "b" / "dependency" / "summary.json").exists()
        assert not (tmp_path / "b" / "boolean" / "summary.json").exists()

    def test_unknown_config_key_exits_2(self, small_corpus, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("mystery = 1\n")
        assert main(["run-cv", "--config", str(cfg_file), "--model", "boolean",
                     "--corpus", small_corpus, "--out", str(tmp_path / "x")]) == 2


class TestRunCv:
    def test_baselines_fast_on_full_default_corpus(self, tmp_path):
        import time

        corpus = tmp_path / "default.jsonl"
        save_corpus(generate_synthetic(SynthConfig(), 7), corpus)
        started = time.monotonic()
        for model in ("boolean", "dependency"):
            run_cv(ExperimentConfig(model=model, corpus=str(corpus),
                                    out=str(tmp_path / "runs"), seed=7))
        assert time.monotonic() - started < 10.0

    def test_baseline_run_and_report(self, small_corpus, tmp_path, capsys):
        out = tmp_path / "runs"
        for model in ("boolean", "dependency"):
            cfg = ExperimentConfig(model=model, corpus=small_corpus,
                                   out=str(out), seed=3)
            summary = run_cv(cfg)
            assert len(summary["per_fold"]) == 3
        assert main(["report", "--run", str(out)]) == 0
        tsv = (out / "report.tsv").read_text()
        lines = tsv.strip().split("\n")
        assert lines[0].startswith("method\tmodel\t#C")
        assert len(lines) == 3

    def test_fold_test_frames_are_disjoint(self, small_corpus, tmp_path):
        out = tmp_path / "runs"
        cfg = ExperimentConfig(model="boolean", corpus=small_corpus,
                               out=str(out), seed=3)
        run_cv(cfg)
        fold_frames = []
        for fold in range(3):
            path = out / "boolean" / f"fold{fold}" / "clustering.jsonl"
            frames = {json.loads(line)["frame"] for line in path.open()}
            fold_frames.append(frames)
        assert not (fold_frames[0] & fold_frames[1])
        assert not (fold_frames[0] & fold_frames[2])
        assert not (fold_frames[1] & fold_frames[2])

    def test_byte_identical_reruns(self, small_corpus, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            for model, method in (("boolean", "intra"), ("vanilla", "intra"),
                                  ("vanilla", "cross")):
                run_cv(ExperimentConfig(model=model, method=method,
                                        corpus=small_corpus, out=str(out), seed=3))
        assert tree_bytes(out_a) == tree_bytes(out_b)

    def test_report_regeneration_is_byte_identical(self, small_corpus, tmp_path):
        out = tmp_path / "runs"
        run_cv(ExperimentConfig(model="boolean", corpus=small_corpus,
                                out=str(out), seed=3))
        first = generate_report(out)
        second = generate_report(out)
        assert first == second

    def test_trained_run_writes_model_and_selection(self, small_corpus, tmp_path):
        out = tmp_path / "runs"
        cfg = ExperimentConfig(model="triplet", method="intra", corpus=small_corpus,
                               out=str(out), seed=3, margin=0.5, epochs=2)
        summary = run_cv(cfg)
        for fold in range(3):
            fold_dir = out / "intra-triplet" / f"fold{fold}"
            assert (fold_dir / "model.json").exists()
            payload = json.loads((fold_dir / "eval.json").read_text())
            assert "theta" in payload["calibration"]
            assert "selected_margin" in payload["calibration"]
        assert 0.0 <= summary["mean"]["bcf"] <= 1.0

    def test_cross_run_records_k(self, small_corpus, tmp_path):
        out = tmp_path / "runs"
        run_cv(ExperimentConfig(model="vanilla", method="cross",
                                corpus=small_corpus, out=str(out), seed=3))
        payload = json.loads((out / "cross-vanilla" / "fold0" / "eval.json").read_text())
        assert payload["calibration"]["k_roles"] >= 1


class TestExportViz:
    def test_row_count_and_ranking_recall_roundtrip(self, tmp_path):
        import numpy as np
        from dataclasses import replace

        cfg = SynthConfig(n_frames=3, fes_per_frame=2, instances_per_fe=4, dim=8)
        ds = fc.normalize_embeddings(generate_synthetic(cfg, 4))
        rng = np.random.default_rng(0)
        head = fc.MetricHead(np.eye(8) + 0.2 * rng.normal(size=(8, 8)), np.zeros(8))
        out = tmp_path / "viz.tsv"
        assert export_viz(ds, head, out) == len(ds)
        assert len(out.read_text().strip().split("\n")) == len(ds) + 1

        # what export_viz wrote, reconstructed in memory at the same precision
        Y32 = head.embed(ds.matrix()).astype(np.float32)
        mem = fc.Dataset.from_instances([
            replace(inst, embedding=Y32[i]) for i, inst in enumerate(ds.instances)
        ])
        rr_mem = fc.ranking_recall(mem, fc.MetricHead.identity(8))

        back = load_viz_dataset(out)
        assert back.ids == ds.ids
        rr_file = fc.ranking_recall(back, fc.MetricHead.identity(8))
        assert rr_file == rr_mem

    def test_identity_head_writes_raw_normalized_embeddings(self, tmp_path):
        import numpy as np

        cfg = SynthConfig(n_frames=2, fes_per_frame=2, instances_per_fe=3, dim=8)
        ds = fc.normalize_embeddings(generate_synthetic(cfg, 9))
        out = tmp_path / "viz.tsv"
        export_viz(ds, fc.MetricHead.identity(8), out)
        back = load_viz_dataset(out)
        assert np.allclose(back.matrix(), ds.matrix(), atol=1e-6)

    def test_cli_export(self, small_corpus, tmp_path):
        out = tmp_path / "viz.tsv"
        assert main(["export-viz", "--corpus", small_corpus, "--out", str(out)]) == 0
        header = out.read_text().split("\n")[0].split("\t")
        assert header[:3] == ["instance_id", "frame", "fe_label"]
