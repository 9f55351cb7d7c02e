"""Command-line experiment driver.

Subcommands: synth, validate, train, cluster, evaluate, run-cv, report,
export-viz.  Options may come from a flat key=value config file (--config);
precedence is command line > config file > built-in defaults.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .baselines import boolean_cluster, dependency_cluster
from .clustering import (
    DEFAULT_INSTANCE_CAP,
    FEClustering,
    calibrate_threshold,
    cross_frame_cluster,
    intra_frame_cluster,
    role_cluster_count,
    save_clustering,
)
from .corpus import (
    Dataset,
    SynthConfig,
    dataset_stats,
    generate_synthetic,
    load_corpus,
    normalize_embeddings,
    save_corpus,
    split_folds,
)
from .errors import DataError, NumericalError
from .evaluation import TSV_HEADER, EvalReport, evaluate, ranking_recall
from .metric_learning import (
    ARCFACE_MARGIN_GRID,
    TRIPLET_MARGIN_GRID,
    MetricHead,
    TrainConfig,
    load_model,
    save_model,
    train,
)

LEARNED_MODELS = ("vanilla", "triplet", "arcface")
BASELINE_MODELS = ("boolean", "dependency")
MODELS = LEARNED_MODELS + BASELINE_MODELS
METHODS = ("cross", "intra")

ROW_ORDER = [
    ("-", "boolean"),
    ("-", "dependency"),
    ("cross", "vanilla"),
    ("cross", "triplet"),
    ("cross", "arcface"),
    ("intra", "vanilla"),
    ("intra", "triplet"),
    ("intra", "arcface"),
]


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    method: str = "intra"
    corpus: str | None = None
    synthetic: bool = False
    out: str = "runs/out"
    seed: int = 7
    margin: float | None = None
    scale: float = 64.0
    batch_size: int = 16
    epochs: int = 10
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    max_instances: int = DEFAULT_INSTANCE_CAP

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.corpus is None and not self.synthetic:
            raise ValueError("either a corpus path or synthetic data is required")

    def row_key(self) -> tuple[str, str]:
        if self.model in BASELINE_MODELS:
            return ("-", self.model)
        return (self.method, self.model)

    def run_dir_name(self) -> str:
        method, model = self.row_key()
        return model if method == "-" else f"{method}-{model}"


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_experiment_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.corpus is not None:
        dataset = load_corpus(cfg.corpus)
    else:
        dataset = generate_synthetic(SynthConfig(), cfg.seed)
    return normalize_embeddings(dataset)


def _fit_or_identity(cfg: ExperimentConfig, train_ds: Dataset, dev_ds: Dataset):
    """Returns (head, trained model or None) for one fold rotation."""
    if cfg.model == "vanilla":
        return MetricHead.identity(train_ds.embedding_dim), None
    tc = TrainConfig(
        loss=cfg.model,
        mode=cfg.method,
        margin=cfg.margin,
        scale=cfg.scale,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        weight_decay=cfg.weight_decay,
        seed=cfg.seed,
    )
    model = train(train_ds, dev_ds, tc)
    return model.head, model


def run_cv(cfg: ExperimentConfig) -> dict:
    """Three-fold rotation: train on one fold, calibrate on the next, score the third.

    Writes per-fold artifacts and a summary under cfg.out/<run dir>/ and
    returns the summary payload.  Deterministic given the seed.
    """
    dataset = _load_experiment_dataset(cfg)
    split = split_folds(dataset, 3, cfg.seed)
    folds = [split.subset(dataset, i) for i in range(3)]
    run_dir = Path(cfg.out) / cfg.run_dir_name()

    per_fold: list[dict] = []
    for rotation in range(3):
        train_ds = folds[rotation]
        dev_ds = folds[(rotation + 1) % 3]
        test_ds = folds[(rotation + 2) % 3]
        fold_dir = run_dir / f"fold{rotation}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        stage = "setup"
        try:
            calibration: dict = {}
            if cfg.model in BASELINE_MODELS:
                stage = "baseline clustering"
                pred = boolean_cluster(test_ds) if cfg.model == "boolean" else dependency_cluster(test_ds)
            else:
                stage = "training"
                head, trained = _fit_or_identity(cfg, train_ds, dev_ds)
                if trained is not None:
                    save_model(trained, fold_dir / "model.json")
                    calibration["selected_margin"] = trained.selected.margin
                    calibration["selected_epoch"] = trained.selected.epoch
                    calibration["dev_ranking_recall"] = trained.selected.dev_ranking_recall
                stage = "calibration"
                if cfg.method == "cross":
                    k = role_cluster_count(dataset_stats(dev_ds))
                    calibration["k_roles"] = k
                    stage = "clustering"
                    pred = cross_frame_cluster(
                        test_ds, head, k, max_instances=cfg.max_instances, seed=cfg.seed
                    )
                else:
                    theta = calibrate_threshold(dev_ds, head)
                    calibration["theta"] = theta
                    stage = "clustering"
                    pred = intra_frame_cluster(test_ds, head, theta)
            stage = "evaluation"
            report = evaluate(pred, test_ds.gold_labeling())
        except (DataError, NumericalError, ValueError) as exc:
            raise type(exc)(f"fold {rotation}, stage {stage!r}: {exc}") from exc
        save_clustering(pred, test_ds, fold_dir / "clustering.jsonl")
        fold_payload = {"fold": rotation, "calibration": calibration, "scores": asdict(report)}
        _write_json(fold_dir / "eval.json", fold_payload)
        per_fold.append(fold_payload)

    method, model = cfg.row_key()
    mean = {
        key: float(np.mean([f["scores"][key] for f in per_fold]))
        for key in per_fold[0]["scores"]
    }
    summary = {
        "method": method,
        "model": model,
        "seed": cfg.seed,
        "per_fold": per_fold,
        "mean": mean,
    }
    _write_json(run_dir / "summary.json", summary)
    return summary


def summary_report(summary: dict) -> EvalReport:
    m = summary["mean"]
    return EvalReport(
        n_clusters=m["n_clusters"], pu=m["pu"], ipu=m["ipu"], pif=m["pif"],
        bcp=m["bcp"], bcr=m["bcr"], bcf=m["bcf"],
    )


def generate_report(run_root) -> str:
    """TSV over every completed run under run_root, in canonical row order."""
    root = Path(run_root)
    summaries = {}
    for summary_path in sorted(root.glob("*/summary.json")):
        with open(summary_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        summaries[(payload["method"], payload["model"])] = payload
    if not summaries:
        raise DataError(f"no summary.json files under {root}")
    keys = [k for k in ROW_ORDER if k in summaries]
    keys += sorted(k for k in summaries if k not in ROW_ORDER)
    lines = [TSV_HEADER]
    for method, model in keys:
        report = summary_report(summaries[(method, model)])
        lines.append(report.tsv_row(method, model))
    return "\n".join(lines) + "\n"


def render_table(tsv: str) -> str:
    rows = [line.split("\t") for line in tsv.strip().split("\n")]
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(r)).rstrip())
    return "\n".join(out) + "\n"


def export_viz(dataset: Dataset, head: MetricHead, out_path) -> int:
    """TSV of head-embedded vectors for external projection tools.

    Values are written at float32 precision (the interchange precision), so
    reloading the file reproduces the embedded space exactly.
    """
    Y = head.embed(dataset.matrix()).astype(np.float32)
    d = Y.shape[1]
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["instance_id", "frame", "fe_label"] + [f"dim{i}" for i in range(d)]))
        fh.write("\n")
        for i, inst in enumerate(dataset.instances):
            cells = [inst.instance_id, inst.frame, inst.fe_label]
            cells += [repr(float(v)) for v in Y[i]]
            fh.write("\t".join(cells))
            fh.write("\n")
    return len(dataset)


def load_viz_dataset(path) -> Dataset:
    """Rebuild a minimal dataset from an export-viz TSV (embeddings + labels)."""
    from .corpus import ArgumentInstance, Position

    instances = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:3] != ["instance_id", "frame", "fe_label"]:
            raise DataError(f"{path}: not an export-viz file")
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            instances.append(ArgumentInstance(
                instance_id=cells[0],
                sentence_id=cells[0],
                frame=cells[1],
                fe_label=cells[2],
                verb_lemma="-",
                position=Position.AFTER,
                dep_label="-",
                embedding=np.asarray([float(v) for v in cells[3:]], dtype=np.float32),
            ))
    if not instances:
        raise DataError(f"{path}: no rows")
    return Dataset.from_instances(instances)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise DataError(f"{path} line {line_no}: expected key=value")
            key, _, value = stripped.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_TYPES = {
    "corpus": str, "method": str, "model": str, "out": str,
    "seed": int, "epochs": int, "batch_size": int, "max_instances": int,
    "margin": float, "scale": float, "lr": float, "weight_decay": float,
    "synthetic": lambda v: v.lower() in ("1", "true", "yes"),
}


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """config-file values fill in options the command line left unset."""
    merged: dict = {}
    if getattr(args, "config", None):
        raw = _read_config_file(args.config)
        for key, value in raw.items():
            if key not in _CONFIG_TYPES:
                raise DataError(f"unknown config key {key!r}")
            merged[key] = _CONFIG_TYPES[key](value)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _check_margin(parser, model: str, margin: float | None):
    if margin is None or model not in ("triplet", "arcface"):
        return
    grid = TRIPLET_MARGIN_GRID if model == "triplet" else ARCFACE_MARGIN_GRID
    if margin not in grid:
        parser.error(f"--margin {margin} not in the {model} grid {grid}")


def build_parser() -> _Parser:
    parser = _Parser(prog="fecluster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus file")
    add_common(p_synth)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--frames", type=int, default=20)
    p_synth.add_argument("--fes", type=int, default=3)
    p_synth.add_argument("--instances", type=int, default=30)
    p_synth.add_argument("--dim", type=int, default=32)
    p_synth.add_argument("--noise", type=float, default=0.35)
    p_synth.add_argument("--shared-fraction", type=float, default=0.5)

    p_val = sub.add_parser("validate", help="schema-check an interchange file")
    p_val.add_argument("--corpus", required=True)

    p_train = sub.add_parser("train", help="fit a metric head")
    add_common(p_train)
    p_train.add_argument("--corpus", help="full corpus; folds 0/1 become train/dev")
    p_train.add_argument("--train", dest="train_path", help="explicit train fold")
    p_train.add_argument("--dev", dest="dev_path", help="explicit dev fold")
    p_train.add_argument("--model", choices=("triplet", "arcface"), default=None)
    p_train.add_argument("--method", choices=METHODS, default=None)
    p_train.add_argument("--margin", type=float, default=None)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--scale", type=float, default=None)
    p_train.add_argument("--out", required=True, help="model file to write")

    p_cluster = sub.add_parser("cluster", help="cluster a corpus into FE clusters")
    add_common(p_cluster)
    p_cluster.add_argument("--corpus", required=True)
    p_cluster.add_argument("--model-file", help="trained model; omitted = identity head")
    p_cluster.add_argument("--method", choices=METHODS, required=True)
    p_cluster.add_argument("--k", type=int, help="role clusters (cross method)")
    p_cluster.add_argument("--theta", type=float, help="distance threshold (intra method)")
    p_cluster.add_argument("--out", required=True)

    p_eval = sub.add_parser("evaluate", help="score a clustering against gold labels")
    p_eval.add_argument("--pred", required=True, help="clustering.jsonl")
    p_eval.add_argument("--corpus", required=True, help="gold interchange file")
    p_eval.add_argument("--method", default="-")
    p_eval.add_argument("--model", default="-")

    p_cv = sub.add_parser("run-cv", help="three-fold cross-validation for one method/model")
    add_common(p_cv)
    p_cv.add_argument("--corpus")
    p_cv.add_argument("--synthetic", action="store_true", default=None,
                      help="use the default synthetic corpus instead of --corpus")
    p_cv.add_argument("--method", choices=METHODS, default=None)
    p_cv.add_argument("--model", choices=MODELS, default=None)
    p_cv.add_argument("--out", default=None)
    p_cv.add_argument("--margin", type=float, default=None)
    p_cv.add_argument("--epochs", type=int, default=None)
    p_cv.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p_cv.add_argument("--lr", type=float, default=None)
    p_cv.add_argument("--scale", type=float, default=None)
    p_cv.add_argument("--max-instances", dest="max_instances", type=int, default=None)

    p_report = sub.add_parser("report", help="aggregate run-cv outputs into a table")
    p_report.add_argument("--run", required=True, help="directory passed to run-cv --out")
    p_report.add_argument("--out", help="TSV path (default: <run>/report.tsv)")

    p_viz = sub.add_parser("export-viz", help="dump head embeddings as TSV")
    p_viz.add_argument("--corpus", required=True)
    p_viz.add_argument("--model-file", help="trained model; omitted = identity head")
    p_viz.add_argument("--out", required=True)

    return parser


def _cmd_synth(args) -> int:
    merged = _merge_config(args, ["seed"])
    seed = merged.get("seed", 7)
    config = SynthConfig(
        n_frames=args.frames, fes_per_frame=args.fes, instances_per_fe=args.instances,
        dim=args.dim, noise_scale=args.noise, shared_role_fraction=args.shared_fraction,
    )
    dataset = generate_synthetic(config, seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_corpus(dataset, args.out)
    stats = dataset_stats(dataset)
    print(f"wrote {args.out}: {stats.n_frames} frames, {stats.n_fes} FEs, "
          f"{stats.n_examples} examples, {stats.n_instances} instances")
    return 0


def _cmd_validate(args) -> int:
    dataset = load_corpus(args.corpus)
    stats = dataset_stats(dataset)
    print(f"{args.corpus}: OK ({stats.n_instances} instances, "
          f"{stats.n_frames} frames, dim {dataset.embedding_dim})")
    return 0


def _cmd_train(args, parser) -> int:
    merged = _merge_config(
        args, ["seed", "model", "method", "margin", "epochs", "batch_size", "lr", "scale"]
    )
    model = merged.get("model", "triplet")
    method = merged.get("method", "intra")
    _check_margin(parser, model, merged.get("margin"))
    if args.train_path and args.dev_path:
        train_ds = normalize_embeddings(load_corpus(args.train_path))
        dev_ds = normalize_embeddings(load_corpus(args.dev_path))
    elif merged.get("corpus") or args.corpus:
        dataset = normalize_embeddings(load_corpus(args.corpus or merged["corpus"]))
        split = split_folds(dataset, 3, merged.get("seed", 7))
        train_ds = split.subset(dataset, 0)
        dev_ds = split.subset(dataset, 1)
    else:
        parser.error("train needs either --corpus or both --train and --dev")
    tc = TrainConfig(
        loss=model,
        mode=method,
        margin=merged.get("margin"),
        scale=merged.get("scale", 64.0),
        batch_size=merged.get("batch_size", 16),
        epochs=merged.get("epochs", 10),
        learning_rate=merged.get("lr", 1e-3),
        weight_decay=merged.get("weight_decay", 0.01),
        seed=merged.get("seed", 7),
    )
    trained = train(train_ds, dev_ds, tc)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_model(trained, args.out)
    sel = trained.selected
    print(f"wrote {args.out}: margin={sel.margin:g} epoch={sel.epoch} "
          f"dev_ranking_recall={sel.dev_ranking_recall:.4f}")
    return 0


def _load_head(model_file) -> MetricHead:
    return load_model(model_file).head


def _cmd_cluster(args, parser) -> int:
    dataset = normalize_embeddings(load_corpus(args.corpus))
    head = _load_head(args.model_file) if args.model_file else MetricHead.identity(dataset.embedding_dim)
    if args.method == "cross":
        if args.k is None:
            parser.error("--method cross requires --k")
        pred = cross_frame_cluster(dataset, head, args.k)
    else:
        if args.theta is None:
            parser.error("--method intra requires --theta")
        pred = intra_frame_cluster(dataset, head, args.theta)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_clustering(pred, dataset, args.out)
    print(f"wrote {args.out}: {pred.n_clusters()} final clusters")
    return 0


def load_clustering(path) -> FEClustering:
    assignment = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                assignment[record["instance_id"]] = (record["frame"], record["role_cluster"])
            except (json.JSONDecodeError, KeyError, TypeError):
                raise DataError(f"{path} line {line_no}: not a clustering record") from None
    if not assignment:
        raise DataError(f"{path}: no records")
    return FEClustering(assignment)


def _cmd_evaluate(args) -> int:
    pred = load_clustering(args.pred)
    gold = load_corpus(args.corpus).gold_labeling()
    report = evaluate(pred, gold)
    print(TSV_HEADER)
    print(report.tsv_row(args.method, args.model))
    return 0


def _cmd_run_cv(args, parser) -> int:
    merged = _merge_config(
        args,
        ["seed", "corpus", "synthetic", "method", "model", "out", "margin",
         "epochs", "batch_size", "lr", "scale", "max_instances"],
    )
    if "model" not in merged:
        parser.error("run-cv requires --model")
    _check_margin(parser, merged["model"], merged.get("margin"))
    try:
        cfg = ExperimentConfig(
            model=merged["model"],
            method=merged.get("method", "intra"),
            corpus=merged.get("corpus"),
            synthetic=bool(merged.get("synthetic", False)),
            out=merged.get("out", "runs/out"),
            seed=merged.get("seed", 7),
            margin=merged.get("margin"),
            scale=merged.get("scale", 64.0),
            batch_size=merged.get("batch_size", 16),
            epochs=merged.get("epochs", 10),
            learning_rate=merged.get("lr", 1e-3),
            weight_decay=merged.get("weight_decay", 0.01),
            max_instances=merged.get("max_instances", DEFAULT_INSTANCE_CAP),
        )
    except ValueError as exc:
        parser.error(str(exc))
    summary = run_cv(cfg)
    report = summary_report(summary)
    print(TSV_HEADER)
    print(report.tsv_row(*cfg.row_key()))
    return 0


def _cmd_report(args) -> int:
    tsv = generate_report(args.run)
    out = Path(args.out) if args.out else Path(args.run) / "report.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(tsv)
    print(render_table(tsv), end="")
    print(f"\nwrote {out}")
    return 0


def _cmd_export_viz(args) -> int:
    dataset = normalize_embeddings(load_corpus(args.corpus))
    head = _load_head(args.model_file) if args.model_file else MetricHead.identity(dataset.embedding_dim)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    rows = export_viz(dataset, head, args.out)
    print(f"wrote {args.out}: {rows} rows")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "train":
            return _cmd_train(args, parser)
        if args.command == "cluster":
            return _cmd_cluster(args, parser)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "run-cv":
            return _cmd_run_cv(args, parser)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "export-viz":
            return _cmd_export_viz(args)
        parser.error(f"unknown command {args.command!r}")
    except (DataError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
