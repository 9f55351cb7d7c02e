"""Training loop: minibatch AdamW over a margin grid with dev-set selection.

For every margin in the grid (or the single configured margin) the head is
retrained from the same seeded initialization; after each epoch the head is
scored by ranking recall on the development set.  The snapshot with the
highest dev score wins, ties going to the smaller epoch and then the smaller
margin.  Every (margin, epoch, score) triple is kept in the selection report.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..corpus import Dataset
from ..evaluation import ranking_recall
from .heads import ArcFaceHead, MetricHead
from .losses import arcface_grad
from .optim import AdamWState, adamw_step
from .sampling import MODES, sample_triplets

logger = logging.getLogger(__name__)

TRIPLET_MARGIN_GRID = (0.1, 0.2, 0.5, 1.0)
ARCFACE_MARGIN_GRID = (0.01, 0.02, 0.05, 0.1)

LOSSES = ("triplet", "arcface")

GLOBAL_SPACE = "__global__"


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "triplet"
    mode: str = "intra"
    margin: float | None = None  # None sweeps the loss's full margin grid
    scale: float = 64.0
    batch_size: int = 16
    epochs: int = 10
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.margin is not None and self.margin not in self.margin_grid():
            raise ValueError(
                f"margin {self.margin} not in the {self.loss} grid {self.margin_grid()}"
            )

    def margin_grid(self) -> tuple[float, ...]:
        return TRIPLET_MARGIN_GRID if self.loss == "triplet" else ARCFACE_MARGIN_GRID

    def margins(self) -> tuple[float, ...]:
        return self.margin_grid() if self.margin is None else (self.margin,)


@dataclass(frozen=True)
class SelectionEntry:
    margin: float
    epoch: int
    dev_ranking_recall: float


@dataclass
class TrainedModel:
    head: MetricHead
    arcface_head: ArcFaceHead | None
    config: TrainConfig
    selection_report: list[SelectionEntry]
    selected: SelectionEntry
    skipped_arcface_instances: int = 0


def _arcface_spaces(train_set: Dataset, mode: str) -> dict[str, list]:
    """Label spaces for classification training; spaces need >= 2 classes."""
    if mode == "cross":
        labels = sorted(set(inst.fe_key for inst in train_set.instances))
        if len(labels) < 2:
            raise ValueError("cross-frame classification needs at least 2 FE classes")
        return {GLOBAL_SPACE: labels}
    spaces: dict[str, list] = {}
    for frame in sorted(train_set.frames()):
        fes = sorted(set(
            inst.fe_label for inst in train_set.instances if inst.frame == frame
        ))
        if len(fes) >= 2:
            spaces[frame] = fes
    return spaces


def _space_and_class(arc: ArcFaceHead, inst, mode: str):
    if mode == "cross":
        return GLOBAL_SPACE, arc.spaces[GLOBAL_SPACE].index(inst.fe_key)
    if inst.frame not in arc.spaces:
        return None, None
    return inst.frame, arc.spaces[inst.frame].index(inst.fe_label)


def _triplet_epoch(head, opt, train_set, id_to_index, mode, margin, batch_size,
                   lr, epoch, seed) -> float:
    triplets = sample_triplets(train_set, mode, epoch, seed)
    if not triplets:
        return 0.0
    rng = np.random.default_rng([seed, epoch, 7])
    order = rng.permutation(len(triplets))
    X = train_set.matrix()
    total = 0.0
    for start in range(0, len(order), batch_size):
        batch = [triplets[i] for i in order[start:start + batch_size]]
        bsz = len(batch)
        a = [id_to_index[t.anchor_id] for t in batch]
        p = [id_to_index[t.positive_id] for t in batch]
        n = [id_to_index[t.negative_id] for t in batch]
        Xb = X[a + p + n].astype(np.float64)
        Y, backward = head.embed_with_backward(Xb)
        ya, yp, yn = Y[:bsz], Y[bsz:2 * bsz], Y[2 * bsz:]
        d_ap = ((ya - yp) ** 2).sum(axis=1)
        d_an = ((ya - yn) ** 2).sum(axis=1)
        losses = np.maximum(d_ap - d_an + margin, 0.0)
        total += losses.sum()
        active = (losses > 0.0).astype(np.float64)[:, None] / bsz
        dY = np.zeros_like(Y)
        dY[:bsz] = active * 2.0 * (yn - yp)
        dY[bsz:2 * bsz] = active * (-2.0) * (ya - yp)
        dY[2 * bsz:] = active * 2.0 * (ya - yn)
        dW, db = backward(dY)
        adamw_step(opt, {"W": head.W, "b": head.b}, {"W": dW, "b": db}, lr)
    return total / len(triplets)


def _arcface_epoch(head, arc, opt, train_set, mode, margin, scale, batch_size,
                   lr, epoch, seed) -> tuple[float, int]:
    eligible = []
    for idx, inst in enumerate(train_set.instances):
        space, cls = _space_and_class(arc, inst, mode)
        if space is not None:
            eligible.append((idx, space, cls))
    if not eligible:
        return 0.0, 0
    rng = np.random.default_rng([seed, epoch, 11])
    order = rng.permutation(len(eligible))
    X = train_set.matrix()
    total = 0.0
    skipped = 0
    for start in range(0, len(order), batch_size):
        batch = [eligible[i] for i in order[start:start + batch_size]]
        bsz = len(batch)
        Xb = X[[b[0] for b in batch]].astype(np.float64)
        Y, backward = head.embed_with_backward(Xb)
        dY = np.zeros_like(Y)
        d_weights = {}
        for row, (_, space, cls) in enumerate(batch):
            g = arcface_grad(arc, Y[row], space, cls, margin, scale)
            total += g.loss
            if g.skipped:
                skipped += 1
                continue
            dY[row] = g.d_y / bsz
            if space not in d_weights:
                d_weights[space] = np.zeros_like(arc.weights[space])
            d_weights[space] += g.d_weights / bsz
        dW, db = backward(dY)
        params = {"W": head.W, "b": head.b}
        grads = {"W": dW, "b": db}
        for space, g in d_weights.items():
            params[f"arc/{space}"] = arc.weights[space]
            grads[f"arc/{space}"] = g
        adamw_step(opt, params, grads, lr)
    return total / len(eligible), skipped


def train(train_set: Dataset, dev_set: Dataset, config: TrainConfig) -> TrainedModel:
    """Fit the head on the train fold, selecting by dev ranking recall."""
    overlap = set(train_set.frames()) & set(dev_set.frames())
    if overlap:
        raise ValueError(f"train and dev folds share frames: {sorted(overlap)[:3]}")
    for name, ds in (("train", train_set), ("dev", dev_set)):
        norms = np.linalg.norm(ds.matrix().astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-4):
            raise ValueError(f"{name} set is not l2-normalized; normalize it first")

    d = train_set.embedding_dim
    id_to_index = {inst.instance_id: i for i, inst in enumerate(train_set.instances)}

    report: list[SelectionEntry] = []
    best: SelectionEntry | None = None
    best_head: MetricHead | None = None
    best_arc: ArcFaceHead | None = None
    total_skipped = 0

    for margin in config.margins():
        init_rng = np.random.default_rng([config.seed, 3])
        head = MetricHead.initial(d, init_rng)
        arc = None
        if config.loss == "arcface":
            arc = ArcFaceHead.create(_arcface_spaces(train_set, config.mode), d, init_rng)
        opt = AdamWState(weight_decay=config.weight_decay)
        for epoch in range(1, config.epochs + 1):
            if config.loss == "triplet":
                mean_loss = _triplet_epoch(
                    head, opt, train_set, id_to_index, config.mode, margin,
                    config.batch_size, config.learning_rate, epoch, config.seed,
                )
            else:
                mean_loss, skipped = _arcface_epoch(
                    head, arc, opt, train_set, config.mode, margin, config.scale,
                    config.batch_size, config.learning_rate, epoch, config.seed,
                )
                total_skipped += skipped
            score = ranking_recall(dev_set, head)
            entry = SelectionEntry(margin, epoch, score)
            report.append(entry)
            logger.debug("margin=%g epoch=%d loss=%.5f dev_rr=%.5f",
                         margin, epoch, mean_loss, score)
            if best is None or _better(entry, best):
                best = entry
                best_head = head.copy()
                best_arc = arc.copy() if arc is not None else None

    assert best is not None and best_head is not None
    return TrainedModel(best_head, best_arc, config, report, best, total_skipped)


def _better(cand: SelectionEntry, best: SelectionEntry) -> bool:
    if cand.dev_ranking_recall != best.dev_ranking_recall:
        return cand.dev_ranking_recall > best.dev_ranking_recall
    if cand.epoch != best.epoch:
        return cand.epoch < best.epoch
    return cand.margin < best.margin


MODEL_FORMAT = "fecluster-model/1"


def save_model(model: TrainedModel, path) -> None:
    """Serialize the model to JSON; floats round-trip exactly via repr."""
    arc = None
    if model.arcface_head is not None:
        arc = {
            "spaces": {
                name: [list(c) if isinstance(c, tuple) else c for c in classes]
                for name, classes in model.arcface_head.spaces.items()
            },
            "weights": {
                name: w.tolist() for name, w in model.arcface_head.weights.items()
            },
        }
    payload = {
        "format": MODEL_FORMAT,
        "d_in": model.head.d_in,
        "d_out": model.head.d_out,
        "W": model.head.W.tolist(),
        "b": model.head.b.tolist(),
        "arcface": arc,
        "config": asdict(model.config),
        "selection_report": [asdict(e) for e in model.selection_report],
        "selected": asdict(model.selected),
        "skipped_arcface_instances": model.skipped_arcface_instances,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    head = MetricHead(np.asarray(payload["W"]), np.asarray(payload["b"]))
    arc = None
    if payload["arcface"] is not None:
        spaces = {
            name: [tuple(c) if isinstance(c, list) else c for c in classes]
            for name, classes in payload["arcface"]["spaces"].items()
        }
        weights = {
            name: np.asarray(w, dtype=np.float64)
            for name, w in payload["arcface"]["weights"].items()
        }
        arc = ArcFaceHead(spaces, weights)
    config = TrainConfig(**payload["config"])
    report = [SelectionEntry(**e) for e in payload["selection_report"]]
    selected = SelectionEntry(**payload["selected"])
    return TrainedModel(head, arc, config, report, selected,
                        payload.get("skipped_arcface_instances", 0))
