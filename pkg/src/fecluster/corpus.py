"""Argument-instance data model, corpus I/O, fold splitting and synthetic data.

The interchange format is UTF-8 JSON-lines with one argument instance per
line.  Field names: instance_id, sentence_id, frame, fe_label, verb_lemma,
position ("before" | "after"), dep_label, embedding (array of numbers).
Embedding values are stored and exchanged as 32-bit floats; numeric work
downstream is done in 64-bit.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

INTERCHANGE_FIELDS = (
    "instance_id",
    "sentence_id",
    "frame",
    "fe_label",
    "verb_lemma",
    "position",
    "dep_label",
    "embedding",
)


class Position(str, Enum):
    BEFORE = "before"
    AFTER = "after"


@dataclass(frozen=True, eq=False)
class ArgumentInstance:
    """One argument span of a frame-evoking verb.

    ``fe_label`` is frame-specific: the identity of a role is the pair
    (frame, fe_label), never the label string alone.
    """

    instance_id: str
    sentence_id: str
    frame: str
    fe_label: str
    verb_lemma: str
    position: Position
    dep_label: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.dep_label:
            raise DataError(f"instance {self.instance_id!r}: empty dep_label")
        emb = np.asarray(self.embedding, dtype=np.float32)
        if emb.ndim != 1 or emb.size == 0:
            raise DataError(
                f"instance {self.instance_id!r}: embedding must be a non-empty vector"
            )
        object.__setattr__(self, "embedding", emb)

    @property
    def fe_key(self) -> tuple[str, str]:
        return (self.frame, self.fe_label)


@dataclass(frozen=True, eq=False)
class Dataset:
    instances: tuple[ArgumentInstance, ...]
    embedding_dim: int
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        seen: set[str] = set()
        for inst in self.instances:
            if inst.instance_id in seen:
                raise DataError(f"duplicate instance_id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            if inst.embedding.shape != (self.embedding_dim,):
                raise DataError(
                    f"instance {inst.instance_id!r}: embedding has dimension "
                    f"{inst.embedding.shape[0]}, expected {self.embedding_dim}"
                )

    @classmethod
    def from_instances(cls, instances: Iterable[ArgumentInstance]) -> "Dataset":
        insts = tuple(instances)
        if not insts:
            raise DataError("cannot infer embedding_dim from an empty instance list")
        return cls(insts, int(insts[0].embedding.shape[0]))

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def ids(self) -> list[str]:
        return [inst.instance_id for inst in self.instances]

    def matrix(self) -> np.ndarray:
        """All embeddings stacked into an (n, d) float32 array."""
        mat = object.__getattribute__(self, "_matrix")
        if mat is None:
            if self.instances:
                mat = np.stack([inst.embedding for inst in self.instances])
            else:
                mat = np.zeros((0, self.embedding_dim), dtype=np.float32)
            object.__setattr__(self, "_matrix", mat)
        return mat

    def frames(self) -> list[str]:
        """Distinct frames in first-appearance order."""
        return list(dict.fromkeys(inst.frame for inst in self.instances))

    def indices_by_frame(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {}
        for i, inst in enumerate(self.instances):
            groups.setdefault(inst.frame, []).append(i)
        return groups

    def indices_by_fe(self) -> dict[tuple[str, str], list[int]]:
        groups: dict[tuple[str, str], list[int]] = {}
        for i, inst in enumerate(self.instances):
            groups.setdefault(inst.fe_key, []).append(i)
        return groups

    def subset(self, keep: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.instances[i] for i in keep), self.embedding_dim)

    def restrict_to_frames(self, frames: Iterable[str]) -> "Dataset":
        frameset = set(frames)
        keep = [i for i, inst in enumerate(self.instances) if inst.frame in frameset]
        return self.subset(keep)

    def gold_labeling(self) -> dict[str, tuple[str, str]]:
        return {inst.instance_id: inst.fe_key for inst in self.instances}


@dataclass(frozen=True)
class FoldSplit:
    """Frame-disjoint assignment of frames to folds."""

    fold_assignment: dict[str, int]
    n_folds: int

    def frames_in_fold(self, fold: int) -> list[str]:
        return sorted(f for f, k in self.fold_assignment.items() if k == fold)

    def fold_of(self, frame: str) -> int:
        return self.fold_assignment[frame]

    def subset(self, dataset: Dataset, fold: int) -> Dataset:
        return dataset.restrict_to_frames(self.frames_in_fold(fold))


@dataclass(frozen=True)
class DatasetStats:
    n_frames: int
    n_fes: int
    n_examples: int
    n_instances: int


@dataclass(frozen=True)
class SynthConfig:
    n_frames: int = 20
    fes_per_frame: int = 3
    instances_per_fe: int = 30
    dim: int = 32
    noise_scale: float = 0.35
    shared_role_fraction: float = 0.9

    def __post_init__(self):
        if min(self.n_frames, self.fes_per_frame, self.instances_per_fe) <= 0:
            raise ValueError("all synthetic counts must be positive")
        if self.dim < 4:
            raise ValueError("dim must be at least 4")
        if not 0.0 <= self.shared_role_fraction <= 1.0:
            raise ValueError("shared_role_fraction must lie in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")


def _parse_record(raw: dict, line_no: int) -> ArgumentInstance:
    missing = [k for k in INTERCHANGE_FIELDS if k not in raw]
    if missing:
        raise DataError(f"line {line_no}: missing fields {missing}")
    pos = raw["position"]
    if pos not in (Position.BEFORE.value, Position.AFTER.value):
        raise DataError(f"line {line_no}: position must be 'before' or 'after', got {pos!r}")
    emb = raw["embedding"]
    if not isinstance(emb, list) or not emb or not all(
        isinstance(v, (int, float)) and math.isfinite(v) for v in emb
    ):
        raise DataError(f"line {line_no}: embedding must be a non-empty array of finite numbers")
    try:
        return ArgumentInstance(
            instance_id=str(raw["instance_id"]),
            sentence_id=str(raw["sentence_id"]),
            frame=str(raw["frame"]),
            fe_label=str(raw["fe_label"]),
            verb_lemma=str(raw["verb_lemma"]),
            position=Position(pos),
            dep_label=str(raw["dep_label"]),
            embedding=np.asarray(emb, dtype=np.float32),
        )
    except DataError as exc:
        raise DataError(f"line {line_no}: {exc}") from None


def load_corpus(path) -> Dataset:
    """Load and validate an interchange JSON-lines file.

    Unknown fields are ignored with one warning per distinct field name.
    Errors carry the 1-based line number of the offending record.
    """
    instances: list[ArgumentInstance] = []
    seen_ids: set[str] = set()
    unknown_warned: set[str] = set()
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON ({exc.msg})") from None
            if not isinstance(raw, dict):
                raise DataError(f"line {line_no}: record must be a JSON object")
            for key in raw:
                if key not in INTERCHANGE_FIELDS and key not in unknown_warned:
                    warnings.warn(f"ignoring unknown field {key!r} (first seen on line {line_no})")
                    unknown_warned.add(key)
            inst = _parse_record(raw, line_no)
            if inst.instance_id in seen_ids:
                raise DataError(f"line {line_no}: duplicate instance_id {inst.instance_id!r}")
            seen_ids.add(inst.instance_id)
            if dim is None:
                dim = inst.embedding.shape[0]
            elif inst.embedding.shape[0] != dim:
                raise DataError(
                    f"line {line_no}: embedding has dimension {inst.embedding.shape[0]}, "
                    f"expected {dim}"
                )
            instances.append(inst)
    if dim is None:
        raise DataError(f"{path}: no records found")
    return Dataset(tuple(instances), dim)


def instance_to_json(inst: ArgumentInstance) -> str:
    record = {
        "instance_id": inst.instance_id,
        "sentence_id": inst.sentence_id,
        "frame": inst.frame,
        "fe_label": inst.fe_label,
        "verb_lemma": inst.verb_lemma,
        "position": inst.position.value,
        "dep_label": inst.dep_label,
        # float() of a float32 is exact, and json emits the shortest
        # round-tripping decimal, so save -> load -> save is byte-stable.
        "embedding": [float(v) for v in inst.embedding],
    }
    return json.dumps(record, ensure_ascii=False)


def save_corpus(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            fh.write(instance_to_json(inst))
            fh.write("\n")


def split_folds(dataset: Dataset, n_folds: int, seed: int) -> FoldSplit:
    """Assign frames to folds, greedy largest-frame-first into the lightest fold.

    Frames are ordered by descending instance count with names sorted inside
    each count group, then each equal-count group is shuffled with ``seed`` so
    the packing is deterministic yet not alphabetical.  Ties between equally
    light folds go to the lowest fold index.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    counts: dict[str, int] = {}
    for inst in dataset.instances:
        counts[inst.frame] = counts.get(inst.frame, 0) + 1
    if len(counts) < n_folds:
        raise DataError(f"dataset has {len(counts)} frames, fewer than {n_folds} folds")

    rng = np.random.default_rng([seed, len(counts)])
    by_count: dict[int, list[str]] = {}
    for frame in sorted(counts):
        by_count.setdefault(counts[frame], []).append(frame)
    ordered: list[str] = []
    for count in sorted(by_count, reverse=True):
        group = by_count[count]
        rng.shuffle(group)
        ordered.extend(group)

    fold_sizes = [0] * n_folds
    assignment: dict[str, int] = {}
    for frame in ordered:
        fold = int(np.argmin(fold_sizes))
        assignment[frame] = fold
        fold_sizes[fold] += counts[frame]
    return FoldSplit(assignment, n_folds)


def dataset_stats(dataset: Dataset) -> DatasetStats:
    frames = set()
    fes = set()
    sentences = set()
    for inst in dataset.instances:
        frames.add(inst.frame)
        fes.add(inst.fe_key)
        sentences.add(inst.sentence_id)
    return DatasetStats(len(frames), len(fes), len(sentences), len(dataset.instances))


_DEP_LABEL_POOL = ("nsubj", "obj", "obl", "iobj", "xcomp", "advcl", "nmod", "ccomp")


# Prototype geometry of the synthetic corpus.  Frame and role components are
# equally weighted, and instance noise lives in a fixed subspace three
# quarters the width of the full space, so a linear metric head can learn to
# project the noise out while raw distances cannot escape it.
_FRAME_WEIGHT = 1.0
_ROLE_WEIGHT = 1.0


def generate_synthetic(config: SynthConfig, seed: int) -> Dataset:
    """Build a role-structured corpus with controllable difficulty.

    Each (frame, FE) pair gets a unit-norm prototype mixing a frame vector
    with a role direction; a configurable fraction of the role directions are
    shared across frames through a per-slot pool, so similar roles in
    different frames stay geometrically close.  Per-instance Gaussian noise
    is drawn inside a dataset-wide nuisance subspace orthogonal to all
    prototypes, and instances are l2-normalized at the end.  noise_scale is
    the per-coordinate standard deviation inside that subspace.
    """
    rng = np.random.default_rng([seed, config.n_frames, config.fes_per_frame])
    d = config.dim
    n_roles = config.fes_per_frame

    q = max(2, min(3 * d // 4, d - 2))
    basis, _ = np.linalg.qr(rng.normal(size=(d, d)))
    nuisance_basis = basis[:, :q]
    signal_basis = basis[:, q:]

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    def signal_unit() -> np.ndarray:
        return signal_basis @ unit(rng.normal(size=d - q))

    pool = np.stack([signal_unit() for _ in range(n_roles)])

    total_slots = config.n_frames * n_roles
    n_shared = int(round(config.shared_role_fraction * total_slots))
    shared_slots = set(rng.choice(total_slots, size=n_shared, replace=False).tolist())

    prototypes = np.zeros((config.n_frames, n_roles, d))
    for f in range(config.n_frames):
        frame_vec = signal_unit()
        for j in range(n_roles):
            if f * n_roles + j in shared_slots:
                role_vec = pool[j]
            else:
                role_vec = signal_unit()
            prototypes[f, j] = unit(_FRAME_WEIGHT * frame_vec + _ROLE_WEIGHT * role_vec)

    instances: list[ArgumentInstance] = []
    for f in range(config.n_frames):
        frame = f"Frame{f:03d}"
        for s in range(config.instances_per_fe):
            sentence_id = f"{frame}.s{s:04d}"
            for j in range(n_roles):
                noise = config.noise_scale * (nuisance_basis @ rng.normal(size=q))
                vec = prototypes[f, j] + noise
                norm = np.linalg.norm(vec)
                if norm == 0.0:
                    vec = prototypes[f, j]
                    norm = 1.0
                if j == 0:
                    pos = Position.BEFORE if rng.random() < 0.9 else Position.AFTER
                else:
                    pos = Position.AFTER if rng.random() < 0.9 else Position.BEFORE
                canonical = _DEP_LABEL_POOL[j % len(_DEP_LABEL_POOL)]
                if rng.random() < 0.9:
                    dep = canonical
                else:
                    others = [x for x in _DEP_LABEL_POOL[:max(n_roles, 3)] if x != canonical]
                    dep = others[int(rng.integers(len(others)))]
                instances.append(
                    ArgumentInstance(
                        instance_id=f"{frame}.s{s:04d}.a{j}",
                        sentence_id=sentence_id,
                        frame=frame,
                        fe_label=f"Role{j}",
                        verb_lemma=f"verb{f:03d}",
                        position=pos,
                        dep_label=dep,
                        embedding=(vec / norm).astype(np.float32),
                    )
                )
    return Dataset(tuple(instances), d)


def normalize_embeddings(dataset: Dataset) -> Dataset:
    """Return a dataset whose embeddings have unit Euclidean norm (within 1e-6).

    Vectors already unit within 1e-6 are passed through untouched, which makes
    the operation idempotent at float32 storage precision.
    """
    out: list[ArgumentInstance] = []
    for inst in dataset.instances:
        norm = float(np.linalg.norm(inst.embedding.astype(np.float64)))
        if norm == 0.0:
            raise DataError(f"instance {inst.instance_id!r}: zero-norm embedding")
        if abs(norm - 1.0) <= 1e-6:
            out.append(inst)
        else:
            scaled = (inst.embedding.astype(np.float64) / norm).astype(np.float32)
            out.append(replace(inst, embedding=scaled))
    return Dataset(tuple(out), dataset.embedding_dim)
