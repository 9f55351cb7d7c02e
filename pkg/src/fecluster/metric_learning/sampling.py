"""Triplet mining under the cross-frame and intra-frame negative constraints.

Cross-frame: a negative is any instance with a different (frame, FE) pair,
whether the frame differs or only the FE does.  Intra-frame: negatives are
restricted to instances of the same frame carrying a different FE label.
One triplet is drawn per eligible anchor per epoch, uniformly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..corpus import Dataset

logger = logging.getLogger(__name__)

MODES = ("cross", "intra")


@dataclass(frozen=True)
class Triplet:
    anchor_id: str
    positive_id: str
    negative_id: str


def sample_triplets(dataset: Dataset, mode: str, epoch: int, seed: int) -> list[Triplet]:
    """One uniform triplet per eligible anchor; deterministic given (seed, epoch).

    Anchors whose (frame, FE) group is a singleton, or whose negative pool is
    empty under ``mode``, are skipped and counted.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rng = np.random.default_rng([seed, epoch, 0 if mode == "cross" else 1])

    by_fe = dataset.indices_by_fe()
    by_frame = dataset.indices_by_frame()
    n = len(dataset)

    neg_pools: dict[tuple[str, str], np.ndarray] = {}
    all_indices = np.arange(n)
    for fe_key, members in by_fe.items():
        if mode == "cross":
            mask = np.ones(n, dtype=bool)
            mask[members] = False
            neg_pools[fe_key] = all_indices[mask]
        else:
            frame_members = by_frame[fe_key[0]]
            pool = [i for i in frame_members if dataset.instances[i].fe_key != fe_key]
            neg_pools[fe_key] = np.asarray(pool, dtype=int)

    triplets: list[Triplet] = []
    skipped = 0
    for idx, inst in enumerate(dataset.instances):
        group = by_fe[inst.fe_key]
        pool = neg_pools[inst.fe_key]
        if len(group) < 2 or len(pool) == 0:
            skipped += 1
            continue
        others = [g for g in group if g != idx]
        pos_idx = others[int(rng.integers(len(others)))]
        neg_idx = int(pool[int(rng.integers(len(pool)))])
        triplets.append(
            Triplet(
                anchor_id=inst.instance_id,
                positive_id=dataset.instances[pos_idx].instance_id,
                negative_id=dataset.instances[neg_idx].instance_id,
            )
        )
    if skipped:
        logger.warning("triplet sampling skipped %d anchors with no positive or negative", skipped)
    return triplets
