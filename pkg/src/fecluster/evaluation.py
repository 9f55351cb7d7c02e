"""Clustering metrics (purity family, B-cubed family) and ranking recall.

Purity sums, over predicted clusters, the size of the largest overlapping
gold class; inverse purity swaps the roles of prediction and gold.  B-cubed
precision/recall average per-instance overlap ratios between an instance's
predicted cluster and its gold class.  Both F-scores are harmonic means with
hm(0, x) defined as 0.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import TYPE_CHECKING, Hashable, Mapping

import numpy as np

if TYPE_CHECKING:
    from .corpus import Dataset
    from .metric_learning.heads import MetricHead

logger = logging.getLogger(__name__)

GoldLabeling = Mapping[str, Hashable]


@dataclass(frozen=True)
class EvalReport:
    n_clusters: int
    pu: float
    ipu: float
    pif: float
    bcp: float
    bcr: float
    bcf: float

    def tsv_row(self, method: str, model: str) -> str:
        cells = [method, model, _format_count(self.n_clusters)]
        cells += [f"{100.0 * v:.1f}" for v in (self.pu, self.ipu, self.pif,
                                               self.bcp, self.bcr, self.bcf)]
        return "\t".join(cells)


TSV_HEADER = "\t".join(["method", "model", "#C", "Pu", "iPu", "PiF", "BcP", "BcR", "BcF"])


def _format_count(value) -> str:
    f = float(value)
    return str(int(f)) if f == int(f) else f"{f:.1f}"


def harmonic_mean(a: float, b: float) -> float:
    if a <= 0.0 or b <= 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def _check_same_instances(pred: Mapping[str, Hashable], gold: GoldLabeling) -> None:
    if not pred:
        raise ValueError("cannot evaluate an empty instance set")
    if set(pred) != set(gold):
        raise ValueError("prediction and gold labeling cover different instances")


def purity(pred, gold: GoldLabeling) -> float:
    """(1/N) * sum over predicted clusters of the majority gold-class overlap."""
    assignment = _assignment(pred)
    _check_same_instances(assignment, gold)
    clusters: dict[Hashable, Counter] = defaultdict(Counter)
    for inst, label in assignment.items():
        clusters[label][gold[inst]] += 1
    n = len(assignment)
    return sum(max(c.values()) for c in clusters.values()) / n


def inverse_purity(pred, gold: GoldLabeling) -> float:
    """Purity with prediction and gold exchanged."""
    assignment = _assignment(pred)
    _check_same_instances(assignment, gold)
    return purity(dict(gold), assignment)


def _assignment(pred) -> dict[str, Hashable]:
    if hasattr(pred, "assignment"):
        return dict(pred.assignment)
    return dict(pred)


def _bcubed(pred, gold: GoldLabeling) -> tuple[float, float]:
    assignment = _assignment(pred)
    _check_same_instances(assignment, gold)
    cluster_sizes = Counter(assignment.values())
    class_sizes = Counter(gold.values())
    overlap = Counter((assignment[i], gold[i]) for i in assignment)
    n = len(assignment)
    precision = sum(cnt * cnt / cluster_sizes[c] for (c, _l), cnt in overlap.items()) / n
    recall = sum(cnt * cnt / class_sizes[l] for (_c, l), cnt in overlap.items()) / n
    return precision, recall


def bcubed_precision(pred, gold: GoldLabeling) -> float:
    return _bcubed(pred, gold)[0]


def bcubed_recall(pred, gold: GoldLabeling) -> float:
    return _bcubed(pred, gold)[1]


def evaluate(pred, gold: GoldLabeling) -> EvalReport:
    assignment = _assignment(pred)
    pu = purity(assignment, gold)
    ipu = inverse_purity(assignment, gold)
    bcp, bcr = _bcubed(assignment, gold)
    return EvalReport(
        n_clusters=len(set(assignment.values())),
        pu=pu,
        ipu=ipu,
        pif=harmonic_mean(pu, ipu),
        bcp=bcp,
        bcr=bcr,
        bcf=harmonic_mean(bcp, bcr),
    )


def ranking_recall(instances: "Dataset", head: "MetricHead") -> float:
    """Mean recall of same-FE instances among the top-k cosine neighbors.

    For each query, the remaining instances are ranked by cosine similarity
    of their head embeddings (ties broken by instance_id); k is the number of
    true same-(frame, FE) peers and the score is the fraction of them in the
    top k.  Queries with no peer are skipped and counted.
    """
    n = len(instances)
    if n < 2:
        raise ValueError("ranking recall needs at least two instances")
    Y = head.embed(instances.matrix())
    Yn = Y / np.linalg.norm(Y, axis=1, keepdims=True)

    ids = instances.ids
    id_rank = np.argsort(np.argsort(np.asarray(ids)))
    fe_keys = [inst.fe_key for inst in instances.instances]
    groups: dict[tuple[str, str], np.ndarray] = {}
    for key in set(fe_keys):
        groups[key] = np.asarray([i for i, k in enumerate(fe_keys) if k == key])

    scores = []
    skipped = 0
    block = 2048  # keeps the similarity slab at O(block * n) memory
    for start in range(0, n, block):
        sims = Yn[start:start + block] @ Yn.T
        for q in range(start, min(start + block, n)):
            peers = groups[fe_keys[q]]
            k = len(peers) - 1
            if k == 0:
                skipped += 1
                continue
            sim_row = sims[q - start].copy()
            sim_row[q] = -np.inf
            order = np.lexsort((id_rank, -sim_row))
            top = set(order[:k].tolist())
            hit = sum(1 for p in peers if p != q and int(p) in top)
            scores.append(hit / k)
    if skipped:
        logger.warning("ranking recall skipped %d queries with no same-FE peer", skipped)
    if not scores:
        raise ValueError("no query had a same-FE peer")
    return float(np.mean(scores))
