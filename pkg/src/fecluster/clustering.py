"""Group-average agglomerative clustering and the frame x role merge.

The engine keeps a full pairwise distance matrix (plain Euclidean between
points, maintained under merges by the exact average-linkage recurrence) plus
per-cluster nearest-neighbor caches that are invalidated lazily, giving
O(n^2)-ish time and O(n^2) memory.  Memory ceiling: the matrix costs
8 * n^2 bytes (n = 10,000 -> 0.8 GB, n = 30,000 -> 7.2 GB); callers that may
exceed the cap should go through ``cross_frame_cluster``'s uniform-subsample
fallback.

Ties between equally close cluster pairs are broken by the lexicographically
smallest pair of minimum member ids, so results are deterministic and
independent of merge bookkeeping.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset
from .errors import NumericalError
from .metric_learning.heads import MetricHead

logger = logging.getLogger(__name__)

DEFAULT_INSTANCE_CAP = 30_000

# Slack for the merge-distance monotonicity assertion; group-average linkage
# is reducible, so violations beyond float error indicate a broken update.
_MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class ClusterCount:
    k: int


@dataclass(frozen=True)
class DistanceThreshold:
    theta: float


StopRule = ClusterCount | DistanceThreshold


@dataclass(frozen=True)
class RoleClustering:
    assignment: dict[str, int]
    scope: str  # "global" or "frame:<name>"

    def n_clusters(self) -> int:
        return len(set(self.assignment.values()))


@dataclass(frozen=True)
class FEClustering:
    assignment: dict[str, tuple[str, object]]  # instance -> (frame, role id)

    def n_clusters(self) -> int:
        return len(set(self.assignment.values()))


def distance_matrix_bytes(n: int) -> int:
    """Memory the clustering engine allocates for n points."""
    return 8 * n * n


def _pairwise_euclidean(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    D = np.sqrt(d2)
    np.fill_diagonal(D, np.inf)
    return D


class _Agglomerator:
    """Average-linkage merging over an explicit distance matrix."""

    def __init__(self, ids: list, X: np.ndarray):
        n = len(ids)
        if n == 0:
            raise ValueError("cannot cluster an empty input")
        self.n = n
        self.ids = ids
        order = sorted(range(n), key=lambda i: ids[i])
        self.rank = np.empty(n, dtype=np.int64)
        for r, i in enumerate(order):
            self.rank[i] = r
        self.D = _pairwise_euclidean(np.asarray(X, dtype=np.float64))
        self.alive = np.ones(n, dtype=bool)
        self.size = np.ones(n, dtype=np.int64)
        self.key = self.rank.copy()  # min member rank per cluster
        self.members: list[list[int]] = [[i] for i in range(n)]
        self.merge_distances: list[float] = []
        self.nn_dist = np.full(n, np.inf)
        self.nn_idx = np.full(n, -1, dtype=np.int64)
        if n > 1:
            for i in range(n):
                self._refresh_nn(i)

    def _refresh_nn(self, i: int) -> None:
        row = self.D[i]
        m = row.min()
        if not np.isfinite(m):
            self.nn_dist[i] = np.inf
            self.nn_idx[i] = -1
            return
        candidates = np.flatnonzero(row == m)
        j = candidates[np.argmin(self.key[candidates])]
        self.nn_dist[i] = m
        self.nn_idx[i] = j

    def peek_min(self) -> tuple[float, int, int]:
        """Closest pair under the (distance, sorted min-id pair) order."""
        m = self.nn_dist.min()
        candidates = np.flatnonzero(self.nn_dist == m)
        best = None
        best_key = None
        for i in candidates:
            j = self.nn_idx[i]
            k = (min(self.key[i], self.key[j]), max(self.key[i], self.key[j]))
            if best_key is None or k < best_key:
                best_key = k
                best = (int(i), int(j))
        assert best is not None
        a, b = best
        if self.key[b] < self.key[a]:
            a, b = b, a
        return float(m), a, b

    def merge_once(self) -> float:
        dist, a, b = self.peek_min()
        if self.merge_distances and dist < self.merge_distances[-1] - _MONOTONE_TOL * max(
            1.0, self.merge_distances[-1]
        ):
            raise NumericalError(
                "average-linkage merge distances decreased; distance update is broken"
            )
        self.merge_distances.append(dist)
        sa, sb = self.size[a], self.size[b]
        # Exact group-average recurrence: mean pairwise distance to the union.
        new_row = (sa * self.D[a] + sb * self.D[b]) / (sa + sb)
        new_row[a] = np.inf
        self.D[a] = new_row
        self.D[:, a] = new_row
        self.D[b] = np.inf
        self.D[:, b] = np.inf
        self.alive[b] = False
        self.size[a] = sa + sb
        self.key[a] = min(self.key[a], self.key[b])
        self.members[a].extend(self.members[b])
        self.members[b] = []
        self.nn_dist[b] = np.inf
        self.nn_idx[b] = -1
        # Rows whose cached neighbor was touched, or that the merged cluster
        # now ties or beats, must be refreshed.
        stale = (self.nn_idx == a) | (self.nn_idx == b)
        stale |= self.D[:, a] <= self.nn_dist
        stale &= self.alive
        stale[a] = True
        for i in np.flatnonzero(stale):
            self._refresh_nn(int(i))
        return dist

    def n_clusters(self) -> int:
        return int(self.alive.sum())

    def run(self, stop: StopRule) -> None:
        if isinstance(stop, ClusterCount):
            if stop.k < 1:
                raise ValueError("cluster count must be at least 1")
            if stop.k > self.n:
                raise ValueError(f"cannot form {stop.k} clusters from {self.n} points")
            while self.n_clusters() > stop.k:
                self.merge_once()
        else:
            if stop.theta <= 0:
                raise ValueError("distance threshold must be positive")
            while self.n_clusters() > 1:
                dist, _, _ = self.peek_min()
                if dist >= stop.theta:
                    break
                self.merge_once()

    def run_to_completion(self) -> list[float]:
        """Merge all the way to one cluster; returns the merge distances."""
        while self.n_clusters() > 1:
            self.merge_once()
        return self.merge_distances

    def partition(self) -> list[list[int]]:
        return [self.members[i] for i in np.flatnonzero(self.alive)]


def group_average_cluster(vectors: list[tuple[object, np.ndarray]], stop: StopRule) -> RoleClustering:
    """Agglomerative average-linkage clustering of (id, vector) pairs.

    Starts from singletons, always merges the pair with the smallest mean
    pairwise Euclidean distance, and stops per ``stop``.  Cluster ids are
    dense from 0 in order of first appearance in the input.
    """
    if not vectors:
        raise ValueError("cannot cluster an empty input")
    ids = [v[0] for v in vectors]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in clustering input")
    X = np.stack([np.asarray(v[1], dtype=np.float64) for v in vectors])
    engine = _Agglomerator(ids, X)
    engine.run(stop)
    cluster_of: dict[object, int] = {}
    raw = {}
    for cluster_index, members in enumerate(engine.partition()):
        for m in members:
            raw[m] = cluster_index
    relabel: dict[int, int] = {}
    for i in range(len(ids)):
        c = raw[i]
        if c not in relabel:
            relabel[c] = len(relabel)
        cluster_of[ids[i]] = relabel[c]
    return RoleClustering(cluster_of, "global")


def merge_sequence(vectors: list[tuple[object, np.ndarray]]) -> list[float]:
    """Distances of every merge down to one cluster (non-decreasing)."""
    if not vectors:
        raise ValueError("cannot cluster an empty input")
    ids = [v[0] for v in vectors]
    X = np.stack([np.asarray(v[1], dtype=np.float64) for v in vectors])
    return _Agglomerator(ids, X).run_to_completion()


def role_cluster_count(dev_stats) -> int:
    """Global role-cluster count: FEs per frame in the dev split, rounded half-up."""
    if dev_stats.n_frames < 1:
        raise ValueError("dev split has no frames")
    ratio = dev_stats.n_fes / dev_stats.n_frames
    return max(1, int(np.floor(ratio + 0.5)))


def _frame_items(dataset: Dataset, head: MetricHead):
    Y = head.embed(dataset.matrix())
    for frame, idxs in dataset.indices_by_frame().items():
        items = [(dataset.instances[i].instance_id, Y[i]) for i in idxs]
        yield frame, items


def calibrate_threshold(dev_set: Dataset, head: MetricHead, steps: int = 200) -> float:
    """Shared distance threshold tuned so the mean per-frame cluster count on
    the dev split is closest to the mean number of distinct FEs per frame.

    The candidate grid descends uniformly in ``steps`` steps from the largest
    observed within-frame point distance towards (but excluding) zero; ties
    on the count criterion keep the larger threshold.
    """
    if len(dev_set) == 0:
        raise ValueError("dev set must be non-empty")
    frame_fe_counts = {}
    for inst in dev_set.instances:
        frame_fe_counts.setdefault(inst.frame, set()).add(inst.fe_label)
    target = float(np.mean([len(v) for v in frame_fe_counts.values()]))

    frame_sizes = []
    frame_merges = []
    max_dist = 0.0
    for _frame, items in _frame_items(dev_set, head):
        X = np.stack([v for _, v in items])
        if len(items) > 1:
            D = _pairwise_euclidean(X)
            finite = D[np.isfinite(D)]
            if finite.size:
                max_dist = max(max_dist, float(finite.max()))
        frame_sizes.append(len(items))
        frame_merges.append(np.asarray(merge_sequence(items)) if len(items) > 1 else np.asarray([]))

    if max_dist == 0.0:
        # Every frame collapsed to identical points; any threshold gives one
        # cluster per frame, which is the best achievable.
        return 1.0

    grid = np.linspace(max_dist, 0.0, steps, endpoint=False)
    sizes = np.asarray(frame_sizes)
    best_theta = None
    best_err = None
    for theta in grid:
        # Merges with distance < theta happen; counts follow from the
        # monotone merge sequence without re-running the engine.
        counts = [
            n - int(np.searchsorted(m, theta, side="left"))
            for n, m in zip(sizes, frame_merges)
        ]
        err = abs(float(np.mean(counts)) - target)
        if best_err is None or err < best_err:
            best_err = err
            best_theta = float(theta)
    assert best_theta is not None
    return best_theta


def cross_frame_cluster(
    test_set: Dataset,
    head: MetricHead,
    k_roles: int,
    max_instances: int = DEFAULT_INSTANCE_CAP,
    seed: int = 0,
) -> FEClustering:
    """Cluster all instances globally into k role clusters, then attach frames.

    Above ``max_instances`` the engine would need more than
    ``distance_matrix_bytes(n)`` bytes, so a uniform subsample is clustered
    instead and the remaining instances join the role cluster with the
    smallest mean distance to its members (the same affinity the linkage
    optimizes).
    """
    if len(test_set) == 0:
        raise ValueError("test set must be non-empty")
    if k_roles < 1:
        raise ValueError("k_roles must be at least 1")
    Y = head.embed(test_set.matrix())
    n = len(test_set)
    ids = test_set.ids
    if n <= max_instances:
        roles = group_average_cluster([(ids[i], Y[i]) for i in range(n)], ClusterCount(k_roles))
        role_of = roles.assignment
    else:
        warnings.warn(
            f"cross-frame clustering over {n} instances exceeds the cap of "
            f"{max_instances} (~{distance_matrix_bytes(max_instances) / 2**30:.1f} GiB); "
            f"clustering a uniform subsample"
        )
        rng = np.random.default_rng([seed, n])
        sample = np.sort(rng.choice(n, size=max_instances, replace=False))
        roles = group_average_cluster(
            [(ids[i], Y[i]) for i in sample], ClusterCount(k_roles)
        )
        role_of = dict(roles.assignment)
        by_cluster: dict[int, list[int]] = {}
        for i in sample:
            by_cluster.setdefault(role_of[ids[i]], []).append(i)
        rest = np.setdiff1d(np.arange(n), sample, assume_unique=True)
        cluster_ids = sorted(by_cluster)
        sample_sq = (Y[sample] ** 2).sum(axis=1)
        for start in range(0, len(rest), 512):
            chunk = rest[start:start + 512]
            Yc = Y[chunk]
            d2 = (Yc ** 2).sum(axis=1)[:, None] + sample_sq[None, :] - 2.0 * (Yc @ Y[sample].T)
            np.maximum(d2, 0.0, out=d2)
            dists = np.sqrt(d2)  # (chunk, n_sampled)
            affinities = np.empty((len(chunk), len(cluster_ids)))
            col_of_sample = {int(s): pos for pos, s in enumerate(sample)}
            for col, c in enumerate(cluster_ids):
                member_cols = [col_of_sample[i] for i in by_cluster[c]]
                affinities[:, col] = dists[:, member_cols].mean(axis=1)
            nearest = np.argmin(affinities, axis=1)
            for row, i in enumerate(chunk):
                role_of[ids[i]] = cluster_ids[int(nearest[row])]
    gold_frames = {inst.instance_id: inst.frame for inst in test_set.instances}
    return merge_frame_role(gold_frames, RoleClustering(role_of, "global"))


def intra_frame_cluster(test_set: Dataset, head: MetricHead, theta: float) -> FEClustering:
    """Cluster each frame's instances separately under one shared threshold."""
    if len(test_set) == 0:
        raise ValueError("test set must be non-empty")
    if theta <= 0:
        raise ValueError("theta must be positive")
    assignment: dict[str, tuple[str, object]] = {}
    for frame, items in _frame_items(test_set, head):
        roles = group_average_cluster(items, DistanceThreshold(theta))
        for inst_id, role in roles.assignment.items():
            assignment[inst_id] = (frame, role)
    return FEClustering(assignment)


def merge_frame_role(gold_frames: dict[str, str], roles: RoleClustering) -> FEClustering:
    """Final label of an instance = (its true frame, its role cluster)."""
    if set(gold_frames) != set(roles.assignment):
        missing = set(gold_frames) ^ set(roles.assignment)
        raise ValueError(f"frame map and role clustering disagree on instances: {sorted(missing)[:5]}")
    return FEClustering({
        inst: (gold_frames[inst], roles.assignment[inst]) for inst in gold_frames
    })


def save_clustering(pred: FEClustering, dataset: Dataset, path) -> None:
    """JSON-lines export: one {instance_id, frame, role_cluster, final_label} per line."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            frame, role = pred.assignment[inst.instance_id]
            record = {
                "instance_id": inst.instance_id,
                "frame": frame,
                "role_cluster": role,
                "final_label": f"{frame}/{role}",
            }
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
