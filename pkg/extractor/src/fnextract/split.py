"""Frame-disjoint fold split over an interchange file.

Same greedy rule the consumer package uses for its own splits: frames are
ordered by descending instance count (names sorted, then seed-shuffled
within equal-count groups) and each goes to the currently lightest fold.
Input lines pass through byte-for-byte, so the union of the fold files
reproduces the input exactly.
"""

from __future__ import annotations

import json

import numpy as np


class SplitError(Exception):
    pass


def read_frame_of_lines(path) -> list[tuple[str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                frame = json.loads(line)["frame"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise SplitError(f"{path} line {line_no}: not an interchange record") from None
            out.append((frame, line))
    if not out:
        raise SplitError(f"{path}: no records")
    return out


def assign_folds(counts: dict[str, int], n_folds: int, seed: int) -> dict[str, int]:
    if len(counts) < n_folds:
        raise SplitError(f"{len(counts)} frames cannot fill {n_folds} folds")
    rng = np.random.default_rng([seed, len(counts)])
    by_count: dict[int, list[str]] = {}
    for frame in sorted(counts):
        by_count.setdefault(counts[frame], []).append(frame)
    ordered: list[str] = []
    for count in sorted(by_count, reverse=True):
        group = by_count[count]
        rng.shuffle(group)
        ordered.extend(group)
    sizes = [0] * n_folds
    assignment = {}
    for frame in ordered:
        fold = int(np.argmin(sizes))
        assignment[frame] = fold
        sizes[fold] += counts[frame]
    return assignment


def split_and_emit(in_path, seed: int, out_prefix: str, n_folds: int = 3) -> list[str]:
    """Write one interchange file per fold; returns the fold file paths."""
    lines = read_frame_of_lines(in_path)
    counts: dict[str, int] = {}
    for frame, _line in lines:
        counts[frame] = counts.get(frame, 0) + 1
    assignment = assign_folds(counts, n_folds, seed)
    paths = [f"{out_prefix}{k}.jsonl" for k in range(n_folds)]
    handles = [open(p, "w", encoding="utf-8") for p in paths]
    try:
        for frame, line in lines:
            handles[assignment[frame]].write(line)
    finally:
        for h in handles:
            h.close()
    return paths
