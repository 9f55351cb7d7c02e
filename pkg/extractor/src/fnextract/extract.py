"""Extraction pipeline: FrameNet exemplars -> interchange JSON lines.

One output record per core-FE span of a verb-evoked exemplar annotation.
The embedding is the mean of the encoder's final-layer sub-token vectors
over the span (discontinuous spans pool over the union of their ranges);
position records whether the span starts before or after the target verb;
the dependency label comes from the configured parser.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict

import numpy as np

from .framenet import FrameIndex, read_frames, read_verbal_lus

logger = logging.getLogger(__name__)


@dataclass
class ExtractionStats:
    n_frames: int = 0
    n_fes: int = 0
    n_examples: int = 0
    n_instances: int = 0
    skipped_noncore_spans: int = 0
    skipped_null_instantiations: int = 0
    dropped_unalignable_spans: int = 0
    truncated_sentences: int = 0


def _record(instance_id, sentence_id, frame, fe, lemma, position, dep, vector):
    return json.dumps({
        "instance_id": instance_id,
        "sentence_id": sentence_id,
        "frame": frame,
        "fe_label": fe,
        "verb_lemma": lemma,
        "position": position,
        "dep_label": dep,
        "embedding": [float(v) for v in np.asarray(vector, dtype=np.float32)],
    }, ensure_ascii=False)


def extract(framenet_dir, encoder, parser, out_path,
            frame_index: FrameIndex | None = None) -> ExtractionStats:
    """Write interchange lines for every core-FE argument span and return the
    corpus statistics.  Deterministic: lexical units are processed in file
    order and spans in surface order."""
    index = frame_index or read_frames(framenet_dir)
    stats = ExtractionStats()
    frames_seen: set[str] = set()
    fes_seen: set[tuple[str, str]] = set()
    examples_seen: set[str] = set()

    with open(out_path, "w", encoding="utf-8") as fh:
        for lu in read_verbal_lus(framenet_dir):
            for sent in lu.sentences:
                encoded = encoder.encode(sent.text)
                if encoded.truncated:
                    stats.truncated_sentences += 1
                    logger.warning("sentence %s truncated by the encoder", sent.sentence_id)
                stats.skipped_null_instantiations += sent.n_null_instantiated
                span_idx = 0
                for fe_span in sent.fe_spans:
                    if not index.is_core(lu.frame, fe_span.name):
                        stats.skipped_noncore_spans += 1
                        continue
                    ranges = [(s.start, s.stop) for s in fe_span.spans]
                    rows = [
                        i for i, tok in enumerate(encoded.tokens)
                        if any(tok.start < stop and start < tok.stop
                               for start, stop in ranges)
                    ]
                    if not rows:
                        stats.dropped_unalignable_spans += 1
                        continue
                    vector = encoded.vectors[rows].astype(np.float64).mean(axis=0)
                    span_start = min(start for start, _ in ranges)
                    position = "before" if span_start < sent.target.start else "after"
                    dep = parser.label_for_span(sent.text, ranges, sent.target.start)
                    instance_id = f"{sent.sentence_id}.{span_idx}"
                    fh.write(_record(instance_id, sent.sentence_id, lu.frame,
                                     fe_span.name, lu.lemma, position, dep, vector))
                    fh.write("\n")
                    span_idx += 1
                    stats.n_instances += 1
                    frames_seen.add(lu.frame)
                    fes_seen.add((lu.frame, fe_span.name))
                    examples_seen.add(sent.sentence_id)

    stats.n_frames = len(frames_seen)
    stats.n_fes = len(fes_seen)
    stats.n_examples = len(examples_seen)
    return stats


def write_stats(stats: ExtractionStats, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(stats), fh, sort_keys=True, indent=1)
        fh.write("\n")
