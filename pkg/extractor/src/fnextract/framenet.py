"""Readers for the FrameNet 1.7 release directory (fndata-1.7).

Only what the extractor needs is modeled: frame files yield the core FE
inventory per frame; lexical-unit files yield exemplar sentences of verbal
LUs with the target span and the FE spans of the primary annotation layer.
Offsets in the XML are inclusive character indices; they are converted to
half-open [start, stop) ranges here.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator


class FrameNetError(Exception):
    """The release directory is missing or not laid out as expected."""


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _iter_elements(root: ET.Element, name: str) -> Iterator[ET.Element]:
    for el in root.iter():
        if _local(el.tag) == name:
            yield el


@dataclass(frozen=True)
class Span:
    start: int  # inclusive
    stop: int  # exclusive

    def overlaps(self, start: int, stop: int) -> bool:
        return self.start < stop and start < self.stop


@dataclass(frozen=True)
class FESpan:
    name: str
    spans: tuple[Span, ...]  # discontinuous annotations carry several ranges


@dataclass(frozen=True)
class ExemplarSentence:
    sentence_id: str
    text: str
    target: Span
    fe_spans: tuple[FESpan, ...]
    n_null_instantiated: int


@dataclass(frozen=True)
class LexicalUnit:
    lu_id: str
    name: str  # e.g. "donate.v"
    frame: str
    sentences: tuple[ExemplarSentence, ...]

    @property
    def lemma(self) -> str:
        return self.name.rsplit(".", 1)[0]


@dataclass
class FrameIndex:
    core_fes: dict[str, set[str]] = field(default_factory=dict)

    def is_core(self, frame: str, fe: str) -> bool:
        return fe in self.core_fes.get(frame, set())


def read_frames(framenet_dir) -> FrameIndex:
    frame_dir = Path(framenet_dir) / "frame"
    if not frame_dir.is_dir():
        raise FrameNetError(f"{framenet_dir}: no frame/ directory")
    index = FrameIndex()
    for path in sorted(frame_dir.glob("*.xml")):
        root = ET.parse(path).getroot()
        if _local(root.tag) != "frame":
            continue
        frame_name = root.get("name")
        if not frame_name:
            continue
        cores = set()
        for fe in _iter_elements(root, "FE"):
            if fe.get("coreType") == "Core" and fe.get("name"):
                cores.add(fe.get("name"))
        index.core_fes[frame_name] = cores
    if not index.core_fes:
        raise FrameNetError(f"{framenet_dir}: no frame definitions found")
    return index


def _parse_sentence(sent_el: ET.Element) -> ExemplarSentence | None:
    sent_id = sent_el.get("ID")
    text = None
    for t in _iter_elements(sent_el, "text"):
        text = t.text or ""
        break
    if sent_id is None or text is None:
        return None

    for aset in _iter_elements(sent_el, "annotationSet"):
        target_spans: list[Span] = []
        fe_groups: dict[str, list[Span]] = {}
        n_null = 0
        for layer in _iter_elements(aset, "layer"):
            layer_name = layer.get("name")
            if layer_name == "Target":
                for label in _iter_elements(layer, "label"):
                    if label.get("start") is not None and label.get("end") is not None:
                        target_spans.append(Span(int(label.get("start")),
                                                 int(label.get("end")) + 1))
            elif layer_name == "FE" and layer.get("rank", "1") == "1":
                for label in _iter_elements(layer, "label"):
                    name = label.get("name")
                    if not name:
                        continue
                    if label.get("itype"):
                        n_null += 1  # null instantiation, no surface span
                        continue
                    if label.get("start") is None or label.get("end") is None:
                        continue
                    fe_groups.setdefault(name, []).append(
                        Span(int(label.get("start")), int(label.get("end")) + 1))
        if not target_spans:
            continue
        target = min(target_spans, key=lambda s: s.start)
        fe_spans = tuple(
            FESpan(name, tuple(sorted(spans, key=lambda s: s.start)))
            for name, spans in sorted(fe_groups.items(),
                                      key=lambda kv: kv[1][0].start)
        )
        return ExemplarSentence(sent_id, text, target, fe_spans, n_null)
    return None


def read_verbal_lus(framenet_dir) -> Iterator[LexicalUnit]:
    """Lexical units with verb POS, with their exemplar sentences, in
    deterministic (file name, document order) order."""
    lu_dir = Path(framenet_dir) / "lu"
    if not lu_dir.is_dir():
        raise FrameNetError(f"{framenet_dir}: no lu/ directory")
    for path in sorted(lu_dir.glob("*.xml")):
        root = ET.parse(path).getroot()
        if _local(root.tag) != "lexUnit":
            continue
        if root.get("POS") != "V":
            continue
        frame = root.get("frame")
        name = root.get("name") or ""
        if not frame:
            continue
        sentences = []
        for sent_el in _iter_elements(root, "sentence"):
            parsed = _parse_sentence(sent_el)
            if parsed is not None:
                sentences.append(parsed)
        yield LexicalUnit(root.get("ID") or path.stem, name, frame, tuple(sentences))
