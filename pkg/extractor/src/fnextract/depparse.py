"""Dependency-label providers for argument spans.

Parser specs:
  "heuristic"       position- and preposition-based labels; offline, crude,
                    but reproduces the canonical subject/object/oblique split
  "stanza[:lang]"   neural dependency parse; label of the span's head token
                    (the token whose governor lies outside the span)
"""

from __future__ import annotations

import re

_PREPOSITIONS = {
    "to", "for", "with", "by", "from", "in", "on", "at", "of", "into",
    "onto", "about", "over", "under", "through", "as", "across", "against",
    "toward", "towards", "upon", "within", "without", "between", "among",
}

_WORD_RE = re.compile(r"\w+", re.UNICODE)


class HeuristicParser:
    """No-model fallback: spans before the verb look like subjects, spans
    after it look like objects unless they open with a preposition."""

    def label_for_span(self, text: str, span_ranges, target_start: int) -> str:
        span_start = min(start for start, _stop in span_ranges)
        chunks = []
        for start, stop in span_ranges:
            chunks.append(text[start:stop])
        words = _WORD_RE.findall(" ".join(chunks).lower())
        if span_start < target_start:
            return "nsubj"
        if words and words[0] in _PREPOSITIONS:
            return "obl"
        return "obj"


class StanzaParser:
    def __init__(self, lang: str = "en"):
        import stanza

        self.nlp = stanza.Pipeline(
            lang, processors="tokenize,pos,lemma,depparse",
            tokenize_no_ssplit=True, verbose=False,
        )
        self._cache: dict[str, list] = {}

    def _words(self, text: str):
        if text not in self._cache:
            doc = self.nlp(text)
            words = [w for sent in doc.sentences for w in sent.words]
            self._cache[text] = words
        return self._cache[text]

    def label_for_span(self, text: str, span_ranges, target_start: int) -> str:
        words = self._words(text)
        inside = [
            w for w in words
            if any(w.start_char < stop and start < w.end_char
                   for start, stop in span_ranges)
        ]
        if not inside:
            return "dep"
        ids = {w.id for w in inside}
        for w in inside:  # head = word governed from outside the span
            if w.head == 0 or w.head not in ids:
                return w.deprel
        return inside[0].deprel


def get_parser(spec: str):
    if spec == "heuristic":
        return HeuristicParser()
    if spec == "stanza" or spec.startswith("stanza:"):
        lang = spec.split(":", 1)[1] if ":" in spec else "en"
        return StanzaParser(lang)
    raise ValueError(f"unknown parser spec {spec!r}")
