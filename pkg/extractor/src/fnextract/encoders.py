"""Sentence encoders producing per-token vectors with character offsets.

Encoder specs:
  "hash:<dim>"        deterministic per-token pseudo-embeddings; no model
                      download, intended for tests and plumbing checks
  "hf:<name-or-path>" pretrained transformer via Hugging Face; final hidden
                      layer, one vector per sub-token
  anything else       treated as an hf model name
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class EncodedToken:
    text: str
    start: int
    stop: int


@dataclass
class EncodedSentence:
    tokens: list[EncodedToken]
    vectors: np.ndarray  # (n_tokens, dim) float32
    truncated: bool = False


class HashEncoder:
    """Deterministic stand-in encoder: each surface token maps to a fixed
    pseudo-random unit vector.  Context-free, but exercises the full span
    alignment and pooling path without any model weights."""

    def __init__(self, dim: int = 32):
        if dim < 4:
            raise ValueError("hash encoder dimension must be at least 4")
        self.dim = dim

    def encode(self, text: str) -> EncodedSentence:
        tokens = [EncodedToken(m.group(), m.start(), m.end())
                  for m in _TOKEN_RE.finditer(text)]
        vectors = np.zeros((len(tokens), self.dim), dtype=np.float32)
        for i, tok in enumerate(tokens):
            digest = hashlib.blake2b(tok.text.lower().encode(), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            v = rng.normal(size=self.dim)
            vectors[i] = (v / np.linalg.norm(v)).astype(np.float32)
        return EncodedSentence(tokens, vectors)


class HuggingFaceEncoder:
    """Frozen pretrained encoder; averages nothing itself, just exposes the
    final-hidden-layer vector of every sub-token with its character span."""

    def __init__(self, name_or_path: str, max_length: int = 512):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        self.model = AutoModel.from_pretrained(name_or_path)
        self.model.eval()
        self.max_length = min(
            max_length,
            getattr(self.model.config, "max_position_embeddings", max_length),
        )

    def encode(self, text: str) -> EncodedSentence:
        enc = self.tokenizer(
            text,
            return_offsets_mapping=True,
            truncation=True,
            max_length=self.max_length,
        )
        input_ids = enc["input_ids"]
        with self._torch.no_grad():
            out = self.model(
                input_ids=self._torch.tensor([input_ids]),
                attention_mask=self._torch.tensor([enc["attention_mask"]]),
            )
        hidden = out.last_hidden_state[0].numpy()
        tokens = []
        vectors = []
        for pos, (start, stop) in enumerate(enc["offset_mapping"]):
            if stop <= start:
                continue  # special tokens carry empty offsets
            tokens.append(EncodedToken(text[start:stop], start, stop))
            vectors.append(hidden[pos])
        mat = (np.stack(vectors) if vectors
               else np.zeros((0, hidden.shape[1]), dtype=np.float32))
        return EncodedSentence(tokens, mat.astype(np.float32),
                               truncated=len(input_ids) >= self.max_length)


def get_encoder(spec: str):
    if spec.startswith("hash:"):
        return HashEncoder(int(spec.split(":", 1)[1]))
    if spec.startswith("hf:"):
        return HuggingFaceEncoder(spec.split(":", 1)[1])
    return HuggingFaceEncoder(spec)
