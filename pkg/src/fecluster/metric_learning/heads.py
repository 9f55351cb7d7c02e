"""Trainable projection head and per-label-space class weights.

The head maps a raw argument embedding x to y = l2_normalize(W x + b).
Because the output is normalized, the head is invariant to positive scaling
of (W, b); an identity-initialized head therefore reproduces the raw
normalized embedding space until training moves it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Dataset
from ..errors import NumericalError


@dataclass
class MetricHead:
    W: np.ndarray  # (d_out, d_in), float64
    b: np.ndarray  # (d_out,), float64

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError("W must be (d_out, d_in) and b must be (d_out,)")
        if self.d_out < 2:
            raise ValueError("d_out must be at least 2")

    @property
    def d_in(self) -> int:
        return self.W.shape[1]

    @property
    def d_out(self) -> int:
        return self.W.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "MetricHead":
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def initial(cls, dim: int, rng: np.random.Generator, jitter: float = 0.01) -> "MetricHead":
        return cls(np.eye(dim) + jitter * rng.normal(size=(dim, dim)), np.zeros(dim))

    def copy(self) -> "MetricHead":
        return MetricHead(self.W.copy(), self.b.copy())

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Project one vector onto the unit sphere of the learned space."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d_in,):
            raise ValueError(f"expected input of dimension {self.d_in}, got {x.shape}")
        z = self.W @ x + self.b
        norm = np.linalg.norm(z)
        if norm == 0.0:
            raise NumericalError("head produced a zero vector; cannot normalize")
        return z / norm

    def embed(self, X: np.ndarray) -> np.ndarray:
        """Project rows of X; returns float64 unit-norm rows."""
        X = np.asarray(X, dtype=np.float64)
        Z = X @ self.W.T + self.b
        norms = np.linalg.norm(Z, axis=1)
        if np.any(norms == 0.0):
            raise NumericalError("head produced a zero vector; cannot normalize")
        return Z / norms[:, None]

    def embed_with_backward(self, X: np.ndarray):
        """Forward pass that also returns a closure mapping dL/dY to (dW, db)."""
        X = np.asarray(X, dtype=np.float64)
        Z = X @ self.W.T + self.b
        norms = np.linalg.norm(Z, axis=1)
        if np.any(norms == 0.0):
            raise NumericalError("head produced a zero vector; cannot normalize")
        Y = Z / norms[:, None]

        def backward(dY: np.ndarray):
            dZ = (dY - (dY * Y).sum(axis=1, keepdims=True) * Y) / norms[:, None]
            return dZ.T @ X, dZ.sum(axis=0)

        return Y, backward


def embed_dataset(head: MetricHead, dataset: Dataset) -> np.ndarray:
    return head.embed(dataset.matrix())


@dataclass
class ArcFaceHead:
    """Class weights for the angular-margin loss, one matrix per label space.

    Cross-frame training uses a single space whose classes are all
    (frame, fe_label) pairs; intra-frame training uses one space per frame
    whose classes are that frame's FE labels.  Rows are l2-normalized at the
    point of use, so the stored weights are unconstrained.
    """

    spaces: dict[str, list]  # space id -> ordered class labels
    weights: dict[str, np.ndarray]  # space id -> (n_classes, d_out) float64

    def __post_init__(self):
        for name, labels in self.spaces.items():
            w = self.weights.get(name)
            if w is None or w.shape[0] != len(labels):
                raise ValueError(f"label space {name!r}: weights do not match classes")
            self.weights[name] = np.asarray(w, dtype=np.float64)

    @classmethod
    def create(cls, spaces: dict[str, list], d_out: int, rng: np.random.Generator) -> "ArcFaceHead":
        weights = {}
        for name in spaces:
            w = rng.normal(size=(len(spaces[name]), d_out))
            weights[name] = w / np.linalg.norm(w, axis=1, keepdims=True)
        return cls(dict(spaces), weights)

    def copy(self) -> "ArcFaceHead":
        return ArcFaceHead(
            {k: list(v) for k, v in self.spaces.items()},
            {k: w.copy() for k, w in self.weights.items()},
        )

    def class_index(self, space: str, label) -> int:
        try:
            return self.spaces[space].index(label)
        except KeyError:
            raise KeyError(f"unknown label space {space!r}") from None
        except ValueError:
            raise KeyError(f"label {label!r} not in space {space!r}") from None
