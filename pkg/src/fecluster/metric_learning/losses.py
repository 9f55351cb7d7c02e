"""Margin losses with closed-form gradients.

Both losses operate on unit-norm embeddings.  The triplet loss uses squared
Euclidean distance; the angular-margin (ArcFace) loss adds a margin to the
target-class angle on a scaled cosine-logit softmax.  Gradients are exact
derivatives of the implemented expressions, verified elsewhere against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heads import ArcFaceHead

_COS_LIMIT = 1.0 - 1e-7


def _check_triplet_args(y_a, y_p, y_n, m):
    if y_a.shape != y_p.shape or y_a.shape != y_n.shape:
        raise ValueError("triplet vectors must share one dimension")
    if m < 0:
        raise ValueError("margin must be non-negative")


def triplet_loss(y_a: np.ndarray, y_p: np.ndarray, y_n: np.ndarray, m: float) -> float:
    """max(D(a,p) - D(a,n) + m, 0) with D the squared Euclidean distance."""
    y_a, y_p, y_n = (np.asarray(v, dtype=np.float64) for v in (y_a, y_p, y_n))
    _check_triplet_args(y_a, y_p, y_n, m)
    d_ap = float(np.sum((y_a - y_p) ** 2))
    d_an = float(np.sum((y_a - y_n) ** 2))
    return max(d_ap - d_an + m, 0.0)


def triplet_grad(
    y_a: np.ndarray, y_p: np.ndarray, y_n: np.ndarray, m: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of the triplet loss w.r.t. (y_a, y_p, y_n).

    All three are zero when the margin is satisfied (loss 0).
    """
    y_a, y_p, y_n = (np.asarray(v, dtype=np.float64) for v in (y_a, y_p, y_n))
    _check_triplet_args(y_a, y_p, y_n, m)
    if triplet_loss(y_a, y_p, y_n, m) == 0.0:
        z = np.zeros_like(y_a)
        return z, z.copy(), z.copy()
    g_a = 2.0 * (y_a - y_p) - 2.0 * (y_a - y_n)
    g_p = -2.0 * (y_a - y_p)
    g_n = 2.0 * (y_a - y_n)
    return g_a, g_p, g_n


def _cosine_logits(head: ArcFaceHead, y: np.ndarray, space: str, class_index: int,
                   m: float, s: float):
    """Scaled logits plus the intermediates the backward pass needs."""
    if space not in head.spaces:
        raise KeyError(f"unknown label space {space!r}")
    raw = head.weights[space]
    n_classes = raw.shape[0]
    if not 0 <= class_index < n_classes:
        raise IndexError(f"class_index {class_index} out of range for space {space!r}")
    if not 0.0 <= m < np.pi / 2:
        raise ValueError("angular margin must lie in [0, pi/2)")
    if s <= 0:
        raise ValueError("feature scale must be positive")
    row_norms = np.linalg.norm(raw, axis=1)
    W_hat = raw / row_norms[:, None]
    cos = np.clip(W_hat @ np.asarray(y, dtype=np.float64), -1.0, 1.0)
    logits = s * cos
    c_t = cos[class_index]
    sin_t = np.sqrt(max(1.0 - c_t * c_t, 0.0))
    # cos(theta + m) expanded so no explicit arccos is needed.
    logits = logits.copy()
    logits[class_index] = s * (c_t * np.cos(m) - sin_t * np.sin(m))
    return logits, cos, W_hat, row_norms, c_t, sin_t


def _log_softmax_nll(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Stable -log softmax[target]; also returns the softmax probabilities."""
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    total = exp.sum()
    loss = float(np.log(total) - shifted[target])
    return loss, exp / total


def arcface_loss(head: ArcFaceHead, y: np.ndarray, space: str, class_index: int,
                 m: float, s: float) -> float:
    """Angular-margin softmax loss of one embedding against one label space."""
    logits, *_ = _cosine_logits(head, y, space, class_index, m, s)
    loss, _ = _log_softmax_nll(logits, class_index)
    return loss


@dataclass
class ArcFaceGradient:
    loss: float
    d_y: np.ndarray
    d_weights: np.ndarray  # gradient w.r.t. the raw (unnormalized) weight rows
    skipped: bool  # target cosine at +-1; gradients returned as zero


def arcface_grad(head: ArcFaceHead, y: np.ndarray, space: str, class_index: int,
                 m: float, s: float) -> ArcFaceGradient:
    """Loss and exact gradients w.r.t. y and the space's raw class weights.

    When the target cosine sits at +-1 the margin term is not differentiable;
    the instance is flagged ``skipped`` and zero gradients are returned so
    callers can count and move on.
    """
    y = np.asarray(y, dtype=np.float64)
    logits, cos, W_hat, row_norms, c_t, sin_t = _cosine_logits(
        head, y, space, class_index, m, s
    )
    loss, probs = _log_softmax_nll(logits, class_index)
    if abs(c_t) >= _COS_LIMIT:
        return ArcFaceGradient(loss, np.zeros_like(y),
                               np.zeros_like(head.weights[space]), True)

    d_logits = probs.copy()
    d_logits[class_index] -= 1.0
    # d logit_j / d cos_j: s off the target row, s * d cos(theta+m)/d cos on it.
    d_cos = d_logits * s
    d_cos[class_index] *= np.cos(m) + np.sin(m) * c_t / sin_t

    d_y = W_hat.T @ d_cos
    # Through the row normalization: w_hat = w / |w|.
    d_what = d_cos[:, None] * y[None, :]
    d_raw = (d_what - (d_what * W_hat).sum(axis=1, keepdims=True) * W_hat) / row_norms[:, None]
    return ArcFaceGradient(loss, d_y, d_raw, False)


def softmax_cosine_ce(head: ArcFaceHead, y: np.ndarray, space: str,
                      class_index: int) -> tuple[float, np.ndarray]:
    """Plain softmax cross-entropy over cosine logits (no margin, unit scale).

    Reference point: the angular-margin loss with m = 0, s = 1 must agree
    with this exactly, loss and gradient alike.
    """
    y = np.asarray(y, dtype=np.float64)
    raw = head.weights[space]
    W_hat = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    logits = np.clip(W_hat @ y, -1.0, 1.0)
    loss, probs = _log_softmax_nll(logits, class_index)
    d_logits = probs.copy()
    d_logits[class_index] -= 1.0
    return loss, W_hat.T @ d_logits
