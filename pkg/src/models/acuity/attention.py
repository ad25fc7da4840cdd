"""Attention masks and masked multi-head self-attention."""

import math
from typing import Dict, Tuple

import numpy as np

from src.models.acuity.layers import (
    linear_backward,
    linear_forward,
    masked_softmax,
    softmax_backward,
)

FULL = "full"
SLIDING_WINDOW_GLOBAL = "sliding_window_global"

PROJECTIONS = ("q", "k", "v", "o")


def build_mask(n: int, attention: str = FULL, window: int = 0, global_tokens: int = 0) -> np.ndarray:
    """``n x n`` allow-matrix for an attention variant.

    ``full`` allows every pair. ``sliding_window_global`` allows ``(i, j)``
    when ``|i - j| <= window`` or either index is one of the first
    ``global_tokens`` positions.
    """
    if attention == FULL:
        return np.ones((n, n), dtype=bool)
    if attention != SLIDING_WINDOW_GLOBAL:
        raise ValueError(f"Unknown attention variant {attention!r}")
    index = np.arange(n)
    local = np.abs(index[:, None] - index[None, :]) <= window
    is_global = index < global_tokens
    return local | is_global[:, None] | is_global[None, :]


def batch_allowed(variant_mask: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Per-sample allow-matrix: variant mask on valid keys, plus the diagonal."""
    length = valid.shape[1]
    return (variant_mask[None, :, :] & valid[:, None, :]) | np.eye(length, dtype=bool)[None]


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    batch, length, width = x.shape
    return x.reshape(batch, length, heads, width // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    batch, heads, length, depth = x.shape
    return x.transpose(0, 2, 1, 3).reshape(batch, length, heads * depth)


def attention_forward(
    x: np.ndarray, params: Dict[str, np.ndarray], prefix: str, allowed: np.ndarray, heads: int
) -> Tuple[np.ndarray, dict]:
    """Multi-head self-attention over ``x`` of shape ``B x n x d``."""
    q = _split_heads(linear_forward(x, params[f"{prefix}.Wq"], params[f"{prefix}.bq"]), heads)
    k = _split_heads(linear_forward(x, params[f"{prefix}.Wk"], params[f"{prefix}.bk"]), heads)
    v = _split_heads(linear_forward(x, params[f"{prefix}.Wv"], params[f"{prefix}.bv"]), heads)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    weights = masked_softmax(scores, allowed[:, None, :, :])
    context = _merge_heads(weights @ v)
    out = linear_forward(context, params[f"{prefix}.Wo"], params[f"{prefix}.bo"])
    cache = {"x": x, "q": q, "k": k, "v": v, "weights": weights, "context": context, "scale": scale}
    return out, cache


def attention_backward(
    grad_out: np.ndarray, params: Dict[str, np.ndarray], prefix: str, cache: dict, heads: int
) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    grads: Dict[str, np.ndarray] = {}
    grad_context, grads[f"{prefix}.Wo"], grads[f"{prefix}.bo"] = linear_backward(
        cache["context"], params[f"{prefix}.Wo"], grad_out
    )
    grad_context = _split_heads(grad_context, heads)
    weights, q, k, v = cache["weights"], cache["q"], cache["k"], cache["v"]

    grad_weights = grad_context @ v.transpose(0, 1, 3, 2)
    grad_v = weights.transpose(0, 1, 3, 2) @ grad_context
    grad_scores = softmax_backward(weights, grad_weights) * cache["scale"]
    grad_q = grad_scores @ k
    grad_k = grad_scores.transpose(0, 1, 3, 2) @ q

    x = cache["x"]
    grad_x = np.zeros_like(x)
    for name, grad in (("q", grad_q), ("k", grad_k), ("v", grad_v)):
        grad_in, grads[f"{prefix}.W{name}"], grads[f"{prefix}.b{name}"] = linear_backward(
            x, params[f"{prefix}.W{name}"], _merge_heads(grad)
        )
        grad_x += grad_in
    return grad_x, grads
