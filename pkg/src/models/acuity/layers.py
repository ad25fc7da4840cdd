"""Differentiable building blocks with explicit backward passes.

Forward functions return ``(output, cache)``; the matching backward takes the
upstream gradient and the cache. Leading axes are treated as batch axes.
"""

import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import erf

LAYER_NORM_EPS = 1e-5


def linear_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ W + b


def linear_backward(
    x: np.ndarray, W: np.ndarray, grad_out: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(grad_x, grad_W, grad_b)``."""
    flat_x = x.reshape(-1, x.shape[-1])
    flat_grad = grad_out.reshape(-1, grad_out.shape[-1])
    return grad_out @ W.T, flat_x.T @ flat_grad, flat_grad.sum(axis=0)


def layer_norm_forward(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray
) -> Tuple[np.ndarray, tuple]:
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + LAYER_NORM_EPS)
    normalized = centered * inv_std
    return normalized * gain + bias, (normalized, inv_std, gain)


def layer_norm_backward(
    grad_out: np.ndarray, cache: tuple
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(grad_x, grad_gain, grad_bias)``."""
    normalized, inv_std, gain = cache
    width = normalized.shape[-1]
    grad_norm = grad_out * gain
    grad_x = (
        inv_std
        / width
        * (
            width * grad_norm
            - grad_norm.sum(axis=-1, keepdims=True)
            - normalized * (grad_norm * normalized).sum(axis=-1, keepdims=True)
        )
    )
    flat = grad_out.reshape(-1, width)
    return grad_x, (flat * normalized.reshape(-1, width)).sum(axis=0), flat.sum(axis=0)


def gelu_forward(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def gelu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x**2) / math.sqrt(2.0 * math.pi)
    return grad_out * (cdf + x * pdf)


def dropout_forward(
    x: np.ndarray, rate: float, rng: Optional[np.random.Generator]
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout; identity when ``rng`` is ``None`` or ``rate`` is 0."""
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(grad_out: np.ndarray, keep: Optional[np.ndarray]) -> np.ndarray:
    return grad_out if keep is None else grad_out * keep


def masked_softmax(scores: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Softmax over the last axis; disallowed entries get exactly 0.

    Every row must allow at least one entry.
    """
    masked = np.where(allowed, scores, -np.inf)
    shifted = masked - masked.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def softmax_backward(probs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return probs * (grad_out - (grad_out * probs).sum(axis=-1, keepdims=True))
