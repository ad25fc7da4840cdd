"""Adaptive moment estimation over a flat parameter dict."""

from typing import Dict, Optional

import numpy as np


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


class AdamOptimizer:
    """Adam with bias correction and optional global-norm gradient clipping.

    Parameters are updated in place, so a learning rate of 0 leaves them
    bit-for-bit unchanged.
    """

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        grad_clip: Optional[float] = None,
    ):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.grad_clip = grad_clip
        self.steps = 0
        self.first = {name: np.zeros_like(value) for name, value in params.items()}
        self.second = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, grads: Dict[str, np.ndarray]) -> float:
        """Apply one update; returns the gradient norm before clipping."""
        norm = global_norm(grads)
        scale = 1.0
        if self.grad_clip is not None and norm > self.grad_clip:
            scale = self.grad_clip / norm

        self.steps += 1
        first_correction = 1.0 - self.beta1**self.steps
        second_correction = 1.0 - self.beta2**self.steps
        for name, param in self.params.items():
            grad = grads[name] * scale
            self.first[name] = self.beta1 * self.first[name] + (1.0 - self.beta1) * grad
            self.second[name] = self.beta2 * self.second[name] + (1.0 - self.beta2) * grad * grad
            update = (self.first[name] / first_correction) / (
                np.sqrt(self.second[name] / second_correction) + self.epsilon
            )
            param -= self.learning_rate * update
        return norm
