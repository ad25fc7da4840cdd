"""Continuous value embeddings and the fused triplet embedding.

Every observation ``(t, f, v)`` becomes ``cve_t(t) + cve_v(v) + table[f]``,
where each CVE is a one-to-many network ``1 -> h -> d`` with a tanh hidden
layer. Order positions are an optional additive sinusoid used by the
masked-attention variant only.
"""

import math
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from src.core.exceptions import InputValidationError
from src.models.domain.encounter import EncodedShift, EncodedWindow


def cve_hidden_size(d_model: int) -> int:
    return int(math.ceil(math.sqrt(d_model)))


def uniform_init(rng: np.random.Generator, fan_in: int, shape: tuple) -> np.ndarray:
    """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``."""
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class CveParams:
    """One-to-many network weights: ``W1 (1, h)``, ``b1 (h,)``, ``W2 (h, d)``, ``b2 (d,)``."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    NAMES = ("W1", "b1", "W2", "b2")

    @classmethod
    def init(cls, rng: np.random.Generator, d_model: int) -> "CveParams":
        hidden = cve_hidden_size(d_model)
        return cls(
            W1=uniform_init(rng, 1, (1, hidden)),
            b1=uniform_init(rng, 1, (hidden,)),
            W2=uniform_init(rng, hidden, (hidden, d_model)),
            b2=uniform_init(rng, hidden, (d_model,)),
        )

    @classmethod
    def zeros(cls, d_model: int) -> "CveParams":
        hidden = cve_hidden_size(d_model)
        return cls(
            np.zeros((1, hidden)), np.zeros(hidden), np.zeros((hidden, d_model)), np.zeros(d_model)
        )

    @classmethod
    def from_params(cls, params: Dict[str, np.ndarray], prefix: str) -> "CveParams":
        return cls(*(params[f"{prefix}.{name}"] for name in cls.NAMES))

    def to_params(self, prefix: str) -> Dict[str, np.ndarray]:
        return {f"{prefix}.{name}": getattr(self, name) for name in self.NAMES}


def cve_hidden(x: np.ndarray, params: CveParams) -> np.ndarray:
    return np.tanh(x[..., None] * params.W1[0] + params.b1)


def cve_forward(x, params: CveParams) -> np.ndarray:
    """``W2 . tanh(W1 x + b1) + b2`` for a scalar or any array of scalars.

    Raises:
        InputValidationError: If any input is not finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InputValidationError("CVE input must be finite")
    return cve_hidden(x, params) @ params.W2 + params.b2


def cve_backward(
    x: np.ndarray, hidden: np.ndarray, grad_out: np.ndarray, params: CveParams
) -> Dict[str, np.ndarray]:
    """Parameter gradients of a CVE given the upstream gradient of its output."""
    d_model = params.W2.shape[1]
    flat_hidden = hidden.reshape(-1, hidden.shape[-1])
    flat_grad = grad_out.reshape(-1, d_model)
    grad_hidden = flat_grad @ params.W2.T
    grad_pre = grad_hidden * (1.0 - flat_hidden**2)
    return {
        "W1": (x.reshape(-1) @ grad_pre)[None, :],
        "b1": grad_pre.sum(axis=0),
        "W2": flat_hidden.T @ flat_grad,
        "b2": flat_grad.sum(axis=0),
    }


def embed_window(
    window: EncodedWindow,
    cve_t: CveParams,
    cve_v: CveParams,
    feature_table: np.ndarray,
) -> np.ndarray:
    """Fused ``n x d`` embeddings of one window; an empty window gives ``0 x d``.

    Raises:
        InputValidationError: If a code is outside the feature table.
    """
    d_model = feature_table.shape[1]
    if len(window) == 0:
        return np.zeros((0, d_model))
    codes = np.asarray(window.f, dtype=np.int64)
    if codes.min() < 0 or codes.max() >= feature_table.shape[0]:
        raise InputValidationError(
            f"Variable code outside the feature table of size {feature_table.shape[0]}"
        )
    return cve_forward(window.t, cve_t) + cve_forward(window.v, cve_v) + feature_table[codes]


def sinusoidal_positions(count: int, d_model: int) -> np.ndarray:
    """``count x d`` table with ``sin`` on even and ``cos`` on odd columns."""
    positions = np.arange(count, dtype=np.float64)[:, None]
    pairs = np.arange(0, d_model, 2, dtype=np.float64)
    frequencies = np.exp(-math.log(10000.0) * pairs / d_model)
    table = np.zeros((count, d_model))
    table[:, 0::2] = np.sin(positions * frequencies)
    table[:, 1::2] = np.cos(positions * frequencies[: d_model // 2])
    return table


def add_order_positions(sequence: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Add the position row ``table[i]`` to the ``i``-th embedding (last axis ``d``).

    Works on a single ``n x d`` sequence or a padded ``B x n x d`` batch.

    Raises:
        InputValidationError: If the sequence is longer than the table.
    """
    length = sequence.shape[-2]
    if length > table.shape[0]:
        raise InputValidationError(
            f"Sequence of {length} observations exceeds the {table.shape[0]}-row position table"
        )
    return sequence + table[:length]


@dataclass
class WindowBatch:
    """Padded model inputs for a batch of shifts.

    ``valid`` marks real tokens. A shift with an empty window gets one
    ``placeholder`` token at position 0 that the network embeds with a
    learned vector instead of the CVE sum.
    """

    t: np.ndarray
    f: np.ndarray
    v: np.ndarray
    valid: np.ndarray
    placeholder: np.ndarray
    static: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def length(self) -> int:
        return self.t.shape[1]

    @property
    def placeholder_tokens(self) -> np.ndarray:
        tokens = np.zeros_like(self.valid)
        tokens[:, 0] = self.placeholder
        return tokens

    @property
    def observed(self) -> np.ndarray:
        """Valid tokens that carry a real observation."""
        return self.valid & ~self.placeholder_tokens


def pad_windows(
    windows: Sequence[EncodedWindow], static: np.ndarray
) -> WindowBatch:
    """Stack windows into right-padded arrays."""
    count = len(windows)
    length = max([1] + [len(window) for window in windows])
    t = np.zeros((count, length))
    f = np.zeros((count, length), dtype=np.int64)
    v = np.zeros((count, length))
    valid = np.zeros((count, length), dtype=bool)
    placeholder = np.zeros(count, dtype=bool)
    for row, window in enumerate(windows):
        n = len(window)
        if n == 0:
            placeholder[row] = True
            valid[row, 0] = True
            continue
        t[row, :n] = window.t
        f[row, :n] = window.f
        v[row, :n] = window.v
        valid[row, :n] = True
    return WindowBatch(t, f, v, valid, placeholder, np.asarray(static, dtype=np.float64))


def batch_shifts(shifts: Sequence[EncodedShift], static_dim: int) -> WindowBatch:
    static = (
        np.vstack([shift.static_vector for shift in shifts])
        if shifts
        else np.zeros((0, static_dim))
    )
    return pad_windows([shift.window for shift in shifts], static.reshape(len(shifts), static_dim))
