"""Transformer over fused triplet embeddings with attention fusion and a static branch.

Parameters live in one flat ``name -> float64 array`` dict so the optimizer,
gradient checks and checkpoints all handle them the same way.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from src.core.exceptions import InputValidationError, TrainingDivergedError
from src.models.acuity.attention import (
    attention_backward,
    attention_forward,
    batch_allowed,
    build_mask,
)
from src.models.acuity.encoding import (
    CveParams,
    WindowBatch,
    add_order_positions,
    cve_backward,
    cve_hidden,
    sinusoidal_positions,
    uniform_init,
)
from src.models.acuity.layers import (
    dropout_backward,
    dropout_forward,
    gelu_backward,
    gelu_forward,
    layer_norm_backward,
    layer_norm_forward,
    linear_backward,
    linear_forward,
    masked_softmax,
    softmax_backward,
)
from src.schemas.configs import ModelConfig

PROBABILITY_FLOOR = 1e-15


def init_params(
    config: ModelConfig, vocabulary_size: int, static_size: int, seed: int
) -> Dict[str, np.ndarray]:
    """Seeded parameters: uniform ``±1/sqrt(fan_in)``, layer-norm gain 1 and bias 0."""
    rng = np.random.default_rng(seed)
    d, ffn = config.d_model, config.ffn_dim
    params: Dict[str, np.ndarray] = {}
    params.update(CveParams.init(rng, d).to_params("cve_t"))
    params.update(CveParams.init(rng, d).to_params("cve_v"))
    params["feature_table"] = uniform_init(rng, d, (vocabulary_size, d))
    params["placeholder"] = uniform_init(rng, d, (d,))

    def layer_norm(prefix: str) -> None:
        params[f"{prefix}.gain"] = np.ones(d)
        params[f"{prefix}.bias"] = np.zeros(d)

    for layer in range(config.layers):
        prefix = f"layers.{layer}"
        layer_norm(f"{prefix}.ln1")
        for name in ("q", "k", "v", "o"):
            params[f"{prefix}.attn.W{name}"] = uniform_init(rng, d, (d, d))
            params[f"{prefix}.attn.b{name}"] = uniform_init(rng, d, (d,))
        layer_norm(f"{prefix}.ln2")
        params[f"{prefix}.ffn.W1"] = uniform_init(rng, d, (d, ffn))
        params[f"{prefix}.ffn.b1"] = uniform_init(rng, d, (ffn,))
        params[f"{prefix}.ffn.W2"] = uniform_init(rng, ffn, (ffn, d))
        params[f"{prefix}.ffn.b2"] = uniform_init(rng, ffn, (d,))
    layer_norm("final_ln")

    params["fusion.W"] = uniform_init(rng, d, (d, d))
    params["fusion.a"] = uniform_init(rng, d, (d,))
    params["static.W"] = uniform_init(rng, static_size, (static_size, config.static_dim))
    params["static.b"] = uniform_init(rng, static_size, (config.static_dim,))
    joint = d + config.static_dim
    params["classifier.W"] = uniform_init(rng, joint, (joint, config.class_count))
    params["classifier.b"] = uniform_init(rng, joint, (config.class_count,))
    return params


def _check_finite(array: np.ndarray, layer: int, what: str) -> None:
    if not np.all(np.isfinite(array)):
        raise TrainingDivergedError(f"Non-finite {what} activation", layer=layer)


class AcuityNetwork:
    """Forward, loss and exact backward pass of the acuity classifier.

    Layer indices in divergence errors: 0 is the embedding, ``1..M`` the
    transformer blocks and ``M + 1`` the fusion and output heads.
    """

    def __init__(self, config: ModelConfig, params: Dict[str, np.ndarray]):
        self.config = config
        self.params = params
        self._positions = (
            sinusoidal_positions(config.max_positions, config.d_model)
            if config.use_positions
            else None
        )

    @property
    def binary(self) -> bool:
        return self.config.class_count == 1

    def variant_mask(self, length: int) -> np.ndarray:
        return build_mask(
            length, self.config.attention, self.config.window, self.config.global_tokens
        )

    def forward(
        self, batch: WindowBatch, rng: Optional[np.random.Generator] = None
    ) -> Tuple[np.ndarray, dict]:
        """Class probabilities ``B x C`` and the cache for :meth:`backward`.

        Dropout is active only when ``rng`` is given.
        """
        params, config = self.params, self.config
        rate = config.dropout if rng is not None else 0.0
        if batch.static.shape[1] != params["static.W"].shape[0]:
            raise InputValidationError(
                f"Static vectors have {batch.static.shape[1]} entries, "
                f"the model expects {params['static.W'].shape[0]}"
            )
        if len(batch) and batch.f.max() >= params["feature_table"].shape[0]:
            raise InputValidationError("Variable code outside the feature table")

        cve_t = CveParams.from_params(params, "cve_t")
        cve_v = CveParams.from_params(params, "cve_v")
        hidden_t = cve_hidden(batch.t, cve_t)
        hidden_v = cve_hidden(batch.v, cve_v)
        fused = (
            hidden_t @ cve_t.W2
            + cve_t.b2
            + hidden_v @ cve_v.W2
            + cve_v.b2
            + params["feature_table"][batch.f]
        )
        observed = batch.observed
        x = np.where(observed[..., None], fused, 0.0)
        x = np.where(batch.placeholder_tokens[..., None], params["placeholder"], x)
        if self._positions is not None:
            x = add_order_positions(x, self._positions)
        _check_finite(x, 0, "embedding")

        allowed = batch_allowed(self.variant_mask(batch.length), batch.valid)
        blocks: List[dict] = []
        for layer in range(config.layers):
            prefix = f"layers.{layer}"
            attn_in, ln1 = layer_norm_forward(
                x, params[f"{prefix}.ln1.gain"], params[f"{prefix}.ln1.bias"]
            )
            attn_out, attn = attention_forward(attn_in, params, f"{prefix}.attn", allowed, config.heads)
            attn_out, drop1 = dropout_forward(attn_out, rate, rng)
            h = x + attn_out
            ffn_in, ln2 = layer_norm_forward(
                h, params[f"{prefix}.ln2.gain"], params[f"{prefix}.ln2.bias"]
            )
            pre = linear_forward(ffn_in, params[f"{prefix}.ffn.W1"], params[f"{prefix}.ffn.b1"])
            act = gelu_forward(pre)
            ffn_out = linear_forward(act, params[f"{prefix}.ffn.W2"], params[f"{prefix}.ffn.b2"])
            ffn_out, drop2 = dropout_forward(ffn_out, rate, rng)
            x = h + ffn_out
            _check_finite(x, layer + 1, "transformer")
            blocks.append(
                {"ln1": ln1, "attn": attn, "drop1": drop1, "ln2": ln2,
                 "ffn_in": ffn_in, "pre": pre, "act": act, "drop2": drop2}
            )

        contextual, final_ln = layer_norm_forward(x, params["final_ln.gain"], params["final_ln.bias"])
        scores_hidden = np.tanh(contextual @ params["fusion.W"])
        scores = scores_hidden @ params["fusion.a"]
        alpha = masked_softmax(scores, batch.valid)
        temporal = np.einsum("bn,bnd->bd", alpha, contextual)
        static = np.tanh(linear_forward(batch.static, params["static.W"], params["static.b"]))
        joint = np.concatenate([temporal, static], axis=1)
        logits = linear_forward(joint, params["classifier.W"], params["classifier.b"])
        probs = expit(logits) if self.binary else softmax(logits, axis=-1)
        _check_finite(probs, config.layers + 1, "output")

        cache = {
            "batch": batch, "hidden_t": hidden_t, "hidden_v": hidden_v, "blocks": blocks,
            "final_ln": final_ln, "contextual": contextual, "scores_hidden": scores_hidden,
            "alpha": alpha, "static": static, "joint": joint, "probs": probs,
        }
        return probs, cache

    def loss(self, probs: np.ndarray, targets: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
        """Class-weighted cross-entropy averaged over the batch.

        ``targets`` are class indices for the four-class head and 0/1 for the
        binary head; ``weights`` are per-sample weights (default 1).
        """
        targets = np.asarray(targets, dtype=np.int64)
        if len(targets) == 0:
            return 0.0
        weights = np.ones(len(targets)) if weights is None else np.asarray(weights, dtype=np.float64)
        if self.binary:
            p = np.clip(probs[:, 0], PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
            losses = -(targets * np.log(p) + (1 - targets) * np.log(1.0 - p))
        else:
            if targets.min() < 0 or targets.max() >= probs.shape[1]:
                raise InputValidationError("Class index outside the model's class range")
            picked = probs[np.arange(len(targets)), targets]
            losses = -np.log(np.clip(picked, PROBABILITY_FLOOR, 1.0))
        return float(np.mean(weights * losses))

    def backward(
        self, cache: dict, targets: np.ndarray, weights: Optional[np.ndarray] = None
    ) -> Dict[str, np.ndarray]:
        """Exact gradients of :meth:`loss` for every parameter."""
        params, config = self.params, self.config
        probs: np.ndarray = cache["probs"]
        batch: WindowBatch = cache["batch"]
        count = probs.shape[0]
        targets = np.asarray(targets, dtype=np.int64)
        if len(targets) != count:
            raise InputValidationError("One target per forward-pass sample is required")
        weights = np.ones(count) if weights is None else np.asarray(weights, dtype=np.float64)

        if self.binary:
            grad_logits = (probs - targets[:, None]) * weights[:, None] / count
        else:
            onehot = np.zeros_like(probs)
            onehot[np.arange(count), targets] = 1.0
            grad_logits = (probs - onehot) * weights[:, None] / count

        grads: Dict[str, np.ndarray] = {}
        grad_joint, grads["classifier.W"], grads["classifier.b"] = linear_backward(
            cache["joint"], params["classifier.W"], grad_logits
        )
        d = config.d_model
        grad_temporal, grad_static = grad_joint[:, :d], grad_joint[:, d:]

        grad_static_pre = grad_static * (1.0 - cache["static"] ** 2)
        _, grads["static.W"], grads["static.b"] = linear_backward(
            batch.static, params["static.W"], grad_static_pre
        )

        alpha, contextual = cache["alpha"], cache["contextual"]
        grad_contextual = alpha[..., None] * grad_temporal[:, None, :]
        grad_alpha = np.einsum("bnd,bd->bn", contextual, grad_temporal)
        grad_scores = softmax_backward(alpha, grad_alpha)
        scores_hidden = cache["scores_hidden"]
        grads["fusion.a"] = np.einsum("bnd,bn->d", scores_hidden, grad_scores)
        grad_scores_pre = grad_scores[..., None] * params["fusion.a"] * (1.0 - scores_hidden**2)
        grad_in, grads["fusion.W"], _ = linear_backward(contextual, params["fusion.W"], grad_scores_pre)
        grad_contextual = grad_contextual + grad_in

        grad_x, grads["final_ln.gain"], grads["final_ln.bias"] = layer_norm_backward(
            grad_contextual, cache["final_ln"]
        )

        for layer in reversed(range(config.layers)):
            prefix = f"layers.{layer}"
            block = cache["blocks"][layer]
            grad_ffn_out = dropout_backward(grad_x, block["drop2"])
            grad_act, grads[f"{prefix}.ffn.W2"], grads[f"{prefix}.ffn.b2"] = linear_backward(
                block["act"], params[f"{prefix}.ffn.W2"], grad_ffn_out
            )
            grad_pre = gelu_backward(block["pre"], grad_act)
            grad_ffn_in, grads[f"{prefix}.ffn.W1"], grads[f"{prefix}.ffn.b1"] = linear_backward(
                block["ffn_in"], params[f"{prefix}.ffn.W1"], grad_pre
            )
            grad_h, grads[f"{prefix}.ln2.gain"], grads[f"{prefix}.ln2.bias"] = layer_norm_backward(
                grad_ffn_in, block["ln2"]
            )
            grad_h = grad_h + grad_x

            grad_attn_out = dropout_backward(grad_h, block["drop1"])
            grad_attn_in, attn_grads = attention_backward(
                grad_attn_out, params, f"{prefix}.attn", block["attn"], config.heads
            )
            grads.update(attn_grads)
            grad_x, grads[f"{prefix}.ln1.gain"], grads[f"{prefix}.ln1.bias"] = layer_norm_backward(
                grad_attn_in, block["ln1"]
            )
            grad_x = grad_x + grad_h

        placeholder_tokens = batch.placeholder_tokens
        grads["placeholder"] = grad_x[placeholder_tokens].sum(axis=0)
        observed = batch.observed
        grad_fused = np.where(observed[..., None], grad_x, 0.0)
        table = np.zeros_like(params["feature_table"])
        np.add.at(table, batch.f[observed], grad_fused[observed])
        grads["feature_table"] = table
        for prefix, inputs, hidden in (
            ("cve_t", batch.t, cache["hidden_t"]),
            ("cve_v", batch.v, cache["hidden_v"]),
        ):
            cve = CveParams.from_params(params, prefix)
            for name, grad in cve_backward(inputs, hidden, grad_fused, cve).items():
                grads[f"{prefix}.{name}"] = grad

        missing = set(params) - set(grads)
        if missing:
            raise InputValidationError(f"No gradient computed for {sorted(missing)}")
        return {name: grads[name] for name in params}

    def predict_proba(self, batch: WindowBatch) -> np.ndarray:
        probs, _ = self.forward(batch)
        return probs
