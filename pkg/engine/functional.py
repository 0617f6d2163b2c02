"""Fused differentiable layers: softmax, layer norm, GELU, cross-entropy, dropout."""
from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from engine.tensor import Tensor, as_tensor, matmul, record, unbroadcast
from errors import ContractError, DimensionError

__all__ = [
    "matmul",
    "softmax",
    "log_softmax",
    "softmax_array",
    "layer_norm",
    "gelu",
    "cross_entropy",
    "dropout",
]

GELU_COEFF = math.sqrt(2.0 / math.pi)
GELU_CUBIC = 0.044715


def softmax_array(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax on a plain array (no tape)."""
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    out = softmax_array(x.data, axis)

    def grad_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return record("softmax", out, (x,), grad_fn)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def grad_fn(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return record("log_softmax", out, (x,), grad_fn)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Normalize over the last dimension, then apply ``gain`` and ``bias``.

    Raises:
        DimensionError: If gain/bias do not match the last dimension of x.
    """
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            f"layer_norm gain/bias shapes {gain.shape}/{bias.shape} do not match last dim {width}"
        )
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    normed = centered * inv_std
    out = normed * gain.data + bias.data

    def grad_fn(g):
        d_normed = g * gain.data
        d_x = inv_std * (
            d_normed
            - d_normed.mean(axis=-1, keepdims=True)
            - normed * (d_normed * normed).mean(axis=-1, keepdims=True)
        )
        d_gain = unbroadcast(g * normed, gain.shape)
        d_bias = unbroadcast(g, bias.shape)
        return d_x, d_gain, d_bias

    return record("layer_norm", out, (x, gain, bias), grad_fn)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation: 0.5·x·(1 + tanh(√(2/π)(x + 0.044715x³)))."""
    inner = GELU_COEFF * (x.data + GELU_CUBIC * x.data ** 3)
    t = np.tanh(inner)
    out = 0.5 * x.data * (1.0 + t)

    def grad_fn(g):
        d_inner = GELU_COEFF * (1.0 + 3.0 * GELU_CUBIC * x.data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t ** 2) * d_inner),)

    return record("gelu", out, (x,), grad_fn)


def cross_entropy(
    logits: Tensor,
    target: Union[int, Sequence[int], np.ndarray],
    weight: Optional[Union[Sequence[float], np.ndarray]] = None,
) -> Tensor:
    """
    Summed cross-entropy ``-log softmax(logits)[target]``.

    ``logits`` is either ``[classes]`` with an integer target or
    ``[rows, classes]`` with one target per row. ``weight`` scales each row.

    Raises:
        IndexError: If any target is outside ``[0, classes)``.
        ContractError: If targets and rows disagree in count.
    """
    logits = as_tensor(logits)
    single = logits.ndim == 1
    rows = logits.data.reshape(1, -1) if single else logits.data
    if rows.ndim != 2:
        raise DimensionError(f"cross_entropy expects 1-D or 2-D logits, got {logits.shape}")
    targets = np.atleast_1d(np.asarray(target, dtype=np.int64))
    classes = rows.shape[1]
    if targets.shape != (rows.shape[0],):
        raise ContractError(f"{targets.shape[0]} targets for {rows.shape[0]} logit rows")
    if np.any(targets < 0) or np.any(targets >= classes):
        bad = targets[(targets < 0) | (targets >= classes)]
        raise IndexError(f"target index {bad.tolist()} out of range for {classes} classes")
    w = np.ones(rows.shape[0]) if weight is None else np.asarray(weight, dtype=np.float64)

    shifted = rows - rows.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    picked = log_probs[np.arange(rows.shape[0]), targets]
    loss = -(w * picked).sum()

    def grad_fn(g):
        grad = np.exp(log_probs)
        grad[np.arange(rows.shape[0]), targets] -= 1.0
        grad = grad * w[:, None] * g
        return (grad.reshape(logits.shape),)

    return record("cross_entropy", np.asarray(loss), (logits,), grad_fn)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return record("dropout", x.data * keep, (x,), lambda g: (g * keep,))
