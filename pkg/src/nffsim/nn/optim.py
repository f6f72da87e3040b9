"""Adam, gradient clipping and the cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update of a flat ``{path: array}`` tree; inputs are not mutated."""
    for path in sorted(grads):
        g = grads[path]
        if path not in params:
            raise TrainingError(f"gradient for unknown parameter {path!r}", path=path)
        if np.shape(g) != np.shape(params[path]):
            raise TrainingError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(params[path])}", path=path)
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {path!r}", path=path)
    t = state.step + 1
    new_params, m_new, v_new = {}, {}, {}
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for path, p in params.items():
        g = grads.get(path)
        if g is None:
            g = np.zeros_like(p)
        m = beta1 * state.m.get(path, 0.0) + (1.0 - beta1) * g
        v = beta2 * state.v.get(path, 0.0) + (1.0 - beta2) * g * g
        new_params[path] = p - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        m_new[path] = m
        v_new[path] = v
    return new_params, AdamState(t, m_new, v_new)


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads, max_norm):
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def cosine_lr(epoch, n_epochs, lr_start, lr_min):
    """Cosine decay with ``lr(0) = lr_start`` and ``lr(n_epochs-1) = lr_min``."""
    if n_epochs <= 1:
        return lr_start
    frac = epoch / (n_epochs - 1)
    return lr_min + 0.5 * (lr_start - lr_min) * (1.0 + math.cos(math.pi * frac))
