"""Trajectory error metrics.

RMSE/MSE use every keypoint coordinate; FPE, PCE and Pearson R use the
centre-of-mass series.  Functions accept :class:`Trajectory` objects or raw
arrays (keypoints ``(T, K, M, 3)`` / COM ``(T, K, 3)``).
"""

from __future__ import annotations

import numpy as np

from ..core.types import Trajectory
from ..errors import DomainError, ShapeError

DEGENERATE_VARIANCE = 1e-12


def _keypoints(a):
    if isinstance(a, Trajectory):
        return np.concatenate([np.asarray(x, dtype=np.float64).reshape(a.n_frames, -1) for x in a.keypoints], axis=1) \
            if a.n_objects else np.zeros((a.n_frames, 0))
    return np.asarray(a, dtype=np.float64)


def _com(a):
    return np.asarray(a.com if isinstance(a, Trajectory) else a, dtype=np.float64)


def _same(p, g):
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != ground truth shape {g.shape}")


def squared_error(pred, gt):
    """``(sum of squared errors, component count)`` over keypoint coordinates."""
    p, g = _keypoints(pred), _keypoints(gt)
    _same(p, g)
    return float(np.sum((p - g) ** 2)), int(p.size)


def mse(pred, gt):
    s, n = squared_error(pred, gt)
    if n == 0:
        raise DomainError("cannot score an empty trajectory")
    return s / n


def rmse(pred, gt):
    return float(np.sqrt(mse(pred, gt)))


def fpe(pred, gt):
    """Mean distance between predicted and true final centres of mass."""
    p, g = _com(pred), _com(gt)
    _same(p, g)
    if p.shape[0] == 0 or p.shape[1] == 0:
        raise DomainError("final position error needs at least one frame and one object")
    return float(np.mean(np.linalg.norm(p[-1] - g[-1], axis=-1)))


def pce(pred, gt):
    """Mean norm of the difference between per-step COM displacements."""
    p, g = _com(pred), _com(gt)
    _same(p, g)
    if p.shape[0] < 2 or p.shape[1] == 0:
        raise DomainError("position change error needs at least two frames")
    return float(np.mean(np.linalg.norm(np.diff(p, axis=0) - np.diff(g, axis=0), axis=-1)))


def pearson(a, b):
    """``(r, degenerate)`` for two flattened series; degenerate series give ``r = 0``."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"series lengths differ: {a.size} vs {b.size}")
    if a.size < 2:
        return 0.0, True
    da, db = a - a.mean(), b - b.mean()
    va, vb = np.mean(da * da), np.mean(db * db)
    if va < DEGENERATE_VARIANCE or vb < DEGENERATE_VARIANCE:
        return 0.0, True
    r = float(np.mean(da * db) / np.sqrt(va * vb))
    return float(np.clip(r, -1.0, 1.0)), False


def pearson_r(pred, gt):
    """Pearson correlation of the flattened COM coordinate series."""
    p, g = _com(pred), _com(gt)
    _same(p, g)
    if p.shape[0] < 2:
        raise DomainError("correlation needs at least two frames")
    return pearson(p, g)[0]


def scene_metrics(pred, gt):
    s, n = squared_error(pred, gt)
    r, degenerate = pearson(_com(pred), _com(gt))
    m = s / n if n else 0.0
    return {"mse": m, "rmse": float(np.sqrt(m)), "fpe": fpe(pred, gt), "pce": pce(pred, gt), "pearson_r": r,
            "degenerate_r": degenerate}
