"""Similarity transforms and closed-form alignment of paired points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, RankError, ShapeError


@dataclass(frozen=True, eq=False)
class Sim3:
    R: np.ndarray
    t: np.ndarray
    s: float = 1.0

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or np.linalg.det(R) <= 0:
            raise DomainError("rotation must be orthonormal with determinant +1")
        if not (np.isfinite(self.s) and self.s > 0):
            raise DomainError(f"scale must be positive, got {self.s}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "s", float(self.s))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3), 1.0)

    def apply(self, points):
        return self.s * np.asarray(points, dtype=np.float64) @ self.R.T + self.t

    def inverse(self):
        return Sim3(self.R.T, -(self.R.T @ self.t) / self.s, 1.0 / self.s)

    def compose(self, other):
        """``self ∘ other``."""
        return Sim3(self.R @ other.R, self.s * self.R @ other.t + self.t, self.s * other.s)

    def to_dict(self):
        return {"R": self.R.ravel().tolist(), "t": self.t.tolist(), "s": self.s}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["R"], dtype=np.float64).reshape(3, 3), np.asarray(d["t"], dtype=np.float64),
                   float(d["s"]))


def _cloud(p, name):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ShapeError(f"{name} must have shape (N, 3), got {p.shape}")
    return p


def aabb_volume(points):
    ext = np.ptp(_cloud(points, "points"), axis=0)
    return float(np.prod(ext))


def scale_init(P_gen, P_obs):
    """Cube root of the ratio of axis-aligned bounding-box volumes."""
    vg, vo = aabb_volume(P_gen), aabb_volume(P_obs)
    if not (vg > 0 and vo > 0):
        raise DomainError("degenerate cloud: bounding box has zero volume")
    return float(np.cbrt(vo / vg))


def _pairs(src, dst):
    src, dst = _cloud(src, "src"), _cloud(dst, "dst")
    if src.shape != dst.shape:
        raise ShapeError(f"paired clouds differ in size: {src.shape} vs {dst.shape}")
    if len(src) < 3:
        raise RankError(f"need at least 3 pairs, got {len(src)}")
    return src, dst


def _check_rank(centred):
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[0] == 0 or sv[1] <= 1e-10 * sv[0]:
        raise RankError("pairs are collinear or coincident")


def umeyama(src, dst, with_scale=True):
    """Least-squares ``(R, t, s)`` with ``dst ≈ s R src + t``; reflections excluded."""
    src, dst = _pairs(src, dst)
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - mu_s, dst - mu_d
    _check_rank(a)
    H = a.T @ b
    U, S, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    D = np.diag([1.0, 1.0, d])
    R = Vt.T @ D @ U.T
    s = float(np.sum(S * np.diag(D)) / np.sum(a * a)) if with_scale else 1.0
    t = mu_d - s * R @ mu_s
    return R, t, s


def kabsch(src, dst):
    """Rigid ``(R, t)`` minimising ``sum |R src + t - dst|^2``."""
    R, t, _ = umeyama(src, dst, with_scale=False)
    return R, t
