"""Contact and boundary detection on keypoint clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core.types import Domain

DEFAULT_THRESHOLD = 5e-2


@dataclass
class ContactGraph:
    intersection: np.ndarray  # (K, K) bool, symmetric, false diagonal
    boundary: np.ndarray  # (K,) bool
    cam: list  # per object (M_k,) bool

    @property
    def n_objects(self):
        return len(self.boundary)

    @property
    def edges(self):
        i, j = np.nonzero(np.triu(self.intersection, 1))
        return [(int(a), int(b)) for a, b in zip(i, j)]


@dataclass
class Geometry:
    """Batched contact geometry for keypoints ``x`` of shape ``(B, K, M, 3)``.

    Index arrays locate the closest keypoint pair per object pair and the
    keypoint closest to each domain face, so the distances can be recomputed
    differentiably from just those points.
    """

    pair_d2: np.ndarray  # (B, K, K) min squared distance, +inf on the diagonal
    pair_a: np.ndarray  # (B, K, K) keypoint of object q (row) in the closest pair
    pair_b: np.ndarray  # (B, K, K) keypoint of object i (column)
    intersection: np.ndarray  # (B, K, K) bool
    face_d: np.ndarray  # (B, K, 6) min signed distance to faces -x,-y,-z,+x,+y,+z
    face_idx: np.ndarray  # (B, K, 6)
    boundary: np.ndarray  # (B, K) bool
    cam: np.ndarray  # (B, K, M) bool


def face_distances(x, domain: Domain):
    """Signed distance of each point to the six faces (positive inside)."""
    lo, hi = domain.lo, domain.hi
    return np.concatenate([x - lo, hi - x], axis=-1)


@njit(cache=True)
def _pair_kernel(x, t2, pair_d2, pair_a, pair_b, cam):
    B, K, M, _ = x.shape
    for bb in range(B):
        for q in range(K):
            pair_d2[bb, q, q] = np.inf
            for i in range(q + 1, K):
                best = np.inf
                ka = 0
                ki = 0
                for a in range(M):
                    for c in range(M):
                        d0 = x[bb, q, a, 0] - x[bb, i, c, 0]
                        d1 = x[bb, q, a, 1] - x[bb, i, c, 1]
                        d2 = x[bb, q, a, 2] - x[bb, i, c, 2]
                        d = d0 * d0 + d1 * d1 + d2 * d2
                        if d < best:
                            best = d
                            ka = a
                            ki = c
                        if d < t2:
                            cam[bb, q, a] = True
                            cam[bb, i, c] = True
                pair_d2[bb, q, i] = best
                pair_d2[bb, i, q] = best
                pair_a[bb, q, i] = ka
                pair_b[bb, q, i] = ki
                pair_a[bb, i, q] = ki
                pair_b[bb, i, q] = ka


def contact_geometry(x, domain: Domain, threshold=DEFAULT_THRESHOLD):
    x = np.ascontiguousarray(x, dtype=np.float64)
    B, K, M, _ = x.shape
    pair_d2 = np.zeros((B, K, K))
    pair_a = np.zeros((B, K, K), dtype=np.int64)
    pair_b = np.zeros((B, K, K), dtype=np.int64)
    cam = np.zeros((B, K, M), dtype=bool)
    _pair_kernel(x, threshold * threshold, pair_d2, pair_a, pair_b, cam)
    intersection = pair_d2 < threshold * threshold
    fd = face_distances(x, domain)  # (B, K, M, 6)
    face_idx = np.argmin(fd, axis=2)
    face_d = np.take_along_axis(fd, face_idx[:, :, None, :], axis=2)[:, :, 0, :]
    boundary = (face_d < threshold).any(axis=-1)
    cam |= (fd < threshold).any(axis=-1)
    return Geometry(pair_d2, pair_a, pair_b, intersection, face_d, face_idx, boundary, cam)


def detect_collisions(states, threshold=DEFAULT_THRESHOLD):
    """Contact graph over object states; an edge needs a keypoint pair closer than ``threshold``."""
    K = len(states)
    inter = np.zeros((K, K), dtype=bool)
    cam = [np.zeros(len(s.keypoints), dtype=bool) for s in states]
    for i in range(K):
        pi = np.asarray(states[i].keypoints, dtype=np.float64)
        for j in range(i + 1, K):
            pj = np.asarray(states[j].keypoints, dtype=np.float64)
            diff = pi[:, None, :] - pj[None, :, :]
            close = np.einsum("...i,...i->...", diff, diff) < threshold * threshold
            if close.any():
                inter[i, j] = inter[j, i] = True
                cam[i] |= close.any(axis=1)
                cam[j] |= close.any(axis=0)
    return ContactGraph(inter, np.zeros(K, dtype=bool), cam)


def detect_boundary(states, domain: Domain, threshold=DEFAULT_THRESHOLD):
    """Objects with a keypoint strictly closer than ``threshold`` to a face (or outside)."""
    flags = np.zeros(len(states), dtype=bool)
    bits = []
    for k, s in enumerate(states):
        near = (face_distances(np.asarray(s.keypoints, dtype=np.float64), domain) < threshold).any(axis=-1)
        flags[k] = near.any()
        bits.append(near)
    return flags, bits


def contact_graph(states, domain: Domain, threshold=DEFAULT_THRESHOLD):
    graph = detect_collisions(states, threshold)
    flags, bits = detect_boundary(states, domain, threshold)
    graph.boundary = flags
    graph.cam = [a | b for a, b in zip(graph.cam, bits)]
    return graph
