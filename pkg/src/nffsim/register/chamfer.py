"""Nearest-neighbour queries and the Chamfer distance."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DomainError

BRUTE_FORCE_LIMIT = 2000


def nearest_brute(P, Q, block=512):
    """Squared distance and index of the nearest ``Q`` point for each ``P`` point."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    d2 = np.empty(len(P))
    idx = np.empty(len(P), dtype=np.int64)
    for a in range(0, len(P), block):
        diff = P[a:a + block, None, :] - Q[None, :, :]
        dd = np.einsum("ijk,ijk->ij", diff, diff)
        j = np.argmin(dd, axis=1)
        idx[a:a + block] = j
        d2[a:a + block] = dd[np.arange(len(j)), j]
    return d2, idx


def nearest(P, Q):
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if len(P) == 0 or len(Q) == 0:
        raise DomainError("nearest-neighbour query on an empty cloud")
    if len(P) * len(Q) <= BRUTE_FORCE_LIMIT * BRUTE_FORCE_LIMIT and max(len(P), len(Q)) < BRUTE_FORCE_LIMIT:
        return nearest_brute(P, Q)
    d, idx = cKDTree(Q).query(P, k=1)
    # recompute exactly so both code paths agree to the last bit on the distances
    diff = P - Q[idx]
    return np.einsum("ij,ij->i", diff, diff), idx.astype(np.int64)


def chamfer(P, Q):
    """Mean squared nearest distance P→Q plus Q→P (units of length squared)."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if len(P) == 0 or len(Q) == 0:
        raise DomainError("chamfer distance of an empty cloud")
    dpq, _ = nearest(P, Q)
    dqp, _ = nearest(Q, P)
    return float(dpq.mean() + dqp.mean())


def mutual_nearest(P, Q):
    """Index pairs ``(i, j)`` where ``P[i]`` and ``Q[j]`` are each other's nearest neighbour."""
    _, pq = nearest(P, Q)
    _, qp = nearest(Q, P)
    i = np.nonzero(qp[pq] == np.arange(len(P)))[0]
    return i, pq[i]
