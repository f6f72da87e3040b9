"""RANSAC pose estimation and Chamfer refinement."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..core.kinematics import axis_angle_to_rotation, project_to_so3
from ..errors import ConfigError, RankError, RegistrationError
from .chamfer import chamfer, mutual_nearest, nearest
from .sim3 import Sim3, _pairs, kabsch, scale_init, umeyama

log = logging.getLogger(__name__)


def ransac_kabsch(src, dst, iterations=500, inlier_threshold=1e-3, seed=0, with_scale=False):
    """Robust ``(R, t, s, inliers)`` from putative pairs.

    Minimal three-pair samples are scored by the number of pairs with residual
    below ``inlier_threshold``; the best model is refit on its inliers.
    ``with_scale`` estimates a similarity instead of a rigid motion.
    """
    src, dst = _pairs(src, dst)
    if iterations < 1:
        raise ConfigError("ransac needs at least one iteration")
    rng = np.random.default_rng(seed)
    n = len(src)
    best, best_key = None, (-1, np.inf)
    for _ in range(iterations):
        pick = rng.choice(n, size=3, replace=False)
        try:
            R, t, s = umeyama(src[pick], dst[pick], with_scale)
        except RankError:
            continue
        res = np.linalg.norm(s * src @ R.T + t - dst, axis=1)
        mask = res < inlier_threshold
        key = (int(mask.sum()), float(np.sum(res[mask])))
        if key[0] > best_key[0] or (key[0] == best_key[0] and key[1] < best_key[1]):
            best, best_key = mask, key
    if best is None or best_key[0] < 3:
        raise RegistrationError(f"no model reached 3 inliers in {iterations} iterations")
    inliers = best
    # refit on the consensus set, then re-collect inliers once under the refit model
    for _ in range(2):
        R, t, s = umeyama(src[inliers], dst[inliers], with_scale)
        res = np.linalg.norm(s * src @ R.T + t - dst, axis=1)
        grown = res < inlier_threshold
        if grown.sum() < 3 or np.array_equal(grown, inliers):
            break
        inliers = grown
    return R, t, s, np.nonzero(inliers)[0]


def _objective_and_grad(sim: Sim3, P, Q):
    Y = sim.apply(P)
    d_pq, j = nearest(Y, Q)
    d_qp, i = nearest(Q, Y)
    f = float(d_pq.mean() + d_qp.mean())
    G = 2.0 * (Y - Q[j]) / len(Y)
    np.add.at(G, i, 2.0 * (Y[i] - Q) / len(Q))
    U = Y - sim.t
    return f, np.cross(U, G).sum(axis=0), G.sum(axis=0), float(np.sum(G * U)), float(np.mean(np.sum(U * U, axis=1)))


def _update(sim: Sim3, dw, dt, dr):
    R = project_to_so3(axis_angle_to_rotation(dw) @ sim.R)
    return Sim3(R, sim.t + dt, sim.s * math.exp(dr))


def refine_sim3(init: Sim3, P_gen, P_obs, iters=100, step=1.0, tol=1e-14, history=None):
    """Gradient descent on Chamfer(s R P_gen + t, P_obs) with backtracking.

    Rotation updates are axis-angle increments applied on the left, scale is
    optimised in log space.  The gradient blocks are divided by the mean
    squared radius of the transformed cloud, which makes ``step = 1`` a
    sensible first trial.  Only decreasing steps are accepted, so the
    objective sequence (appended to ``history`` if given) never increases.
    """
    P = np.asarray(P_gen, dtype=np.float64)
    Q = np.asarray(P_obs, dtype=np.float64)
    sim = init
    f, gw, gt, gr, rad2 = _objective_and_grad(sim, P, Q)
    if history is not None:
        history.append(f)
    for _ in range(iters):
        if not math.isfinite(f):
            raise RegistrationError("non-finite Chamfer objective during refinement")
        rad2 = max(rad2, 1e-12)
        dw, dt, dr = -gw / rad2, -gt / 2.0, -gr / (2.0 * rad2)
        slope = float(gw @ dw + gt @ dt + gr * dr)
        if f <= tol or slope > -1e-18:
            break
        alpha = step
        accepted = False
        for _ in range(40):
            cand = _update(sim, alpha * dw, alpha * dt, alpha * dr)
            fc = chamfer(cand.apply(P), Q)
            if math.isfinite(fc) and fc <= f + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted or fc >= f:
            break
        sim = cand
        f, gw, gt, gr, rad2 = _objective_and_grad(sim, P, Q)
        if history is not None:
            history.append(f)
    return sim


def register(P_gen, P_obs, pairs=None, iterations=500, inlier_threshold=None, refine_iters=100, seed=0):
    """Full pipeline: bounding-box scale, RANSAC pose from pairs, Chamfer refinement.

    ``pairs`` is an ``(N, 2)`` index array into ``(P_gen, P_obs)``; without
    it, mutual nearest neighbours after scale and centroid alignment are used.
    Returns ``(Sim3, info)``.
    """
    P = np.asarray(P_gen, dtype=np.float64)
    Q = np.asarray(P_obs, dtype=np.float64)
    s0 = scale_init(P, Q)
    diameter = float(np.linalg.norm(np.ptp(Q, axis=0)))
    thr = 0.05 * diameter if inlier_threshold is None else inlier_threshold
    if pairs is None:
        shifted = s0 * (P - P.mean(axis=0)) + Q.mean(axis=0)
        i, j = mutual_nearest(shifted, Q)
        pairs = np.stack([i, j], axis=1)
    pairs = np.asarray(pairs, dtype=np.int64)
    R, t, s, inliers = ransac_kabsch(P[pairs[:, 0]], Q[pairs[:, 1]], iterations, thr, seed, with_scale=True)
    init = Sim3(project_to_so3(R), t, s)
    hist = []
    out = refine_sim3(init, P, Q, iters=refine_iters, history=hist)
    return out, {"scale_init": s0, "n_pairs": int(len(pairs)), "n_inliers": int(len(inliers)),
                 "objective": hist, "initial": init}
