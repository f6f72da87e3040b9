"""The unified force field: pairwise interaction, boundary response and local stress.

All batched functions take arrays shaped ``(B, K, ...)`` (scenes, objects) and
work on plain arrays or tape variables alike.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..core.kinematics import wrap_angle
from ..core.types import Domain, ObjectState
from ..errors import ModelDivergenceError, ShapeError
from ..nn import mlp_forward, ops, point_encode
from .contact import Geometry, contact_geometry
from .model import N_GLOBAL, ForceFieldParams


@dataclass
class ModelState:
    """Batched object state; every field may be a tape variable."""

    x: object  # (B, K, M, 3) keypoints
    xd: object  # (B, K, M, 3)
    c: object  # (B, K, 3)
    cd: object
    th: object  # (B, K, 3) extrinsic XYZ Euler angles
    thd: object

    FIELDS = ("x", "xd", "c", "cd", "th", "thd")

    def values(self):
        return ModelState(*(ops.value(getattr(self, f)) for f in self.FIELDS))

    @property
    def shape(self):
        return ops.value(self.x).shape[:3]


@dataclass
class ForceOutput:
    F_global: np.ndarray  # (6,) translational then angular acceleration
    F_latent: np.ndarray  # (d_latent,)
    F_local: np.ndarray  # (M_k, 3) in the object frame


def euler_rotation(th):
    """Rotation matrices ``Rz Ry Rx`` for angles ``(..., 3)``; differentiable."""
    s, co = ops.sin(th), ops.cos(th)
    sa, sb, sg = s[..., 0], s[..., 1], s[..., 2]
    ca, cb, cg = co[..., 0], co[..., 1], co[..., 2]
    sbsa = ops.mul(sb, sa)
    sbca = ops.mul(sb, ca)
    rows = [
        ops.mul(cg, cb), ops.sub(ops.mul(cg, sbsa), ops.mul(sg, ca)), ops.add(ops.mul(cg, sbca), ops.mul(sg, sa)),
        ops.mul(sg, cb), ops.add(ops.mul(sg, sbsa), ops.mul(cg, ca)), ops.sub(ops.mul(sg, sbca), ops.mul(cg, sa)),
        ops.neg(sb), ops.mul(cb, sa), ops.mul(cb, ca),
    ]
    R = ops.stack(rows, axis=-1)
    return ops.reshape(R, ops.value(R).shape[:-1] + (3, 3))


def wrapped(a):
    """Wrap angles to (-pi, pi]; the shift is piecewise constant so gradients pass through."""
    v = ops.value(a)
    return ops.add(a, wrap_angle(v) - v)


def encode_keypoints(params: ForceFieldParams, keypoints):
    """Object feature from keypoints ``(..., M, 3)``, centred and divided by a fixed length."""
    kp = ops.value(keypoints)
    centred = (kp - kp.mean(axis=-2, keepdims=True)) / params.config.length_scale
    return point_encode(params.encoder, centred)


def state_features(params: ForceFieldParams, st: ModelState, h, domain: Domain):
    cfg = params.config
    half = 0.5 * domain.edge
    return ops.concat([
        h,
        ops.mul(ops.sub(st.c, domain.center), 1.0 / half),
        ops.mul(st.cd, cfg.velocity_scale),
        ops.sin(st.th),
        ops.cos(st.th),
        ops.mul(st.thd, cfg.spin_scale),
    ], axis=-1)


def pair_distances(st: ModelState, geo: Geometry, pairs):
    """Closest keypoint distance for each ``(b, q, i)`` pair, differentiable through the chosen points."""
    b, q, i = pairs
    xa = ops.getitem(st.x, (b, q, geo.pair_a[b, q, i]))
    xb = ops.getitem(st.x, (b, i, geo.pair_b[b, q, i]))
    diff = ops.sub(xa, xb)
    return ops.sqrt(ops.add(ops.sum(ops.mul(diff, diff), axis=-1), 1e-18))


def face_features(st: ModelState, geo: Geometry, domain: Domain, threshold):
    B, K = geo.face_idx.shape[:2]
    f = np.arange(6)
    coord = ops.getitem(st.x, (np.arange(B)[:, None, None], np.arange(K)[None, :, None], geo.face_idx, f % 3))
    sign = np.where(f < 3, 1.0, -1.0)
    offset = np.concatenate([-domain.lo, domain.hi])
    d = ops.add(ops.mul(coord, sign), offset)
    return ops.tanh(ops.mul(d, 0.5 / threshold))


def all_pairs(B, K):
    b, q, i = np.nonzero(np.broadcast_to(~np.eye(K, dtype=bool), (B, K, K)))
    return b, q, i


def pair_terms(params: ForceFieldParams, st: ModelState, h, geo: Geometry, domain: Domain, pairs=None, trunk=None):
    """Products ``f_eta(rel(z_i, z_q)) * f_phi(z_q)`` for pairs ``(b, q, i)``, shape ``(P, hidden)``."""
    cfg = params.config
    B, K = ops.value(h).shape[:2]
    b, q, i = all_pairs(B, K) if pairs is None else pairs

    def rel(a):
        return ops.sub(ops.getitem(a, (b, i)), ops.getitem(a, (b, q)))

    dist = pair_distances(st, geo, (b, q, i))
    feats = ops.concat([
        rel(st.c),
        ops.mul(rel(st.cd), cfg.velocity_scale),
        ops.mul(wrapped(rel(st.th)), 1.0 / np.pi),
        ops.mul(rel(st.thd), cfg.spin_scale),
        ops.getitem(h, (b, i)),
        ops.expand_dims(ops.mul(dist, 1.0 / cfg.threshold), -1),
    ], axis=-1)
    if trunk is None:
        trunk = mlp_forward(params.trunk, state_features(params, st, h, domain))
    return ops.mul(mlp_forward(params.branch, feats), ops.getitem(trunk, (b, q)))


def interaction(params: ForceFieldParams, st: ModelState, h, geo: Geometry, domain: Domain, gate=None):
    """Neighbour sum projected by ``W`` plus ``b``: raw ``(B, K, 6 + d_latent)``.

    Only gated pairs are evaluated; ungated ones contribute exactly zero.
    """
    B, K = ops.value(h).shape[:2]
    gate = np.asarray(geo.intersection if gate is None else gate, dtype=bool) & ~np.eye(K, dtype=bool)
    hidden = params.trunk.n_out
    if gate.any():
        pairs = np.nonzero(gate)
        terms = pair_terms(params, st, h, geo, domain, pairs)
        summed = ops.scatter_add(terms, pairs[:2], (B, K, hidden))
    else:
        summed = np.zeros((B, K, hidden))
    return ops.add(ops.matmul(summed, params.W), params.b)


def boundary_response(params: ForceFieldParams, st: ModelState, h, geo: Geometry, domain: Domain):
    feats = ops.concat([state_features(params, st, h, domain),
                        face_features(st, geo, domain, params.config.threshold)], axis=-1)
    out = mlp_forward(params.boundary, feats)
    return ops.mul(out, geo.boundary[..., None].astype(np.float64))


def global_scale(params):
    cfg = params.config
    return np.array([cfg.force_scale] * 3 + [cfg.torque_scale] * 3)


def local_frame(st: ModelState):
    R = euler_rotation(st.th)
    xl = ops.matmul(ops.sub(st.x, ops.expand_dims(st.c, 2)), R)
    vl = ops.matmul(ops.sub(st.xd, ops.expand_dims(st.cd, 2)), R)
    return R, xl, vl


def stress(params: ForceFieldParams, xl, vl, cam, F_latent):
    """Per-point local stress accelerations ``(B, K, M, 3)`` in the object frame."""
    cfg = params.config
    M = ops.value(xl).shape[2]
    pts = ops.concat([ops.mul(xl, 1.0 / cfg.length_scale), ops.mul(vl, cfg.velocity_scale),
                      np.asarray(cam, dtype=np.float64)[..., None]], axis=-1)
    ctx = ops.max(mlp_forward(params.stress_local, pts), axis=2)

    def spread(a):
        a = ops.expand_dims(a, 2)
        shape = ops.value(a).shape
        return ops.broadcast_to(a, shape[:2] + (M,) + shape[3:])

    out = mlp_forward(params.stress_head, ops.concat([pts, spread(F_latent), spread(ctx)], axis=-1))
    return ops.mul(out, cfg.stress_scale)


def check_finite(name, arr, step=None):
    v = ops.value(arr)
    bad = ~np.isfinite(v.reshape(v.shape[0], v.shape[1], -1)).all(axis=-1)
    if bad.any():
        b, k = map(int, np.argwhere(bad)[0])
        raise ModelDivergenceError(f"non-finite {name} for object {k} (scene {b})", object_index=k, step=step, scene=b)


@dataclass
class FieldEval:
    F_global: object  # (B, K, 6)
    F_latent: object  # (B, K, d_latent)
    F_local: object  # (B, K, M, 3) or None when deformation is disabled
    R: object  # (B, K, 3, 3)
    geometry: Geometry


def evaluate_field(params: ForceFieldParams, st: ModelState, h, domain: Domain, deform=True, step=None):
    geo = contact_geometry(ops.value(st.x), domain, params.config.threshold)
    raw = interaction(params, st, h, geo, domain)
    check_finite("interaction force", raw, step)
    F_global = ops.mul(ops.add(raw[..., :N_GLOBAL], boundary_response(params, st, h, geo, domain)),
                       global_scale(params))
    F_latent = raw[..., N_GLOBAL:]
    R, xl, vl = local_frame(st)
    F_local = None
    if deform:
        F_local = stress(params, xl, vl, geo.cam, F_latent)
        check_finite("stress", F_local, step)
    check_finite("boundary force", F_global, step)
    return FieldEval(F_global, F_latent, F_local, R, geo)


# ---------------------------------------------------------------------------
# per-object API on lists of ObjectState


def _pad(arrs):
    """Stack ragged ``(M_k, 3)`` arrays by repeating each one's first row.

    Duplicated points leave minimum distances and max-pools unchanged.
    """
    M = max(len(a) for a in arrs)
    out = np.empty((len(arrs), M, 3))
    for k, a in enumerate(arrs):
        a = np.asarray(a, dtype=np.float64)
        if len(a) == 0:
            raise ShapeError(f"object {k} has no keypoints")
        out[k, : len(a)] = a
        out[k, len(a):] = a[0]
    return out


def batch_states(states):
    """``ModelState`` with B=1 from a list of ``ObjectState``."""
    return ModelState(
        _pad([s.keypoints for s in states])[None],
        _pad([s.keypoint_velocities for s in states])[None],
        np.array([s.com for s in states], dtype=np.float64)[None],
        np.array([s.com_velocity for s in states], dtype=np.float64)[None],
        np.array([s.orientation for s in states], dtype=np.float64)[None],
        np.array([s.angular_velocity for s in states], dtype=np.float64)[None],
    )


def _features(states, params):
    hs = []
    for s in states:
        hs.append(s.feature if s.feature is not None else encode_keypoints(params, np.asarray(s.keypoints, float)))
    return np.stack(hs)[None]


def encode_state(state: ObjectState, params: ForceFieldParams):
    """Copy of ``state`` with its feature computed from the current keypoints."""
    h = encode_keypoints(params, np.asarray(state.keypoints, dtype=np.float64))
    return ObjectState(state.keypoints, state.keypoint_velocities, state.com, state.com_velocity,
                       state.orientation, state.angular_velocity, feature=h)


def interaction_forces(states, params: ForceFieldParams, domain: Domain, graph=None):
    """Per object ``(F_global, F_latent)``; F_global includes the boundary response."""
    st = batch_states(states)
    h = _features(states, params)
    geo = contact_geometry(st.x, domain, params.config.threshold)
    if graph is not None:
        geo.intersection = np.asarray(graph.intersection, dtype=bool)[None]
        geo.boundary = np.asarray(graph.boundary, dtype=bool)[None]
    raw = interaction(params, st, h, geo, domain)
    check_finite("interaction force", raw)
    Fg = (raw[..., :N_GLOBAL] + boundary_response(params, st, h, geo, domain)) * global_scale(params)
    return [(Fg[0, k], raw[0, k, N_GLOBAL:]) for k in range(len(states))]


def stress_forces(states, F_latent, cam, params: ForceFieldParams):
    """Per object local stress ``(M_k, 3)`` given latent forces and contact masks."""
    st = batch_states(states)
    M = st.x.shape[2]
    cam_b = np.zeros((1, len(states), M), dtype=bool)
    for k, bits in enumerate(cam):
        bits = np.asarray(bits, dtype=bool)
        cam_b[0, k, : len(bits)] = bits
        cam_b[0, k, len(bits):] = bits[0] if len(bits) else False
    _, xl, vl = local_frame(st)
    out = stress(params, xl, vl, cam_b, np.asarray(F_latent, dtype=np.float64)[None])
    check_finite("stress", out)
    return [out[0, k, : len(s.keypoints)] for k, s in enumerate(states)]


def force_field(states, params: ForceFieldParams, domain: Domain = Domain(), threshold=None, deform_enabled=True):
    if threshold is not None and threshold != params.config.threshold:
        params = replace(params, config=replace(params.config, threshold=threshold))
    st = batch_states(states)
    ev = evaluate_field(params, st, _features(states, params), domain, deform=deform_enabled)
    out = []
    for k, s in enumerate(states):
        m = len(s.keypoints)
        local = np.zeros((m, 3)) if ev.F_local is None else ev.F_local[0, k, :m]
        out.append(ForceOutput(ev.F_global[0, k], ev.F_latent[0, k], local))
    return out
