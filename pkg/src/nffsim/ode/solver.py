"""Second-order rollout of object states under the learned force field."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..core.types import Domain, ObjectState, Trajectory
from ..errors import ConfigError, ModelDivergenceError
from ..nff.contact import DEFAULT_THRESHOLD
from ..nff.field import ModelState, batch_states, encode_keypoints, euler_rotation, evaluate_field, wrapped
from ..nn import ops

METHODS = ("euler", "rk4")
COUPLINGS = ("composed", "pointwise")


@dataclass(frozen=True)
class ExternalForce:
    object_id: int
    t0: float
    t1: float
    value: tuple  # 6 components added to F_global while t0 <= t < t1

    def __post_init__(self):
        v = tuple(float(a) for a in self.value)
        if len(v) != 6:
            raise ConfigError(f"external force needs 6 components, got {len(v)}")
        if not self.t1 >= self.t0:
            raise ConfigError(f"external force window [{self.t0}, {self.t1}] is reversed")
        object.__setattr__(self, "value", v)

    def active(self, t):
        return self.t0 <= t < self.t1


@dataclass(frozen=True)
class OdeConfig:
    method: str = "euler"
    step_size: float = 2e-2
    horizon: int = 80
    gravity: tuple = (0.0, 0.0, -9.8)
    collision_threshold: float = DEFAULT_THRESHOLD
    deform_enabled: bool = True
    domain: Domain = field(default_factory=Domain)
    schedule: tuple = ()
    coupling: str = "composed"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown integration method {self.method!r}; expected one of {METHODS}")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"unknown coupling {self.coupling!r}; expected one of {COUPLINGS}")
        if not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if int(self.horizon) < 1:
            raise ConfigError("horizon must be at least 1")
        if not self.collision_threshold > 0:
            raise ConfigError("collision_threshold must be positive")
        object.__setattr__(self, "gravity", tuple(float(g) for g in self.gravity))
        object.__setattr__(self, "schedule", tuple(self.schedule))

    def with_(self, **kw):
        return replace(self, **kw)


def apply_external_force(cfg: OdeConfig, schedule, n_objects=None):
    """Config with extra scheduled forces ``(object_id, (t0, t1), 6-vector)``."""
    items = []
    end = cfg.horizon * cfg.step_size
    for entry in schedule:
        if isinstance(entry, ExternalForce):
            ef = entry
        else:
            oid, window, vec = entry
            ef = ExternalForce(int(oid), float(window[0]), float(window[1]), tuple(vec))
        if ef.object_id < 0 or (n_objects is not None and ef.object_id >= n_objects):
            raise ConfigError(f"external force targets unknown object {ef.object_id}")
        if ef.t0 < 0 or ef.t1 > end + 1e-9:
            raise ConfigError(f"external force window [{ef.t0}, {ef.t1}] exceeds the horizon of {end} s")
        items.append(ef)
    return cfg.with_(schedule=cfg.schedule + tuple(items))


def _external(cfg, shape, t):
    """Scheduled force array ``(B, K, 6)`` at time ``t``, or None."""
    active = [ef for ef in cfg.schedule if ef.active(t)]
    if not active:
        return None
    out = np.zeros(shape[:2] + (6,))
    for ef in active:
        if ef.object_id >= shape[1]:
            raise ConfigError(f"external force targets unknown object {ef.object_id}")
        out[:, ef.object_id] += ef.value
    return out


def derivative(st: ModelState, h, params, cfg: OdeConfig, t=0.0, step=None, field_fn=None):
    """Time derivative of every state field.

    ``field_fn(state, t) -> (F_global, F_local or None)`` replaces the learned
    field, which is how analytic test forces are injected.
    """
    if field_fn is None:
        ev = evaluate_field(params, st, h, cfg.domain, deform=cfg.deform_enabled, step=step)
        Fg, Fl, R = ev.F_global, ev.F_local, ev.R
    else:
        Fg, Fl = field_fn(st, t)
        R = euler_rotation(st.th) if Fl is not None else None
    ext = _external(cfg, ops.value(st.c).shape, t)
    if ext is not None:
        Fg = ops.add(Fg, ext)
    g = np.asarray(cfg.gravity)
    acc = ops.add(Fg[..., :3], g)
    alpha = Fg[..., 3:]
    if cfg.coupling == "composed":
        r = ops.sub(st.x, ops.expand_dims(st.c, 2))
        dxd = ops.add(ops.expand_dims(acc, 2), ops.cross(ops.expand_dims(alpha, 2), r))
    else:
        dxd = ops.broadcast_to(ops.expand_dims(acc, 2), ops.value(st.x).shape)
    if Fl is not None:
        dxd = ops.add(dxd, ops.matmul(Fl, ops.swapaxes(R, -1, -2)))
    v = ops.value(dxd)
    if not np.all(np.isfinite(v)):
        b, k = (int(i) for i in np.argwhere(~np.isfinite(v))[0][:2])
        raise ModelDivergenceError(f"non-finite acceleration for object {k} at step {step}", object_index=k,
                                   step=step, scene=b)
    return ModelState(st.xd, dxd, st.cd, acc, st.thd, alpha)


def _axpy(st: ModelState, d: ModelState, a):
    return ModelState(*(ops.add(getattr(st, f), ops.mul(getattr(d, f), a)) for f in ModelState.FIELDS))


def _wrap_state(st: ModelState):
    return ModelState(st.x, st.xd, st.c, st.cd, wrapped(st.th), st.thd)


def step(st: ModelState, h, params, cfg: OdeConfig, t, index=None, field_fn=None):
    dt = cfg.step_size
    if cfg.method == "euler":
        return _wrap_state(_axpy(st, derivative(st, h, params, cfg, t, index, field_fn), dt))
    k1 = derivative(st, h, params, cfg, t, index, field_fn)
    k2 = derivative(_axpy(st, k1, 0.5 * dt), h, params, cfg, t + 0.5 * dt, index, field_fn)
    k3 = derivative(_axpy(st, k2, 0.5 * dt), h, params, cfg, t + 0.5 * dt, index, field_fn)
    k4 = derivative(_axpy(st, k3, dt), h, params, cfg, t + dt, index, field_fn)
    out = []
    for f in ModelState.FIELDS:
        incr = ops.add(ops.add(getattr(k1, f), ops.mul(ops.add(getattr(k2, f), getattr(k3, f)), 2.0)), getattr(k4, f))
        out.append(ops.add(getattr(st, f), ops.mul(incr, dt / 6.0)))
    return _wrap_state(ModelState(*out))


def rollout_states(st0: ModelState, h, params, cfg: OdeConfig, horizon=None, field_fn=None):
    """Frames ``[z0, z1, ..., z_horizon]``; works on tape variables.

    On divergence the raised error carries the frames computed so far in
    ``trajectory``.
    """
    horizon = cfg.horizon if horizon is None else int(horizon)
    frames = [st0]
    st = st0
    for n in range(horizon):
        try:
            st = step(st, h, params, cfg, n * cfg.step_size, n, field_fn)
        except ModelDivergenceError as exc:
            exc.step = n
            exc.trajectory = frames
            raise
        frames.append(st)
    return frames


def frames_to_trajectory(frames, counts=None, frame_dt=0.02, scene_ref="", split_tag="train"):
    """Trajectory for scene 0 of a list of batched frames."""
    vals = [f.values() for f in frames]
    K = vals[0].c.shape[1]
    counts = counts or [vals[0].x.shape[2]] * K
    x = np.stack([v.x[0] for v in vals])  # (T, K, M, 3)
    xd = np.stack([v.xd[0] for v in vals])
    return Trajectory(
        keypoints=[x[:, k, : counts[k]].copy() for k in range(K)],
        keypoint_velocities=[xd[:, k, : counts[k]].copy() for k in range(K)],
        com=np.stack([v.c[0] for v in vals]),
        com_velocity=np.stack([v.cd[0] for v in vals]),
        orientation=np.stack([v.th[0] for v in vals]),
        angular_velocity=np.stack([v.thd[0] for v in vals]),
        frame_dt=frame_dt,
        scene_ref=scene_ref,
        split_tag=split_tag,
    )


def initial_features(states, params):
    return np.stack([s.feature if s.feature is not None else
                     encode_keypoints(params, np.asarray(s.keypoints, dtype=np.float64)) for s in states])[None]


def rollout(z0, params, cfg: OdeConfig, field_fn=None, scene_ref="", split_tag="train"):
    """Integrate ``cfg.horizon`` steps from a list of object states.

    The returned trajectory has ``horizon + 1`` frames, the first being ``z0``.
    On divergence, :class:`ModelDivergenceError` carries the truncated
    trajectory.
    """
    z0 = list(z0)
    st0 = batch_states(z0)
    counts = [len(s.keypoints) for s in z0]
    h = None if field_fn is not None else initial_features(z0, params)
    try:
        frames = rollout_states(st0, h, params, cfg, field_fn=field_fn)
    except ModelDivergenceError as exc:
        if exc.trajectory is not None and len(exc.trajectory) >= 2:
            exc.trajectory = frames_to_trajectory(exc.trajectory, counts, cfg.step_size, scene_ref, split_tag)
        else:
            exc.trajectory = None
        raise
    return frames_to_trajectory(frames, counts, cfg.step_size, scene_ref, split_tag)


def initial_states(traj: Trajectory, t=0):
    return [traj.state(t, k) for k in range(traj.n_objects)]
