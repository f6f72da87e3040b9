"""Reference predictors: ballistic, constant velocity and MPM re-simulation."""

from __future__ import annotations

import numpy as np

from ..core.types import Trajectory
from ..errors import ConfigError

BASELINES = ("ballistic", "constant-velocity", "mpm")


def _extrapolate(gt: Trajectory, gravity):
    t = np.arange(gt.n_frames)[:, None, None] * gt.frame_dt
    g = np.asarray(gravity, dtype=np.float64)
    drop = 0.5 * g * t * t
    com = gt.com[0] + gt.com_velocity[0] * t + drop
    vel = np.broadcast_to(gt.com_velocity[0] + g * t, com.shape).copy()
    th = gt.orientation[0] + gt.angular_velocity[0] * t
    kps, kvs = [], []
    for x, v in zip(gt.keypoints, gt.keypoint_velocities):
        x0 = np.asarray(x[0], dtype=np.float64)
        v0 = np.asarray(v[0], dtype=np.float64)
        kps.append(x0 + v0 * t + drop)
        kvs.append(np.broadcast_to(v0 + g * t, kps[-1].shape).copy())
    return Trajectory(kps, kvs, com, vel, th, np.broadcast_to(gt.angular_velocity[0], th.shape).copy(),
                      gt.frame_dt, gt.scene_ref, gt.split_tag)


class Ballistic:
    """Free flight under gravity from the initial state, ignoring all contact."""

    def __init__(self, gravity=(0.0, 0.0, -9.8)):
        self.gravity = gravity

    def __call__(self, gt):
        return _extrapolate(gt, self.gravity)


class ConstantVelocity:
    def __call__(self, gt):
        return _extrapolate(gt, (0.0, 0.0, 0.0))


class MpmResimulate:
    """Run the simulator again from the scene configuration of each trajectory."""

    def __init__(self, configs, store, keypoints_per_object=None):
        self.configs = {c.scene_id: c for c in configs}
        self.store = store
        self.keypoints_per_object = keypoints_per_object

    def __call__(self, gt):
        from ..mpm.simulate import simulate

        cfg = self.configs.get(gt.scene_ref)
        if cfg is None:
            raise ConfigError(f"no scene configuration for {gt.scene_ref!r}")
        m = self.keypoints_per_object or gt.keypoint_counts[0]
        return simulate(cfg.with_(n_main_steps=gt.n_frames), self.store, keypoints_per_object=m,
                        split_tag=gt.split_tag)


def make_baseline(name, **kw):
    if name == "ballistic":
        return Ballistic(kw.get("gravity", (0.0, 0.0, -9.8)))
    if name == "constant-velocity":
        return ConstantVelocity()
    if name == "mpm":
        return MpmResimulate(kw["configs"], kw["store"], kw.get("keypoints_per_object"))
    raise ConfigError(f"unknown baseline {name!r}; expected one of {BASELINES}")
