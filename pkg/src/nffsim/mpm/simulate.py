"""Ground-truth trajectory generation with the MPM solver."""

from __future__ import annotations

import logging

import numpy as np

from ..core.kinematics import (angular_velocity_to_euler_rates, euler_to_rotation, polar_rotation,
                               project_to_so3, rotation_to_euler)
from ..core.scene import instantiate_scene, sample_keypoints
from ..core.types import Trajectory
from ..errors import CFLError, ConfigError, InvertedElementError, OutOfDomainError
from . import kernels
from .grid import (MASS_EPS, Grid, clamp_box, default_colliders, gather, grid_update, pack_colliders,
                   scatter)

CFL_NUMBER = 0.5
log = logging.getLogger(__name__)


def particle_materials(config, store, system):
    mu = np.empty(system.size)
    lam = np.empty(system.size)
    for k, spec in enumerate(config.objects):
        m, l = store.material(spec.material).lame
        sel = system.object_ids == k
        mu[sel] = m
        lam[sel] = l
    return mu, lam


def object_observables(system, k, init_rotation):
    """COM state and orientation of object ``k``.

    Orientation is the mass-weighted average of the per-particle polar
    rotations, projected back to SO(3) and composed with the initial pose.
    Angular velocity comes from angular momentum and the inertia tensor and is
    reported as Euler-angle rates.
    """
    sl = system.object_slice(k)
    x = system.positions[sl]
    v = system.velocities[sl]
    m = system.masses[sl]
    mt = m.sum()
    c = m @ x / mt
    cd = m @ v / mt
    Rp = polar_rotation(system.deformation_gradients[sl])
    R = project_to_so3(np.einsum("p,pij->ij", m, Rp)) @ init_rotation
    theta = rotation_to_euler(R)
    r = x - c
    L = np.sum(m[:, None] * np.cross(r, v - cd), axis=0)
    inertia = np.einsum("p,pij->ij", m, np.einsum("pk,pk->p", r, r)[:, None, None] * np.eye(3)
                        - r[:, :, None] * r[:, None, :])
    omega = np.linalg.lstsq(inertia, L, rcond=1e-12)[0]
    return c, cd, theta, angular_velocity_to_euler_rates(theta, omega)


def simulate(config, store, keypoints_per_object=32, seed=0, colliders=None, on_substep=None,
             particle_frames=None, split_tag="train"):
    """Run ``n_main_steps * substeps_per_main`` substeps and record one frame per main step.

    Frame ``k`` holds the state at ``t = (k + 1) * main_dt``.  ``on_substep`` is
    called as ``on_substep(step, x, v, masses, grid)`` after every substep's
    scatter; ``particle_frames`` (a list) receives ``(positions, covariances)``
    per recorded frame.
    """
    if config.n_main_steps < 2:
        raise ConfigError("simulate needs n_main_steps >= 2 to form a trajectory")
    system = instantiate_scene(config, store)
    K = system.n_objects
    colliders = default_colliders(config) if colliders is None else colliders
    grid = Grid.for_domain(config.domain, config.grid_resolution)
    mu, lam = particle_materials(config, store, system)
    dt = config.substep_dt
    gravity = np.asarray(config.gravity, dtype=np.float64)
    x = system.positions.copy()
    v = system.velocities.copy()
    C = system.affine.copy()
    F = system.deformation_gradients.copy()
    mass, vol = system.masses, system.volumes

    kp_idx = [sample_keypoints(system, k, min(keypoints_per_object, int((system.object_ids == k).sum())),
                               seed=seed + k) for k in range(K)]
    init_R = [euler_to_rotation(spec.rotation) for spec in config.objects]
    T = config.n_main_steps
    kx = [np.empty((T, len(i), 3), dtype=np.float32) for i in kp_idx]
    kv = [np.empty((T, len(i), 3), dtype=np.float32) for i in kp_idx]
    com = np.zeros((T, K, 3))
    comv = np.zeros((T, K, 3))
    th = np.zeros((T, K, 3))
    thd = np.zeros((T, K, 3))

    step = 0
    packed = pack_colliders(colliders)
    lo, hi = clamp_box(grid)
    for frame in range(T):
        if on_substep is None:
            status, p, done, n_clamped = kernels.substeps_kernel(
                config.substeps_per_main, x, v, C, F, mass, vol, mu, lam, dt, grid.origin,
                grid.spacing, grid.nodes_per_axis, grid.node_mass, grid.node_momentum,
                grid.node_velocity, grid.flag, grid.active, gravity, *packed, MASS_EPS, lo, hi,
                CFL_NUMBER)
            if n_clamped:
                log.warning("clamped %d particle position(s) to the grid interior", n_clamped)
            if status == kernels.STATUS_INVERTED:
                raise InvertedElementError(
                    f"particle {p} has det F <= 0 at substep {step + done} (frame {frame})",
                    frame=frame, step=step + done)
            if status == kernels.STATUS_OUTSIDE:
                raise OutOfDomainError(f"particle {p} left the grid support at substep {step + done}")
            if status == kernels.STATUS_CFL:
                raise CFLError(f"CFL violated at substep {step + done}", step=step + done)
            step += done
        else:
            for _ in range(config.substeps_per_main):
                grid.clear()
                try:
                    scatter(grid, x, v, C, F, mass, vol, mu, lam, dt, frame=frame)
                except InvertedElementError as e:
                    raise InvertedElementError(f"{e} at substep {step}", frame=frame, step=step) from None
                on_substep(step, x, v, mass, grid)
                grid_update(grid, colliders, gravity, dt)
                vmax = gather(grid, x, v, C, F, dt)
                if vmax * dt > CFL_NUMBER * grid.spacing:
                    raise CFLError(f"CFL violated at substep {step}: v_max={vmax:.3g} m/s", step=step)
                step += 1
            grid.clear()
        snap = system.__class__(x, v, F, mass, vol, system.covariances, system.object_ids, K, C)
        for k in range(K):
            kx[k][frame] = x[kp_idx[k]]
            kv[k][frame] = v[kp_idx[k]]
            com[frame, k], comv[frame, k], th[frame, k], thd[frame, k] = object_observables(
                snap, k, init_R[k])
        if particle_frames is not None:
            particle_frames.append((x.copy(), snap.exported_covariances()))
    return Trajectory(kx, kv, com, comv, th, thd, frame_dt=config.main_dt,
                      scene_ref=config.scene_id, split_tag=split_tag)
