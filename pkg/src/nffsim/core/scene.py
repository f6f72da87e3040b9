"""Scene instantiation and keypoint sampling."""

import numpy as np

from ..errors import PlacementError, SamplingError
from .kinematics import center_of_mass, euler_to_rotation
from .types import ParticleSystem


def place_asset(asset, spec):
    """World-space particle positions of one object spec."""
    R = euler_to_rotation(spec.rotation)
    return asset.physical_points() @ R.T + np.asarray(spec.translation, dtype=np.float64)


def instantiate_scene(config, store):
    """Build the initial :class:`ParticleSystem` of a scene.

    Objects occupy contiguous particle ranges in spec order; mass per particle
    is ``density * volume / count``.
    """
    pos, vel, mass, vol, cov, oid = [], [], [], [], [], []
    for k, spec in enumerate(config.objects):
        asset = store.asset(spec.asset)
        material = store.material(spec.material)
        p = place_asset(asset, spec)
        inside = config.domain.contains(p)
        if not np.all(inside):
            raise PlacementError(
                f"object {k} ({spec.asset}) has {int((~inside).sum())} particles outside the domain")
        n = len(p)
        v0 = asset.volume / n
        pos.append(p)
        vel.append(np.broadcast_to(np.asarray(spec.velocity, dtype=np.float64), (n, 3)))
        mass.append(np.full(n, material.density * v0))
        vol.append(np.full(n, v0))
        radius = 0.5 * v0 ** (1.0 / 3.0)
        cov.append(np.broadcast_to(np.eye(3) * radius**2, (n, 3, 3)))
        oid.append(np.full(n, k, dtype=np.int64))
    if not pos:
        return ParticleSystem(
            np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3, 3)), np.zeros(0), np.zeros(0),
            np.zeros((0, 3, 3)), np.zeros(0, dtype=np.int64), n_objects=0)
    n_total = sum(len(p) for p in pos)
    return ParticleSystem(
        positions=np.concatenate(pos),
        velocities=np.concatenate(vel).copy(),
        deformation_gradients=np.tile(np.eye(3), (n_total, 1, 1)),
        masses=np.concatenate(mass),
        volumes=np.concatenate(vol),
        covariances=np.concatenate(cov).copy(),
        object_ids=np.concatenate(oid),
        n_objects=len(config.objects),
    )


def farthest_point_sampling(points, count, start, order=None):
    """Indices (into ``points``) picked greedily by farthest distance.

    ``order`` is a permutation used to break distance ties; ``argmax`` picks
    the first maximal candidate in that order.
    """
    n = len(points)
    order = np.arange(n) if order is None else np.asarray(order)
    pts = points[order]
    pos = int(np.flatnonzero(order == start)[0])
    chosen = [pos]
    dist = np.linalg.norm(pts - pts[pos], axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return order[np.asarray(chosen)]


def sample_keypoints(system, k, count, seed=0):
    """Farthest-point sample ``count`` particles of object ``k``.

    Sampling starts at the particle nearest the object's centre of mass and
    the result is sorted global particle indices.
    """
    idx = np.flatnonzero(system.object_ids == k)
    if count > len(idx) or count < 1:
        raise SamplingError(f"object {k} has {len(idx)} particles, cannot sample {count} keypoints")
    if count == len(idx):
        return idx.copy()
    pts = system.positions[idx]
    com = center_of_mass(pts, system.masses[idx])
    d0 = np.linalg.norm(pts - com, axis=1)
    order = np.random.default_rng(seed).permutation(len(idx))
    start = int(order[np.argmin(d0[order])])
    local = farthest_point_sampling(pts, count, start, order)
    return np.sort(idx[local])
