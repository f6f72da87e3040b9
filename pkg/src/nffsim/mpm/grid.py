"""Background grid, colliders and the three transfer stages."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, InvertedElementError, OutOfDomainError
from . import kernels

log = logging.getLogger(__name__)

GRID_PAD = 3
MASS_EPS = 1e-14
_MODELS = {"sticky": kernels.STICKY, "slip": kernels.SLIP, "separate": kernels.SEPARATE}
_KINDS = {"domain_box": kernels.BOX_WALLS, "plane": kernels.PLANE, "cuboid": kernels.CUBOID}


@dataclass
class Grid:
    """Uniform grid over the domain plus ``GRID_PAD`` ghost cells per side.

    Node ``(i, j, k)`` sits at ``origin + (i, j, k) * spacing``.
    """

    resolution: int
    spacing: float
    origin: np.ndarray
    node_mass: np.ndarray = field(repr=False)
    node_momentum: np.ndarray = field(repr=False)
    node_velocity: np.ndarray = field(repr=False)
    flag: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)
    n_active: int = 0

    @classmethod
    def for_domain(cls, domain, resolution=64):
        if resolution < 8:
            raise ConfigError("grid resolution must be >= 8")
        h = domain.edge / resolution
        G = resolution + 2 * GRID_PAD + 1
        nodes = G**3
        return cls(resolution, h, domain.lo - GRID_PAD * h,
                   np.zeros(nodes), np.zeros((nodes, 3)), np.zeros((nodes, 3)),
                   np.zeros(nodes, dtype=np.uint8), np.zeros(nodes, dtype=np.int64))

    @property
    def nodes_per_axis(self):
        return self.resolution + 2 * GRID_PAD + 1

    def node_positions(self, flat_indices):
        G = self.nodes_per_axis
        idx = np.asarray(flat_indices)
        ijk = np.stack([idx // (G * G), (idx // G) % G, idx % G], axis=-1)
        return self.origin + ijk * self.spacing

    def active_nodes(self):
        return self.active[: self.n_active]

    def total_mass(self):
        return float(self.node_mass[self.active_nodes()].sum())

    def total_momentum(self):
        return self.node_momentum[self.active_nodes()].sum(axis=0)

    def clear(self):
        kernels.clear_kernel(self.node_mass, self.node_momentum, self.node_velocity,
                             self.flag, self.active, self.n_active)
        self.n_active = 0


@dataclass(frozen=True)
class Collider:
    """Grid boundary condition.

    ``domain_box``: ``a``/``b`` are the box corners, nodes on or beyond a face are projected.
    ``plane``: ``a`` is a point, ``b`` the unit normal toward free space.
    ``cuboid``: obstacle with corners ``a``/``b``.
    """

    kind: str
    a: tuple
    b: tuple
    surface_model: str = "sticky"
    friction: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown collider kind {self.kind!r}")
        if self.surface_model not in _MODELS:
            raise ConfigError(f"unknown surface model {self.surface_model!r}")
        if self.friction < 0:
            raise ConfigError("friction must be non-negative")
        if self.kind == "plane":
            n = np.asarray(self.b, dtype=np.float64)
            object.__setattr__(self, "b", tuple(n / np.linalg.norm(n)))


def default_colliders(config):
    """Domain walls plus a floor plane at the bottom face."""
    d = config.domain
    return [
        Collider("domain_box", tuple(d.lo), tuple(d.hi), config.wall_model, config.friction),
        Collider("plane", tuple(d.lo), (0.0, 0.0, 1.0), config.floor_model, config.friction),
    ]


def pack_colliders(colliders):
    n = len(colliders)
    kind = np.array([_KINDS[c.kind] for c in colliders], dtype=np.int64)
    a = np.array([c.a for c in colliders], dtype=np.float64).reshape(n, 3)
    b = np.array([c.b for c in colliders], dtype=np.float64).reshape(n, 3)
    model = np.array([_MODELS[c.surface_model] for c in colliders], dtype=np.int64)
    friction = np.array([c.friction for c in colliders], dtype=np.float64)
    return kind, a, b, model, friction


def _as_working(system):
    return (np.ascontiguousarray(system.positions, dtype=np.float64),
            np.ascontiguousarray(system.velocities, dtype=np.float64),
            np.ascontiguousarray(system.affine, dtype=np.float64),
            np.ascontiguousarray(system.deformation_gradients, dtype=np.float64))


def p2g(system, grid, dt, mu=None, lam=None):
    """Particle-to-grid scatter; the grid is cleared first and returned."""
    n = system.size
    mu = np.zeros(n) if mu is None else np.broadcast_to(np.asarray(mu, dtype=np.float64), (n,)).copy()
    lam = np.zeros(n) if lam is None else np.broadcast_to(np.asarray(lam, dtype=np.float64), (n,)).copy()
    x, v, C, F = _as_working(system)
    grid.clear()
    scatter(grid, x, v, C, F, system.masses, system.volumes, mu, lam, dt)
    return grid


def scatter(grid, x, v, C, F, mass, vol, mu, lam, dt, frame=None):
    status, p, n_active = kernels.p2g_kernel(
        x, v, C, F, mass, vol, mu, lam, dt, grid.origin, grid.spacing, grid.nodes_per_axis,
        grid.node_mass, grid.node_momentum, grid.flag, grid.active, grid.n_active)
    grid.n_active = n_active
    if status == kernels.STATUS_INVERTED:
        raise InvertedElementError(f"particle {p} has det F <= 0 (frame {frame})", frame=frame)
    if status == kernels.STATUS_OUTSIDE:
        raise OutOfDomainError(f"particle {p} at {x[p]} lies outside the grid support")


def grid_update(grid, colliders, gravity, dt):
    """Momentum to velocity, gravity, then collider projections in order."""
    kind, a, b, model, friction = pack_colliders(colliders)
    kernels.grid_update_kernel(
        grid.node_mass, grid.node_momentum, grid.node_velocity, grid.active, grid.n_active,
        grid.origin, grid.spacing, grid.nodes_per_axis, np.asarray(gravity, dtype=np.float64), dt,
        kind, a, b, model, friction, MASS_EPS)
    return grid


def clamp_box(grid):
    """Advection bounds: the grid interior shrunk by a 2h margin."""
    G = grid.nodes_per_axis
    lo = grid.origin + 2 * grid.spacing
    hi = grid.origin + (G - 1) * grid.spacing - 2 * grid.spacing
    return lo, hi


def gather(grid, x, v, C, F, dt):
    lo, hi = clamp_box(grid)
    status, p, vmax, n_clamped = kernels.g2p_kernel(
        x, v, C, F, dt, grid.origin, grid.spacing, grid.nodes_per_axis, grid.node_velocity, lo, hi)
    if status == kernels.STATUS_OUTSIDE:
        raise OutOfDomainError(f"particle {p} at {x[p]} lies outside the grid support")
    if n_clamped:
        log.warning("clamped %d particle(s) to the grid interior", n_clamped)
    return vmax


def g2p(system, grid, dt):
    """Grid-to-particle gather; returns an updated copy of ``system``."""
    out = system.copy()
    gather(grid, out.positions, out.velocities, out.affine, out.deformation_gradients, dt)
    return out
