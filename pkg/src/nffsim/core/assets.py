"""Object assets: unit-normalized particle clouds plus a physical size.

The built-in library mirrors the ten everyday object kinds of the dataset
with procedural shapes.  ``PAPER_PARTICLE_COUNTS`` reproduces the reference
particle counts; desk-scale libraries sample a regular lattice instead so
the MPM solver stays cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigError
from .types import MaterialParams

PAPER_PARTICLE_COUNTS = {
    "ball": 106115, "bowl": 232764, "can": 70569, "cloth": 116188, "duck": 80544,
    "miku": 48316, "panda": 56104, "phone": 26571, "pillow": 64229, "rope": 8051,
}

# Stiff kinds stay below E/rho ~ 1e4 so the default 1e-4 s substep is stable.
DEFAULT_MATERIALS = {
    "ball": MaterialParams("ball", 2.0e6, 0.40, 600.0),
    "bowl": MaterialParams("bowl", 1.0e7, 0.30, 1200.0),
    "can": MaterialParams("can", 1.0e7, 0.30, 1000.0),
    "cloth": MaterialParams("cloth", 1.0e5, 0.30, 200.0),
    "duck": MaterialParams("duck", 5.0e5, 0.35, 400.0),
    "miku": MaterialParams("miku", 1.0e6, 0.35, 800.0),
    "panda": MaterialParams("panda", 5.0e5, 0.35, 500.0),
    "phone": MaterialParams("phone", 2.0e7, 0.30, 2000.0),
    "pillow": MaterialParams("pillow", 6.0e4, 0.30, 150.0),
    "rope": MaterialParams("rope", 2.0e5, 0.30, 500.0),
}

# physical size (largest bounding-box extent, metres)
DEFAULT_SIZES = {
    "ball": 0.22, "bowl": 0.30, "can": 0.20, "cloth": 0.32, "duck": 0.24,
    "miku": 0.28, "panda": 0.26, "phone": 0.24, "pillow": 0.32, "rope": 0.40,
}

SOFT_KINDS = ("cloth", "pillow", "rope", "duck", "panda")


def _inside(kind, p):
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    r = np.linalg.norm(p, axis=1)
    if kind == "ball":
        return r <= 0.5
    if kind == "bowl":
        return (r <= 0.5) & (r >= 0.34) & (z <= 0.0)
    if kind == "can":
        return (x**2 + y**2 <= 0.3**2) & (np.abs(z) <= 0.5)
    if kind == "cloth":
        return (np.abs(x) <= 0.5) & (np.abs(y) <= 0.5) & (np.abs(z) <= 0.08)
    if kind == "duck":
        body = (x / 0.5) ** 2 + (y / 0.32) ** 2 + ((z + 0.1) / 0.28) ** 2 <= 1.0
        head = (x - 0.28) ** 2 + y**2 + (z - 0.22) ** 2 <= 0.18**2
        return body | head
    if kind == "miku":
        body = (x**2 + y**2 <= 0.16**2) & (z >= -0.5) & (z <= 0.15)
        head = x**2 + y**2 + (z - 0.3) ** 2 <= 0.2**2
        arms = (np.abs(x) <= 0.38) & (np.abs(y) <= 0.07) & (np.abs(z - 0.02) <= 0.07)
        return body | head | arms
    if kind == "panda":
        body = x**2 + y**2 + (z + 0.15) ** 2 <= 0.35**2
        head = x**2 + y**2 + (z - 0.3) ** 2 <= 0.22**2
        return body | head
    if kind == "phone":
        return (np.abs(x) <= 0.25) & (np.abs(y) <= 0.5) & (np.abs(z) <= 0.06)
    if kind == "pillow":
        return (np.abs(x / 0.5) ** 4 + np.abs(y / 0.36) ** 4 + np.abs(z / 0.17) ** 4) <= 1.0
    if kind == "rope":
        return (np.abs(x) <= 0.5) & (y**2 + z**2 <= 0.085**2)
    raise ConfigError(f"unknown procedural shape {kind!r}")


def normalize_points(points):
    """Centre the bounding box at the origin and scale its largest extent to 1."""
    points = np.asarray(points, dtype=np.float64)
    lo, hi = points.min(axis=0), points.max(axis=0)
    extent = float((hi - lo).max())
    if extent <= 0:
        raise ConfigError("asset cloud has zero extent")
    return (points - 0.5 * (lo + hi)) / extent


def procedural_points(kind, count=None, spacing=None, seed=0):
    """Sample a shape either with exactly ``count`` random points or on a lattice.

    ``spacing`` is expressed in normalized units (the shape spans ~1).
    """
    if (count is None) == (spacing is None):
        raise ConfigError("give exactly one of count / spacing")
    if spacing is not None:
        ax = np.arange(-0.5, 0.5 + 1e-9, spacing)
        ax = ax - ax.mean()
        grid = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        pts = grid[_inside(kind, grid)]
    else:
        rng = np.random.default_rng(seed)
        chunks, have = [], 0
        while have < count:
            cand = rng.uniform(-0.5, 0.5, size=(max(4 * (count - have), 1024), 3))
            cand = cand[_inside(kind, cand)]
            chunks.append(cand)
            have += len(cand)
        pts = np.concatenate(chunks)[:count]
    return normalize_points(pts)


def estimate_volume(points, voxel=None):
    """Voxel-occupancy volume of a point cloud.

    The voxel edge is 1/64 of the largest bounding-box extent, raised to the
    median nearest-neighbour spacing so sparse clouds are not undercounted.
    """
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return 0.0
    extent = float((points.max(axis=0) - points.min(axis=0)).max())
    if voxel is None:
        voxel = extent / 64.0
        if len(points) > 1:
            d, _ = cKDTree(points).query(points, k=2)
            voxel = max(voxel, float(np.median(d[:, 1])))
        if voxel <= 0:
            voxel = 1.0
    cells = np.floor((points - points.min(axis=0)) / voxel).astype(np.int64)
    occupied = len(np.unique(cells, axis=0))
    return occupied * voxel**3


@dataclass(eq=False)
class Asset:
    name: str
    points: np.ndarray  # unit-normalized
    size: float  # metres spanned by the largest extent
    material: str
    volume: float | None = None  # physical, m^3

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.volume is None:
            self.volume = estimate_volume(self.points) * self.size**3

    @property
    def n_particles(self):
        return len(self.points)

    def physical_points(self):
        return self.points * self.size


class AssetStore:
    """Named assets plus the material table."""

    def __init__(self, assets=(), materials=None):
        self.assets = {a.name: a for a in assets}
        self.materials = dict(DEFAULT_MATERIALS if materials is None else materials)

    def __contains__(self, name):
        return name in self.assets

    def asset(self, name):
        try:
            return self.assets[name]
        except KeyError:
            raise ConfigError(f"unknown asset {name!r}; known: {sorted(self.assets)}") from None

    def material(self, name):
        try:
            return self.materials[name]
        except KeyError:
            raise ConfigError(f"unknown material {name!r}; known: {sorted(self.materials)}") from None

    def add(self, asset):
        self.assets[asset.name] = asset

    @property
    def names(self):
        return sorted(self.assets)


def builtin_assets(scale="desk", spacing=0.75 / 32, kinds=None, seed=0):
    """The ten-object library.

    ``scale="paper"`` samples the reference particle counts; ``"desk"`` uses a
    lattice with the given physical ``spacing`` (metres).
    """
    kinds = list(kinds or PAPER_PARTICLE_COUNTS)
    assets = []
    for i, kind in enumerate(kinds):
        size = DEFAULT_SIZES[kind]
        if scale == "paper":
            pts = procedural_points(kind, count=PAPER_PARTICLE_COUNTS[kind], seed=seed + i)
            # random samples: use the analytic-ish voxel estimate at 1/64
            volume = estimate_volume(pts, voxel=1.0 / 64.0) * size**3
        elif scale == "desk":
            pts = procedural_points(kind, spacing=spacing / size)
            volume = None
        else:
            raise ConfigError(f"unknown asset scale {scale!r}")
        assets.append(Asset(kind, pts, size, kind, volume))
    return AssetStore(assets)
