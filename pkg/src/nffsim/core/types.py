"""Domain value types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, ShapeError
from .kinematics import derive_lame

SPLIT_TAGS = ("train", "spatial", "temporal", "compositional")


@dataclass(frozen=True)
class MaterialParams:
    name: str
    youngs_modulus: float
    poisson_ratio: float
    density: float

    def __post_init__(self):
        derive_lame(self.youngs_modulus, self.poisson_ratio)  # validates E and nu
        if not self.density > 0:
            raise ConfigError(f"material {self.name!r}: density must be positive")

    @property
    def lame(self):
        return derive_lame(self.youngs_modulus, self.poisson_ratio)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned cube ``[origin, origin + edge]^3``."""

    origin: tuple = (0.0, 0.0, 0.0)
    edge: float = 2.0

    def __post_init__(self):
        if not self.edge > 0:
            raise ConfigError(f"domain edge must be positive, got {self.edge}")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @property
    def lo(self):
        return np.asarray(self.origin)

    @property
    def hi(self):
        return np.asarray(self.origin) + self.edge

    @property
    def center(self):
        return self.lo + 0.5 * self.edge

    def contains(self, points):
        points = np.asarray(points)
        return np.all((points >= self.lo) & (points <= self.hi), axis=-1)


@dataclass(frozen=True)
class ObjectSpec:
    asset: str
    material: str
    translation: tuple = (0.0, 0.0, 0.0)
    rotation: tuple = (0.0, 0.0, 0.0)
    velocity: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SceneConfig:
    objects: tuple = ()
    domain: Domain = field(default_factory=Domain)
    gravity: tuple = (0.0, 0.0, -9.8)
    main_dt: float = 0.02
    substeps_per_main: int = 200
    n_main_steps: int = 100
    scene_id: str = "scene"
    group: str = ""
    grid_resolution: int = 64
    floor_model: str = "sticky"
    wall_model: str = "separate"
    friction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.substeps_per_main < 1:
            raise ConfigError("substeps_per_main must be >= 1")
        if self.n_main_steps < 1:
            raise ConfigError("n_main_steps must be >= 1")
        if not self.main_dt > 0:
            raise ConfigError("main_dt must be positive")
        if self.grid_resolution < 8:
            raise ConfigError("grid resolution must be >= 8")
        for model in (self.floor_model, self.wall_model):
            if model not in ("sticky", "slip", "separate"):
                raise ConfigError(f"unknown surface model {model!r}")

    @property
    def substep_dt(self):
        return self.main_dt / self.substeps_per_main

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    positions: np.ndarray
    velocities: np.ndarray
    deformation_gradients: np.ndarray
    masses: np.ndarray
    volumes: np.ndarray
    covariances: np.ndarray
    object_ids: np.ndarray
    n_objects: int
    affine: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.positions)
        for name in ("velocities", "deformation_gradients", "masses", "volumes", "covariances", "object_ids"):
            if len(getattr(self, name)) != m:
                raise ShapeError(f"ParticleSystem.{name} has length {len(getattr(self, name))}, expected {m}")
        if self.affine is None:
            object.__setattr__(self, "affine", np.zeros((m, 3, 3)))

    @property
    def size(self):
        return len(self.positions)

    def object_slice(self, k):
        idx = np.flatnonzero(self.object_ids == k)
        if len(idx) == 0:
            return slice(0, 0)
        return slice(int(idx[0]), int(idx[-1]) + 1)

    def copy(self):
        return ParticleSystem(*(np.array(getattr(self, n)) for n in (
            "positions", "velocities", "deformation_gradients", "masses", "volumes",
            "covariances", "object_ids")), n_objects=self.n_objects, affine=np.array(self.affine))

    def exported_covariances(self):
        """Covariances advected by the deformation gradient, ``F S F^T``."""
        F = self.deformation_gradients
        return F @ self.covariances @ np.swapaxes(F, -1, -2)


@dataclass(eq=False)
class ObjectState:
    keypoints: np.ndarray
    keypoint_velocities: np.ndarray
    com: np.ndarray
    com_velocity: np.ndarray
    orientation: np.ndarray
    angular_velocity: np.ndarray
    feature: np.ndarray | None = None


@dataclass(eq=False)
class Trajectory:
    """Frames of per-object keypoint and rigid-body state.

    Keypoints are stored per object as ``(T, M_k, 3)`` arrays so objects may
    carry different keypoint counts; low dimensional state is ``(T, K, 3)``.
    """

    keypoints: list
    keypoint_velocities: list
    com: np.ndarray
    com_velocity: np.ndarray
    orientation: np.ndarray
    angular_velocity: np.ndarray
    frame_dt: float
    scene_ref: str = ""
    split_tag: str = "train"

    def __post_init__(self):
        self.com = np.asarray(self.com, dtype=np.float64)
        T, K = self.com.shape[:2]
        if T < 2:
            raise ShapeError(f"a trajectory needs at least 2 frames, got {T}")
        for name in ("com_velocity", "orientation", "angular_velocity"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (T, K, 3):
                raise ShapeError(f"Trajectory.{name} has shape {arr.shape}, expected {(T, K, 3)}")
            setattr(self, name, arr)
        if len(self.keypoints) != K or len(self.keypoint_velocities) != K:
            raise ShapeError("keypoint lists must have one entry per object")
        for x, v in zip(self.keypoints, self.keypoint_velocities):
            if x.shape[0] != T or x.shape != v.shape or x.shape[-1] != 3:
                raise ShapeError("keypoint arrays must be (T, M_k, 3) and match their velocities")
        if self.split_tag not in SPLIT_TAGS:
            raise ConfigError(f"unknown split tag {self.split_tag!r}")

    @property
    def n_frames(self):
        return self.com.shape[0]

    @property
    def n_objects(self):
        return self.com.shape[1]

    @property
    def keypoint_counts(self):
        return [x.shape[1] for x in self.keypoints]

    @property
    def uniform_keypoints(self):
        return len(set(self.keypoint_counts)) <= 1

    def stacked_keypoints(self):
        """``(T, K, M, 3)`` positions and velocities; requires equal ``M_k``."""
        if not self.uniform_keypoints:
            raise ShapeError("objects carry different keypoint counts")
        if self.n_objects == 0:
            empty = np.zeros((self.n_frames, 0, 0, 3))
            return empty, empty.copy()
        return (np.stack(self.keypoints, axis=1).astype(np.float64),
                np.stack(self.keypoint_velocities, axis=1).astype(np.float64))

    def state(self, t, k):
        return ObjectState(
            keypoints=self.keypoints[k][t], keypoint_velocities=self.keypoint_velocities[k][t],
            com=self.com[t, k], com_velocity=self.com_velocity[t, k],
            orientation=self.orientation[t, k], angular_velocity=self.angular_velocity[t, k])

    def frame(self, t):
        return [self.state(t, k) for k in range(self.n_objects)]

    def slice(self, start, stop):
        s = slice(start, stop)
        return Trajectory(
            keypoints=[x[s] for x in self.keypoints],
            keypoint_velocities=[v[s] for v in self.keypoint_velocities],
            com=self.com[s], com_velocity=self.com_velocity[s],
            orientation=self.orientation[s], angular_velocity=self.angular_velocity[s],
            frame_dt=self.frame_dt, scene_ref=self.scene_ref, split_tag=self.split_tag)

    def with_tag(self, tag):
        out = self.slice(0, self.n_frames)
        out.split_tag = tag
        if tag not in SPLIT_TAGS:
            raise ConfigError(f"unknown split tag {tag!r}")
        return out
