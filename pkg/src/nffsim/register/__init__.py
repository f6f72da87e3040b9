"""Similarity registration of a generated cloud onto an observation."""

from .align import ransac_kabsch, refine_sim3, register
from .chamfer import chamfer, mutual_nearest, nearest, nearest_brute
from .sim3 import Sim3, aabb_volume, kabsch, scale_init, umeyama

__all__ = [
    "Sim3", "aabb_volume", "chamfer", "kabsch", "mutual_nearest", "nearest", "nearest_brute", "ransac_kabsch",
    "refine_sim3", "register", "scale_init", "umeyama",
]
