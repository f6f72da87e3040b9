"""Persistence: trajectories, point clouds, checkpoints, configs and reports."""

from .atomic import atomic_write, atomic_write_text
from .checkpoint import decode_tensors, encode_tensors, load_params, load_tensors, save_params, save_tensors
from .config import (default_config_doc, load_scene, load_schedule, load_sim3, load_store, read_json, save_scene,
                     save_sim3, scene_from_dict, scene_to_dict, validate, write_json)
from .ply import PALETTE, encode_ply, export_frames_ply, load_ply_points, parse_ply, write_ply
from .report import format_table, loss_csv, scenes_csv, write_loss_csv, write_report
from .trajectory import decode_trajectory, encode_trajectory, frame_size, load_trajectory, save_trajectory

__all__ = [
    "PALETTE", "atomic_write", "atomic_write_text", "decode_tensors", "decode_trajectory", "default_config_doc",
    "encode_ply", "encode_tensors", "encode_trajectory", "export_frames_ply", "format_table", "frame_size",
    "load_params", "load_ply_points", "load_scene", "load_schedule", "load_sim3", "load_store", "load_tensors",
    "load_trajectory", "loss_csv", "parse_ply", "read_json", "save_params", "save_scene", "save_sim3",
    "save_tensors", "save_trajectory", "scene_from_dict", "scene_to_dict", "scenes_csv", "validate",
    "write_json", "write_loss_csv", "write_ply", "write_report",
]
