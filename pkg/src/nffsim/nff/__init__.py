"""Learned force field over object states."""

from .contact import (DEFAULT_THRESHOLD, ContactGraph, Geometry, contact_geometry, contact_graph,
                      detect_boundary, detect_collisions, face_distances)
from .field import (FieldEval, ForceOutput, ModelState, batch_states, encode_keypoints, encode_state,
                    euler_rotation, evaluate_field, force_field, interaction, interaction_forces, pair_terms,
                    stress, stress_forces, wrapped)
from .model import ForceFieldConfig, ForceFieldParams, subnet_of

__all__ = [
    "DEFAULT_THRESHOLD", "ContactGraph", "FieldEval", "ForceFieldConfig", "ForceFieldParams", "ForceOutput",
    "Geometry", "ModelState", "batch_states", "contact_geometry", "contact_graph", "detect_boundary",
    "detect_collisions", "encode_keypoints", "encode_state", "euler_rotation", "evaluate_field", "face_distances",
    "force_field", "interaction", "interaction_forces", "pair_terms", "stress", "stress_forces", "subnet_of",
    "wrapped",
]
