"""Rollout of object states under a force field."""

from .solver import (ExternalForce, OdeConfig, apply_external_force, derivative, frames_to_trajectory,
                     initial_features, initial_states, rollout, rollout_states, step)

__all__ = [
    "ExternalForce", "OdeConfig", "apply_external_force", "derivative", "frames_to_trajectory",
    "initial_features", "initial_states", "rollout", "rollout_states", "step",
]
