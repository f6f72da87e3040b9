"""Small differentiable-network toolkit: tape autodiff, MLPs, Adam."""

from . import ops
from .layers import Mlp, PointEncoder, mlp_forward, point_encode, point_features
from .optim import AdamState, adam_step, clip_by_global_norm, cosine_lr, global_norm
from .tape import Gradients, Tape, Var, backward

__all__ = [
    "AdamState", "Gradients", "Mlp", "PointEncoder", "Tape", "Var", "adam_step", "backward",
    "clip_by_global_norm", "cosine_lr", "global_norm", "mlp_forward", "ops", "point_encode",
    "point_features",
]
