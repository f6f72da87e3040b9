"""Dataset assembly and force-field training."""

from .data import Batch, Sample, check_disjoint, collate, make_batches, make_samples, make_splits
from .loop import TrainConfig, batch_gradients, evaluate_loss, loss, rollout_loss, train

__all__ = [
    "Batch", "Sample", "TrainConfig", "batch_gradients", "check_disjoint", "collate", "evaluate_loss", "loss",
    "make_batches", "make_samples", "make_splits", "rollout_loss", "train",
]
