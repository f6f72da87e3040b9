"""Chunked backpropagation-through-time training of the force field."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..core.kinematics import wrap_angle
from ..core.types import Trajectory
from ..errors import ConfigError, ModelDivergenceError, ShapeError, TrainingError
from ..nff.field import ModelState, encode_keypoints, wrapped
from ..nff.model import ForceFieldParams
from ..nn import AdamState, Tape, adam_step, clip_by_global_norm, cosine_lr, ops
from ..ode.solver import OdeConfig, rollout_states
from .data import collate, make_batches, make_samples

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 16
    chunk_length: int = 80
    lr_start: float = 1e-5
    lr_min: float = 1e-7
    seed: int = 0
    w_x: float = 1.0
    w_c: float = 1.0
    w_theta: float = 0.1
    clip_norm: float = 1.0
    deform_enabled: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.chunk_length < 2:
            raise ConfigError("chunk_length must be at least 2 frames")
        if not (self.lr_start >= self.lr_min > 0):
            raise ConfigError(f"need lr_start >= lr_min > 0, got {self.lr_start}, {self.lr_min}")
        if min(self.w_x, self.w_c, self.w_theta) < 0:
            raise ConfigError("loss weights must be non-negative")

    @property
    def weights(self):
        return (self.w_x, self.w_c, self.w_theta)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


def loss(pred: Trajectory, target: Trajectory, weights=(1.0, 1.0, 0.1)):
    """Weighted MSE of keypoints, centres of mass and wrapped orientation.

    Frame 0 is the shared initial state and is excluded; each term is a mean
    over the remaining frames, objects, points and components.
    """
    if pred.n_frames != target.n_frames or pred.n_objects != target.n_objects:
        raise ShapeError(f"trajectory shapes differ: {pred.n_frames}x{pred.n_objects} vs "
                         f"{target.n_frames}x{target.n_objects}")
    if pred.keypoint_counts != target.keypoint_counts:
        raise ShapeError("keypoint counts differ")
    if pred.n_frames < 2 or pred.n_objects == 0:
        return 0.0
    w_x, w_c, w_t = weights
    sq = sum(float(np.sum((np.asarray(p[1:], float) - np.asarray(t[1:], float)) ** 2))
             for p, t in zip(pred.keypoints, target.keypoints))
    n = sum(3 * (pred.n_frames - 1) * m for m in pred.keypoint_counts)
    lc = np.mean((pred.com[1:] - target.com[1:]) ** 2)
    lt = np.mean(wrap_angle(pred.orientation[1:] - target.orientation[1:]) ** 2)
    return w_x * sq / n + w_c * float(lc) + w_t * float(lt)


def rollout_loss(frames, target: ModelState, weights):
    """Differentiable counterpart of :func:`loss` for batched frames."""
    w_x, w_c, w_t = weights

    def mse(name, wrap=False):
        pred = ops.stack([getattr(f, name) for f in frames[1:]], axis=0)
        d = ops.sub(pred, getattr(target, name))
        if wrap:
            d = wrapped(d)
        return ops.mean(ops.mul(d, d))

    total = ops.mul(mse("x"), w_x)
    total = ops.add(total, ops.mul(mse("c"), w_c))
    return ops.add(total, ops.mul(mse("th", wrap=True), w_t))


def batch_gradients(params: ForceFieldParams, tree, samples, ode_cfg: OdeConfig, weights):
    """Loss and gradients for a batch, dropping samples whose rollout diverges."""
    samples = list(samples)
    skipped = 0
    while samples:
        batch = collate(samples)
        tape = Tape()
        leaves = tape.watch(tree)
        p = params.bind(leaves)
        h = encode_keypoints(p, batch.state.x)
        try:
            frames = rollout_states(batch.state, h, p, ode_cfg, horizon=samples[0].length - 1)
        except ModelDivergenceError as exc:
            bad = exc.scene if exc.scene is not None else 0
            log.warning("skipping diverged sample %s@%d (object %s, step %s)", samples[bad].scene_ref,
                        samples[bad].start, exc.object_index, exc.step)
            samples.pop(bad)
            skipped += 1
            continue
        L = rollout_loss(frames, batch.target, weights)
        value = float(ops.value(L))
        grads = tape.backward(L).tree(leaves)
        if not math.isfinite(value):
            raise TrainingError(f"non-finite loss on batch starting with {samples[0].scene_ref}")
        return value, grads, len(samples), skipped
    return None, None, 0, skipped


def train(dataset, params: ForceFieldParams, cfg: TrainConfig = TrainConfig(), ode_cfg: OdeConfig | None = None,
          on_epoch=None):
    """Fit ``params`` to trajectories; returns ``(params, history)``.

    ``history`` has one dict per epoch with ``epoch``, ``lr``, ``train_loss``,
    ``skip_count`` and ``seconds``.  ``on_epoch(record, params)`` is called
    after each epoch (used for checkpoints and logging).
    """
    samples = [s for traj in dataset for s in make_samples(traj, cfg.chunk_length)]
    if not samples:
        raise ConfigError("training dataset is empty")
    ode_cfg = (ode_cfg or OdeConfig()).with_(deform_enabled=cfg.deform_enabled)
    rng = np.random.default_rng(cfg.seed)
    tree = {k: np.array(v, dtype=np.float64) for k, v in params.tree().items()}
    opt = AdamState()
    history = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr_start, cfg.lr_min)
        total, count, skips = 0.0, 0, 0
        for chunk in make_batches(samples, cfg.batch_size, rng):
            value, grads, used, skipped = batch_gradients(params, tree, chunk, ode_cfg, cfg.weights)
            skips += skipped
            if used == 0:
                continue
            grads, _ = clip_by_global_norm(grads, cfg.clip_norm)
            tree, opt = adam_step(tree, grads, opt, lr)
            total += value * used
            count += used
        if skips > 0.5 * len(samples):
            raise TrainingError(f"epoch {epoch}: {skips} of {len(samples)} samples diverged; aborting")
        record = {"epoch": epoch, "lr": lr, "train_loss": total / count if count else float("nan"),
                  "skip_count": skips, "seconds": time.perf_counter() - t0}
        history.append(record)
        log.info("epoch %d lr %.3g loss %.6g skips %d (%.1fs)", epoch, lr, record["train_loss"], skips,
                 record["seconds"])
        if on_epoch is not None:
            on_epoch(record, params.with_tree(tree))
    return params.with_tree(tree), history


def evaluate_loss(dataset, params: ForceFieldParams, cfg: TrainConfig, ode_cfg: OdeConfig | None = None):
    """Mean chunk loss without updating parameters."""
    samples = [s for traj in dataset for s in make_samples(traj, cfg.chunk_length)]
    ode_cfg = (ode_cfg or OdeConfig()).with_(deform_enabled=cfg.deform_enabled)
    total = 0.0
    for chunk in make_batches(samples, cfg.batch_size):
        batch = collate(chunk)
        h = encode_keypoints(params, batch.state.x)
        frames = rollout_states(batch.state, h, params, ode_cfg, horizon=chunk[0].length - 1)
        total += float(rollout_loss(frames, batch.target, cfg.weights)) * len(chunk)
    return total / len(samples)
