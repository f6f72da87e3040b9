"""Training samples and dataset splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import SceneConfig, Trajectory
from ..errors import ShapeError, SplitError
from ..nff.field import ModelState


@dataclass
class Sample:
    """A chunk of one trajectory: initial state plus the frames that follow."""

    scene_ref: str
    start: int
    x: np.ndarray  # (L, K, M, 3) including the initial frame
    xd: np.ndarray
    c: np.ndarray  # (L, K, 3)
    cd: np.ndarray
    th: np.ndarray
    thd: np.ndarray

    @property
    def length(self):
        return self.c.shape[0]

    @property
    def key(self):
        return self.x.shape[1:3]

    def initial(self):
        return ModelState(self.x[0], self.xd[0], self.c[0], self.cd[0], self.th[0], self.thd[0])


def make_samples(traj: Trajectory, chunk_length):
    """Non-overlapping chunks of ``chunk_length`` frames; consecutive chunks share one frame."""
    if chunk_length < 2:
        raise ShapeError("chunk length must cover at least two frames")
    if chunk_length > traj.n_frames:
        raise ShapeError(f"chunk length {chunk_length} exceeds trajectory length {traj.n_frames}")
    x, xd = traj.stacked_keypoints()
    out = []
    for s in range(0, traj.n_frames - chunk_length + 1, chunk_length - 1):
        e = s + chunk_length
        out.append(Sample(traj.scene_ref, s, x[s:e], xd[s:e], traj.com[s:e], traj.com_velocity[s:e],
                          traj.orientation[s:e], traj.angular_velocity[s:e]))
    return out


@dataclass
class Batch:
    samples: list
    state: ModelState  # (B, K, M, 3) initial state
    target: ModelState  # fields stacked over frames: (L-1, B, K, ...)

    @property
    def size(self):
        return len(self.samples)


def collate(samples):
    keys = {s.key for s in samples}
    lengths = {s.length for s in samples}
    if len(keys) != 1 or len(lengths) != 1:
        raise ShapeError("a batch needs samples of equal object count, keypoint count and length")

    def stack(name, first):
        arr = np.stack([getattr(s, name) for s in samples], axis=1)  # (L, B, ...)
        return arr[0] if first else arr[1:]

    init = ModelState(*(stack(f, True) for f in ModelState.FIELDS))
    target = ModelState(*(stack(f, False) for f in ModelState.FIELDS))
    return Batch(list(samples), init, target)


def make_batches(samples, batch_size, rng=None):
    """Group samples by shape, shuffle within groups, and cut into batches."""
    groups = {}
    for i, s in enumerate(samples):
        groups.setdefault((s.key, s.length), []).append(i)
    batches = []
    for key in sorted(groups):
        idx = np.asarray(groups[key])
        if rng is not None:
            idx = idx[rng.permutation(len(idx))]
        for a in range(0, len(idx), batch_size):
            batches.append([samples[i] for i in idx[a:a + batch_size]])
    if rng is not None and batches:
        batches = [batches[i] for i in rng.permutation(len(batches))]
    return batches


def make_splits(pool, spatial_fraction=0.2, temporal_count=None, temporal_steps=100, horizon=80, seed=0):
    """Assign scene configs to the train/spatial/temporal/compositional splits.

    Three-object scenes are divided per group into training and held-out
    placements; scenes with more objects form the compositional split.
    Temporal scenes reuse training configurations run for ``temporal_steps``
    and get their own ids (suffix ``/long``).
    """
    pool = list(pool)
    ids = [c.scene_id for c in pool]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise SplitError(f"duplicate scene ids in pool: {dup[:5]}")
    rng = np.random.default_rng(seed)
    splits = {"train": [], "spatial": [], "temporal": [], "compositional": []}
    small = {}
    for cfg in pool:
        if len(cfg.objects) <= 3:
            small.setdefault(cfg.group, []).append(cfg)
        else:
            splits["compositional"].append(cfg.with_(n_main_steps=horizon))
    # hold out round(f * N) placements in total, dealt round-robin over groups
    order = {}
    for g in sorted(small):
        members = sorted(small[g], key=lambda c: c.scene_id)
        order[g] = [members[i] for i in rng.permutation(len(members))]
    n_hold = int(round(spatial_fraction * sum(len(v) for v in order.values())))
    held = set()
    depth = 0
    while len(held) < n_hold:
        for g in sorted(order):
            if depth < len(order[g]) and len(held) < n_hold:
                held.add(order[g][depth].scene_id)
        depth += 1
    for g in sorted(small):
        for cfg in sorted(small[g], key=lambda c: c.scene_id):
            splits["spatial" if cfg.scene_id in held else "train"].append(cfg.with_(n_main_steps=horizon))
    n_temp = len(splits["train"]) if temporal_count is None else min(temporal_count, len(splits["train"]))
    for cfg in splits["train"][:n_temp]:
        splits["temporal"].append(cfg.with_(scene_id=cfg.scene_id + "/long", n_main_steps=temporal_steps))
    check_disjoint(splits)
    return splits


def check_disjoint(splits):
    train_ids = {getattr(c, "scene_id", getattr(c, "scene_ref", None)) for c in splits.get("train", [])}
    for name, items in splits.items():
        if name == "train":
            continue
        ids = {getattr(c, "scene_id", getattr(c, "scene_ref", None)) for c in items}
        both = train_ids & ids
        if both:
            raise SplitError(f"scene ids shared between train and {name}: {sorted(both)[:5]}")
