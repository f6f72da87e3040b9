"""Rollout evaluation of models and baselines over a split."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core.types import Trajectory
from ..errors import DomainError, ModelDivergenceError
from ..ode.solver import OdeConfig, initial_states, rollout
from .scores import scene_metrics

METRIC_KEYS = ("rmse", "fpe", "pce", "mse", "pearson_r")


@dataclass
class MetricsReport:
    name: str
    split: str
    n_scenes: int
    mse: float
    rmse: float  # sqrt of the scene-averaged MSE
    fpe: float
    pce: float
    pearson_r: float
    mean_time: float
    degenerate_r_count: int = 0
    diverged_count: int = 0
    scenes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _truncate(traj: Trajectory, n):
    return traj if traj.n_frames == n else traj.slice(0, n)


def evaluate(predictor, trajectories, name="model", split=None):
    """Score ``predictor(gt) -> Trajectory`` on each ground-truth trajectory.

    Each rollout starts from frame 0 and spans the ground-truth horizon.  Wall
    time covers only the predictor call.  A divergent rollout is scored on
    its truncated frames and flagged.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise DomainError("cannot evaluate an empty split")
    rows = []
    for gt in trajectories:
        t0 = time.perf_counter()
        diverged = False
        try:
            pred = predictor(gt)
        except ModelDivergenceError as exc:
            if exc.trajectory is None or exc.trajectory.n_frames < 2:
                raise
            pred = exc.trajectory
            diverged = True
        elapsed = time.perf_counter() - t0
        n = min(pred.n_frames, gt.n_frames)
        row = scene_metrics(_truncate(pred, n), _truncate(gt, n))
        row.update(scene=gt.scene_ref, frames=n, seconds=elapsed, diverged=diverged)
        rows.append(row)
    m = float(np.mean([r["mse"] for r in rows]))
    return MetricsReport(
        name=name,
        split=split or trajectories[0].split_tag,
        n_scenes=len(rows),
        mse=m,
        rmse=float(np.sqrt(m)),
        fpe=float(np.mean([r["fpe"] for r in rows])),
        pce=float(np.mean([r["pce"] for r in rows])),
        pearson_r=float(np.mean([r["pearson_r"] for r in rows])),
        mean_time=float(np.mean([r["seconds"] for r in rows])),
        degenerate_r_count=int(sum(r["degenerate_r"] for r in rows)),
        diverged_count=int(sum(r["diverged"] for r in rows)),
        scenes=rows,
    )


class ModelPredictor:
    """Roll the force field out from frame 0 over the ground-truth horizon."""

    def __init__(self, params, ode_cfg: OdeConfig | None = None):
        self.params = params
        self.ode_cfg = ode_cfg or OdeConfig()

    def __call__(self, gt: Trajectory):
        cfg = self.ode_cfg.with_(horizon=gt.n_frames - 1, step_size=gt.frame_dt)
        return rollout(initial_states(gt), self.params, cfg, scene_ref=gt.scene_ref, split_tag=gt.split_tag)
