"""Dataset generation and loading on top of the simulator."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core.sampling import scene_pool
from .core.types import SPLIT_TAGS
from .errors import ConfigError
from .io.config import MANIFEST_SCHEMA, read_json, scene_from_dict, scene_to_dict, write_json
from .io.trajectory import load_trajectory, save_trajectory
from .mpm.simulate import simulate
from .train.data import make_splits

log = logging.getLogger(__name__)

SPLIT_KEYS = ("train", "spatial", "temporal", "compositional", "compositional4", "compositional6")


def parse_splits(spec):
    """``"train:2,spatial:1,compositional4:1"`` -> dict of counts."""
    out = {}
    for part in filter(None, (p.strip() for p in spec.split(","))):
        m = re.fullmatch(r"([a-z0-9]+):(\d+)", part)
        if not m or m.group(1) not in SPLIT_KEYS:
            raise ConfigError(f"bad split entry {part!r}; expected name:count with name in {SPLIT_KEYS}")
        name = "compositional4" if m.group(1) == "compositional" else m.group(1)
        out[name] = out.get(name, 0) + int(m.group(2))
    return out


def plan_scenes(store, counts, seed=0, n_groups=10, horizon=80, temporal_steps=100):
    """Scene configs per split tag for the requested counts."""
    n_train, n_spatial = counts.get("train", 0), counts.get("spatial", 0)
    n_temporal = counts.get("temporal", 0)
    if n_temporal > n_train:
        raise ConfigError("temporal scenes extend training scenes, so there cannot be more of them")
    n_small = n_train + n_spatial
    pool = scene_pool(store, n_small, counts.get("compositional4", 0), counts.get("compositional6", 0),
                      n_groups=min(n_groups, max(n_small, 1)), seed=seed, n_main_steps=horizon)
    frac = n_spatial / n_small if n_small else 0.0
    return make_splits(pool, spatial_fraction=frac, temporal_count=n_temporal, temporal_steps=temporal_steps,
                       horizon=horizon, seed=seed)


def _file_name(scene_id):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", scene_id) + ".gstrj"


def _simulate_one(args):
    cfg, store, keypoints, tag, path = args
    traj = simulate(cfg, store, keypoints_per_object=keypoints, split_tag=tag)
    save_trajectory(traj, path)
    return cfg.scene_id


def generate_dataset(store, out, counts, seed=0, keypoints=16, jobs=1, horizon=80, temporal_steps=100):
    """Simulate every planned scene and write trajectories plus ``manifest.json``."""
    out = Path(out)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    splits = plan_scenes(store, counts, seed=seed, horizon=horizon, temporal_steps=temporal_steps)
    entries, work = [], []
    for tag in SPLIT_TAGS:
        for cfg in splits[tag]:
            rel = f"trajectories/{_file_name(cfg.scene_id)}"
            entries.append({"scene_id": cfg.scene_id, "split": tag, "file": rel, "config": scene_to_dict(cfg),
                            "n_objects": len(cfg.objects), "n_frames": cfg.n_main_steps})
            work.append((cfg, store, keypoints, tag, out / rel))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for sid in ex.map(_simulate_one, work):
                log.info("simulated %s", sid)
    else:
        for w in work:
            log.info("simulated %s", _simulate_one(w))
    manifest = {"version": 1, "seed": seed, "keypoints_per_object": keypoints, "scenes": entries}
    write_json(out / "manifest.json", manifest)
    return manifest


@dataclass
class Dataset:
    root: Path
    manifest: dict

    @classmethod
    def open(cls, root):
        root = Path(root)
        return cls(root, read_json(root / "manifest.json", MANIFEST_SCHEMA, "dataset manifest"))

    @property
    def splits(self):
        return sorted({e["split"] for e in self.manifest["scenes"]})

    def entries(self, split=None):
        if split is not None and split not in self.splits:
            raise ConfigError(f"unknown split {split!r}; available: {', '.join(self.splits) or 'none'}")
        return [e for e in self.manifest["scenes"] if split is None or e["split"] == split]

    def trajectories(self, split):
        return [load_trajectory(self.root / e["file"]) for e in self.entries(split)]

    def configs(self, split=None):
        return [scene_from_dict(e["config"]) for e in self.entries(split)]

    def scene(self, scene_id):
        for e in self.manifest["scenes"]:
            if e["scene_id"] == scene_id:
                return e
        raise ConfigError(f"unknown scene {scene_id!r}")
