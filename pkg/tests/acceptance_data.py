"""Cached datasets for the acceptance suite.

Generation is deterministic, so the cache only saves time. Delete the
directory (or point ``NFFSIM_ACCEPT_CACHE`` elsewhere) to rebuild.
"""

import os
import time
from pathlib import Path

from nffsim.core import SOFT_KINDS, builtin_assets, scene_pool
from nffsim.io import load_trajectory, save_trajectory
from nffsim.mpm import simulate
from nffsim.pipeline import Dataset, generate_dataset

CACHE = Path(os.environ.get("NFFSIM_ACCEPT_CACHE", Path(__file__).resolve().parent.parent / ".acceptance-cache"))
COUNTS = {"train": 64, "spatial": 16}
KEYPOINTS = 16
HORIZON = 80
N_SOFT = 8


def main_dataset():
    root = CACHE / "ds"
    if not (root / "manifest.json").exists():
        t = time.perf_counter()
        generate_dataset(builtin_assets(), root, COUNTS, seed=0, keypoints=KEYPOINTS, horizon=HORIZON)
        (CACHE / "ds.seconds").write_text(f"{time.perf_counter() - t:.1f}\n")
    return Dataset.open(root)


def soft_configs():
    return scene_pool(builtin_assets(), N_SOFT, n_groups=N_SOFT, seed=1, kinds=list(SOFT_KINDS), prefix="soft",
                      n_main_steps=HORIZON)


def soft_set():
    """Three-object scenes drawn only from deformable assets."""
    root = CACHE / "soft"
    root.mkdir(parents=True, exist_ok=True)
    store = builtin_assets()
    out = []
    for cfg in soft_configs():
        path = root / (cfg.scene_id.replace("/", "_") + ".gstrj")
        if not path.exists():
            save_trajectory(simulate(cfg, store, keypoints_per_object=KEYPOINTS, split_tag="spatial"), path)
        out.append(load_trajectory(path))
    return out


RESULTS = {}


def record(number, title, ok, detail):
    RESULTS[number] = (title, bool(ok), detail)
    return ok


if __name__ == "__main__":
    print(len(main_dataset().entries()), len(soft_set()))
