"""Figures for reports: loss curves, metric comparisons and rollout traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight", metadata={"Software": None, "CreationDate": None})
    plt.close(fig)
    return path


def plot_loss(history, path):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ep = [h["epoch"] for h in history]
    ax.semilogy(ep, [h["train_loss"] for h in history], lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_metrics(reports, path, keys=("rmse", "fpe", "pce")):
    reports = list(reports)
    fig, axes = plt.subplots(1, len(keys), figsize=(3.2 * len(keys), 3))
    axes = np.atleast_1d(axes)
    names = [r.name for r in reports]
    for ax, key in zip(axes, keys):
        ax.bar(names, [getattr(r, key) for r in reports], color=plt.cm.tab10(np.arange(len(reports)) % 10))
        ax.set_title(key.upper())
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    return _save(fig, path)


def plot_rollout(gt, preds, path, axis=2):
    """Centre-of-mass coordinate ``axis`` over time: ground truth against predictions."""
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    t = np.arange(gt.n_frames) * gt.frame_dt
    for k in range(gt.n_objects):
        color = plt.cm.tab10(k % 10)
        ax.plot(t, gt.com[:, k, axis], color=color, lw=2, label=f"object {k}" if k < 6 else None)
        for j, (name, p) in enumerate(preds.items()):
            n = min(p.n_frames, gt.n_frames)
            ax.plot(t[:n], p.com[:n, k, axis], color=color, lw=1, ls=["--", ":", "-."][j % 3])
    styles = ", ".join(f"{n} {['dashed', 'dotted', 'dash-dot'][j % 3]}" for j, n in enumerate(preds))
    ax.set_title(f"{gt.scene_ref}  (solid: ground truth; {styles})", fontsize=8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("xyz"[axis] + " of centre of mass (m)")
    ax.legend(fontsize=7)
    return _save(fig, path)
