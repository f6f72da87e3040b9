"""Metric reports as JSON, a fixed-width table and per-scene CSV."""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path

from .atomic import atomic_write_text
from .config import to_jsonable, write_json

TABLE_COLUMNS = (("RMSE", "rmse"), ("FPE", "fpe"), ("R", "pearson_r"), ("PCE", "pce"), ("MSE", "mse"),
                 ("Time (s)", "mean_time"))
SCENE_COLUMNS = ("scene", "frames", "rmse", "fpe", "pce", "mse", "pearson_r", "degenerate_r", "diverged", "seconds")


def format_table(reports):
    """Rows of method name and metrics, one per report."""
    reports = list(reports)
    name_w = max([len("Method")] + [len(r.name) for r in reports])
    head = f"{'Method':<{name_w}}  " + "  ".join(f"{c:>9}" for c, _ in TABLE_COLUMNS)
    lines = [head, "-" * len(head)]
    for r in reports:
        vals = "  ".join(f"{getattr(r, k):>9.4f}" for _, k in TABLE_COLUMNS)
        lines.append(f"{r.name:<{name_w}}  {vals}")
    if reports:
        lines.append("")
        lines.append(f"split: {reports[0].split}  scenes: {reports[0].n_scenes}")
    return "\n".join(lines) + "\n"


def _slug(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "report"


def scenes_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCENE_COLUMNS)
    for row in report.scenes:
        w.writerow([row.get(c) for c in SCENE_COLUMNS])
    return buf.getvalue()


def write_report(out, reports):
    """Write ``<out>.json``, ``<out>.txt`` and one ``<out>.<name>.csv`` per report."""
    out = Path(out)
    base = out.with_suffix("") if out.suffix == ".json" else out
    base.parent.mkdir(parents=True, exist_ok=True)
    write_json(base.with_suffix(".json"), to_jsonable({r.name: r.to_dict() for r in reports}))
    atomic_write_text(base.with_suffix(".txt"), format_table(reports))
    paths = [base.with_suffix(".json"), base.with_suffix(".txt")]
    for r in reports:
        p = base.parent / f"{base.name}.{_slug(r.name)}.csv"
        atomic_write_text(p, scenes_csv(r))
        paths.append(p)
    return paths


def loss_csv(history):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("epoch", "lr", "train_loss", "skip_count"))
    for h in history:
        w.writerow((h["epoch"], repr(h["lr"]), repr(h["train_loss"]), h["skip_count"]))
    return buf.getvalue()


def write_loss_csv(path, history):
    atomic_write_text(path, loss_csv(history))
