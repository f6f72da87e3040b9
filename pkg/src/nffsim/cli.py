"""Command-line entry point: ``nffsim <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, NffError

DATA_ENV = "NFFSIM_DATA"
log = logging.getLogger("nffsim")


class JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps({"level": record.levelname, "logger": record.name, "message": record.getMessage(),
                           "time": round(record.created, 3)})


def _setup_logging(args):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter() if args.log_json else logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if args.verbose else logging.INFO)


def _data_dir(args):
    path = args.data or os.environ.get(DATA_ENV)
    if not path:
        raise ConfigError(f"no dataset given; pass --data or set {DATA_ENV}")
    return Path(path)


def _store(args):
    from .core.assets import builtin_assets
    from .io.config import load_store

    return load_store(args.config) if getattr(args, "config", None) else builtin_assets()


def _ode_cfg(args, deform=True):
    from .ode import OdeConfig

    return OdeConfig(method=getattr(args, "method", "euler"), deform_enabled=deform)


# ---------------------------------------------------------------------------


def cmd_init_config(args):
    from .io.config import default_config_doc, write_json

    write_json(Path(args.out) / "materials.json", default_config_doc())
    print(Path(args.out) / "materials.json")


def cmd_gen_data(args):
    from .pipeline import generate_dataset, parse_splits

    counts = parse_splits(args.splits)
    if sum(counts.values()) != args.scenes:
        raise ConfigError(f"--splits requests {sum(counts.values())} scenes but --scenes is {args.scenes}")
    jobs = 1 if args.deterministic else args.jobs
    manifest = generate_dataset(_store(args), args.out, counts, seed=args.seed, keypoints=args.keypoints,
                                jobs=jobs, horizon=args.horizon, temporal_steps=args.temporal_steps)
    print(f"{len(manifest['scenes'])} scenes written to {args.out}")


def cmd_simulate(args):
    from .io import export_frames_ply, load_scene, save_trajectory
    from .mpm import simulate

    cfg = load_scene(args.scene)
    if args.steps:
        cfg = cfg.with_(n_main_steps=args.steps)
    t0 = time.perf_counter()
    traj = simulate(cfg, _store(args), keypoints_per_object=args.keypoints, seed=args.seed)
    log.info("simulated %d frames in %.2fs", traj.n_frames, time.perf_counter() - t0)
    save_trajectory(traj, args.out)
    if args.frames_dir:
        export_frames_ply(traj, args.frames_dir)
    print(args.out)


def cmd_train(args):
    from .io import load_params, read_json, save_params, write_loss_csv
    from .io.config import TRAIN_SCHEMA
    from .nff import ForceFieldConfig, ForceFieldParams
    from .pipeline import Dataset
    from .plotting import plot_loss
    from .train import TrainConfig, train

    doc = read_json(args.train_config, TRAIN_SCHEMA, "training config") if args.train_config else {}
    model_doc = doc.pop("model", {})
    overrides = {k: v for k, v in {"epochs": args.epochs, "batch_size": args.batch_size, "lr_start": args.lr,
                                   "lr_min": args.lr_min, "chunk_length": args.chunk}.items() if v is not None}
    doc.update(overrides)
    doc["seed"] = args.seed
    if args.no_deform:
        doc["deform_enabled"] = False
    cfg = TrainConfig.from_dict(doc)
    data = Dataset.open(_data_dir(args)).trajectories("train")
    params = load_params(args.init) if args.init else \
        ForceFieldParams.create(ForceFieldConfig.from_dict(model_doc), seed=args.seed)
    out = Path(args.out)

    def on_epoch(rec, p):
        if cfg.checkpoint_every and (rec["epoch"] + 1) % cfg.checkpoint_every == 0:
            save_params(out.with_name(f"{out.stem}.epoch{rec['epoch'] + 1:04d}{out.suffix}"), p)

    params, history = train(data, params, cfg, on_epoch=on_epoch)
    save_params(out, params)
    write_loss_csv(out.with_suffix(".loss.csv"), history)
    plot_loss(history, out.with_suffix(".loss.png"))
    print(f"final train loss {history[-1]['train_loss']:.6g}; checkpoint {out}")


def cmd_rollout(args):
    from .io import load_params, load_schedule, load_trajectory, save_trajectory
    from .ode import apply_external_force, initial_states, rollout
    from .pipeline import Dataset

    if args.init:
        gt = load_trajectory(args.init)
    else:
        ds = Dataset.open(_data_dir(args))
        gt = load_trajectory(ds.root / ds.scene(args.scene)["file"])
    params = load_params(args.model)
    horizon = args.horizon or gt.n_frames - 1
    cfg = _ode_cfg(args, deform=args.deform == "on").with_(horizon=horizon, step_size=gt.frame_dt)
    if args.force:
        cfg = apply_external_force(cfg, load_schedule(args.force), n_objects=gt.n_objects)
    t0 = time.perf_counter()
    traj = rollout(initial_states(gt), params, cfg, scene_ref=gt.scene_ref, split_tag=gt.split_tag)
    log.info("rolled out %d steps in %.3fs", horizon, time.perf_counter() - t0)
    save_trajectory(traj, args.out)
    print(args.out)


def _render(out, reports, gt, preds):
    from .plotting import plot_metrics, plot_rollout

    base = Path(out)
    base = base.with_suffix("") if base.suffix == ".json" else base
    paths = [plot_metrics(reports, base.parent / f"{base.name}.metrics.png")]
    if gt is not None:
        paths.append(plot_rollout(gt, preds, base.parent / f"{base.name}.rollout.png"))
    return paths


def _predictor(args, ds, split, deform=True, model=None):
    from .io import load_params
    from .metrics import ModelPredictor, make_baseline

    if model or args.model:
        return ModelPredictor(load_params(model or args.model), _ode_cfg(args, deform))
    return make_baseline(args.baseline, configs=ds.configs(split), store=_store(args))


def cmd_eval(args):
    from .io import write_report
    from .metrics import evaluate
    from .pipeline import Dataset

    ds = Dataset.open(_data_dir(args))
    trajs = ds.trajectories(args.split)
    pred = _predictor(args, ds, args.split)
    name = args.name or (Path(args.model).stem if args.model else args.baseline)
    report = evaluate(pred, trajs, name=name, split=args.split)
    write_report(args.out, [report])
    _render(args.out, [report], trajs[0], {name: pred(trajs[0])})
    print(f"{name} on {args.split}: rmse {report.rmse:.4f} fpe {report.fpe:.4f} R {report.pearson_r:.3f}")


def cmd_ablate(args):
    from .io import write_report
    from .metrics import evaluate
    from .pipeline import Dataset

    ds = Dataset.open(_data_dir(args))
    trajs = ds.trajectories(args.split)
    full = _predictor(args, ds, args.split, deform=True)
    rigid = _predictor(args, ds, args.split, deform=False, model=args.rigid_model)
    reports = [evaluate(full, trajs, name="full", split=args.split),
               evaluate(rigid, trajs, name="w/o deform", split=args.split)]
    write_report(args.out, reports)
    _render(args.out, reports, trajs[0], {"full": full(trajs[0]), "w/o deform": rigid(trajs[0])})
    print("".join(f"{r.name}: rmse {r.rmse:.4f}\n" for r in reports), end="")


def cmd_register(args):
    from .io import load_ply_points, save_sim3
    from .register import register

    gen, _ = load_ply_points(args.gen)
    obs, _ = load_ply_points(args.obs)
    pairs = None
    if args.pairs:
        try:
            pairs = np.loadtxt(args.pairs, delimiter=",", dtype=np.int64, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read correspondences from {args.pairs}: {exc}") from None
        if pairs.shape[1] != 2 or pairs.min() < 0 or pairs[:, 0].max() >= len(gen) or pairs[:, 1].max() >= len(obs):
            raise ConfigError("correspondence file must hold valid 'gen_index,obs_index' rows")
    sim, info = register(gen, obs, pairs=pairs, iterations=args.iterations, inlier_threshold=args.threshold,
                         seed=args.seed)
    save_sim3(args.out, sim)
    print(f"scale {sim.s:.6f}; inliers {info['n_inliers']}/{info['n_pairs']}; chamfer {info['objective'][-1]:.3e}")


def cmd_export(args):
    from .io import export_frames_ply, load_trajectory

    paths = export_frames_ply(load_trajectory(args.traj), args.out)
    print(f"{len(paths)} frames written to {args.out}")


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--deterministic", action="store_true", help="single worker, fixed reduction order")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for scene fan-out")
    common.add_argument("--log-json", action="store_true", help="machine-readable JSON log lines")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nffsim", description="Simulate, learn and evaluate object force fields.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init-config", parents=[common], help="write a default material/asset table")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_init_config)

    s = sub.add_parser("gen-data", parents=[common], help="sample, simulate and split scenes")
    s.add_argument("--config", help="directory with materials.json (default: built-in assets)")
    s.add_argument("--out", required=True)
    s.add_argument("--scenes", type=int, required=True)
    s.add_argument("--splits", required=True, help='e.g. "train:64,spatial:16"')
    s.add_argument("--keypoints", type=int, default=16)
    s.add_argument("--horizon", type=int, default=80)
    s.add_argument("--temporal-steps", type=int, default=100)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("simulate", parents=[common], help="run the simulator on one scene file")
    s.add_argument("--scene", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int)
    s.add_argument("--keypoints", type=int, default=16)
    s.add_argument("--frames-dir")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("train", parents=[common], help="fit a force field to the train split")
    s.add_argument("--data")
    s.add_argument("--out", required=True)
    s.add_argument("--train-config")
    s.add_argument("--init", help="checkpoint to start from")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--lr-min", type=float)
    s.add_argument("--chunk", type=int)
    s.add_argument("--no-deform", action="store_true", help="train without the local stress network")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("rollout", parents=[common], help="integrate a trained model from a scene's first frame")
    s.add_argument("--model", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--init", help="trajectory file providing the initial state")
    g.add_argument("--scene", help="scene id inside --data")
    s.add_argument("--data")
    s.add_argument("--out", required=True)
    s.add_argument("--horizon", type=int)
    s.add_argument("--method", choices=("euler", "rk4"), default="euler")
    s.add_argument("--force", help="JSON force schedule")
    s.add_argument("--deform", choices=("on", "off"), default="on")
    s.set_defaults(func=cmd_rollout)

    s = sub.add_parser("eval", parents=[common], help="score a model or baseline on a split")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--model")
    g.add_argument("--baseline", choices=("ballistic", "constant-velocity", "mpm"))
    s.add_argument("--data")
    s.add_argument("--config")
    s.add_argument("--split", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--name")
    s.add_argument("--method", choices=("euler", "rk4"), default="euler")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("ablate", parents=[common], help="paired evaluation with deformation on and off")
    s.add_argument("--model", required=True)
    s.add_argument("--rigid-model", help="separately trained model for the 'off' arm")
    s.add_argument("--data")
    s.add_argument("--split", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--method", choices=("euler", "rk4"), default="euler")
    s.set_defaults(func=cmd_ablate, baseline=None)

    s = sub.add_parser("register", parents=[common], help="similarity-align a generated cloud to an observation")
    s.add_argument("--gen", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--pairs", help="CSV of gen_index,obs_index correspondences")
    s.add_argument("--out", required=True)
    s.add_argument("--iterations", type=int, default=500)
    s.add_argument("--threshold", type=float)
    s.set_defaults(func=cmd_register)

    s = sub.add_parser("export", parents=[common], help="write one PLY per trajectory frame")
    s.add_argument("--traj", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    np.random.seed(args.seed)
    try:
        args.func(args)
    except NffError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
