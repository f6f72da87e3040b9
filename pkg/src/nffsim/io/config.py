"""Schema-checked JSON documents: scenes, materials, training and rollout settings."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from ..core.assets import DEFAULT_SIZES, Asset, AssetStore, builtin_assets, normalize_points
from ..core.types import Domain, MaterialParams, ObjectSpec, SceneConfig
from ..errors import ConfigError, FormatError
from .atomic import atomic_write_text

VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
VEC6 = {"type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6}

OBJECT_SCHEMA = {
    "type": "object",
    "required": ["asset"],
    "additionalProperties": False,
    "properties": {
        "asset": {"type": "string"},
        "material": {"type": "string"},
        "translation": VEC3,
        "rotation": VEC3,
        "velocity": VEC3,
    },
}

SCENE_SCHEMA = {
    "type": "object",
    "required": ["objects"],
    "additionalProperties": False,
    "properties": {
        "scene_id": {"type": "string"},
        "group": {"type": "string"},
        "objects": {"type": "array", "items": OBJECT_SCHEMA},
        "domain": {"type": "object", "additionalProperties": False,
                   "properties": {"origin": VEC3, "edge": {"type": "number", "exclusiveMinimum": 0}}},
        "gravity": VEC3,
        "main_dt": {"type": "number", "exclusiveMinimum": 0},
        "substeps_per_main": {"type": "integer", "minimum": 1},
        "n_main_steps": {"type": "integer", "minimum": 1},
        "grid_resolution": {"type": "integer", "minimum": 8},
        "floor_model": {"enum": ["sticky", "slip", "separate"]},
        "wall_model": {"enum": ["sticky", "slip", "separate"]},
        "friction": {"type": "number", "minimum": 0},
    },
}

MATERIALS_SCHEMA = {
    "type": "object",
    "required": ["materials"],
    "additionalProperties": False,
    "properties": {
        "materials": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["youngs_modulus", "poisson_ratio", "density"],
                "additionalProperties": False,
                "properties": {"youngs_modulus": {"type": "number"}, "poisson_ratio": {"type": "number"},
                               "density": {"type": "number"}},
            },
        },
        "assets": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["size"],
                "additionalProperties": False,
                "properties": {"size": {"type": "number", "exclusiveMinimum": 0}, "material": {"type": "string"},
                               "ply": {"type": "string"}},
            },
        },
        "particle_spacing": {"type": "number", "exclusiveMinimum": 0},
    },
}

TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "chunk_length": {"type": "integer", "minimum": 2},
        "lr_start": {"type": "number", "exclusiveMinimum": 0},
        "lr_min": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "w_x": {"type": "number", "minimum": 0},
        "w_c": {"type": "number", "minimum": 0},
        "w_theta": {"type": "number", "minimum": 0},
        "clip_norm": {"type": "number", "exclusiveMinimum": 0},
        "deform_enabled": {"type": "boolean"},
        "checkpoint_every": {"type": "integer", "minimum": 0},
        "model": {"type": "object"},
    },
}

SCHEDULE_SCHEMA = {
    "type": "array",
    "items": {
        "oneOf": [
            {"type": "array", "prefixItems": [{"type": "integer", "minimum": 0},
                                              {"type": "array", "items": {"type": "number"}, "minItems": 2,
                                               "maxItems": 2},
                                              VEC6], "minItems": 3, "maxItems": 3},
            {"type": "object", "required": ["object", "window", "force"], "additionalProperties": False,
             "properties": {"object": {"type": "integer", "minimum": 0},
                            "window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                            "force": VEC6}},
        ]
    },
}

SIM3_SCHEMA = {
    "type": "object",
    "required": ["R", "t", "s"],
    "properties": {
        "R": {"type": "array", "items": {"type": "number"}, "minItems": 9, "maxItems": 9},
        "t": VEC3,
        "s": {"type": "number", "exclusiveMinimum": 0},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["version", "scenes"],
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer"},
        "keypoints_per_object": {"type": "integer", "minimum": 1},
        "scenes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["scene_id", "split", "file", "config"],
                "properties": {"scene_id": {"type": "string"}, "split": {"type": "string"},
                               "file": {"type": "string"}, "config": SCENE_SCHEMA},
            },
        },
    },
}


def validate(doc, schema, what="document"):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {exc.message}") from None
    return doc


def read_json(path, schema=None, what="document"):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc.msg} (line {exc.lineno})") from None
    return validate(doc, schema, what) if schema is not None else doc


def write_json(path, doc):
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _floats(v):
    return [float(a) for a in v]


def scene_to_dict(cfg: SceneConfig):
    return {
        "scene_id": cfg.scene_id,
        "group": cfg.group,
        "objects": [{"asset": o.asset, "material": o.material, "translation": _floats(o.translation),
                     "rotation": _floats(o.rotation), "velocity": _floats(o.velocity)} for o in cfg.objects],
        "domain": {"origin": _floats(cfg.domain.origin), "edge": float(cfg.domain.edge)},
        "gravity": _floats(cfg.gravity),
        "main_dt": cfg.main_dt,
        "substeps_per_main": cfg.substeps_per_main,
        "n_main_steps": cfg.n_main_steps,
        "grid_resolution": cfg.grid_resolution,
        "floor_model": cfg.floor_model,
        "wall_model": cfg.wall_model,
        "friction": cfg.friction,
    }


def scene_from_dict(doc):
    validate(doc, SCENE_SCHEMA, "scene config")
    d = dict(doc)
    objects = [ObjectSpec(o["asset"], o.get("material", o["asset"]), tuple(o.get("translation", (0, 0, 0))),
                          tuple(o.get("rotation", (0, 0, 0))), tuple(o.get("velocity", (0, 0, 0))))
               for o in d.pop("objects")]
    if "domain" in d:
        dom = d.pop("domain")
        d["domain"] = Domain(tuple(dom.get("origin", (0, 0, 0))), dom.get("edge", 2.0))
    if "gravity" in d:
        d["gravity"] = tuple(d["gravity"])
    return SceneConfig(objects=objects, **d)


def load_scene(path):
    return scene_from_dict(read_json(path, SCENE_SCHEMA, "scene config"))


def save_scene(path, cfg):
    write_json(path, scene_to_dict(cfg))


def default_config_doc(spacing=0.75 / 32):
    store = builtin_assets(spacing=spacing)
    return {
        "materials": {m.name: {"youngs_modulus": m.youngs_modulus, "poisson_ratio": m.poisson_ratio,
                               "density": m.density} for m in store.materials.values()},
        "assets": {name: {"size": DEFAULT_SIZES[name], "material": name} for name in store.names},
        "particle_spacing": spacing,
    }


def load_store(config_dir):
    """Asset store from ``config_dir/materials.json``.

    Assets with a ``ply`` entry are loaded from that file (relative to the
    directory); the others use the built-in procedural shape of that name.
    """
    from .ply import load_ply_points

    root = Path(config_dir)
    doc = read_json(root / "materials.json", MATERIALS_SCHEMA, "material table")
    materials = {name: MaterialParams(name, m["youngs_modulus"], m["poisson_ratio"], m["density"])
                 for name, m in doc["materials"].items()}
    spacing = doc.get("particle_spacing", 0.75 / 32)
    entries = doc.get("assets", {name: {"size": DEFAULT_SIZES[name]} for name in DEFAULT_SIZES})
    builtin = [n for n, e in entries.items() if "ply" not in e]
    unknown = [n for n in builtin if n not in DEFAULT_SIZES]
    if unknown:
        raise ConfigError(f"assets {unknown} have no 'ply' file and no built-in shape")
    store = AssetStore(materials=materials)
    if builtin:
        for a in builtin_assets(spacing=spacing, kinds=builtin).assets.values():
            e = entries[a.name]
            store.add(Asset(a.name, a.points, float(e["size"]), e.get("material", a.name)))
    for name, e in entries.items():
        if "ply" in e:
            pts, _ = load_ply_points(root / e["ply"])
            store.add(Asset(name, normalize_points(pts), float(e["size"]), e.get("material", name)))
    for name, e in entries.items():
        store.material(e.get("material", name))
    return store


def load_schedule(path):
    doc = read_json(path, SCHEDULE_SCHEMA, "force schedule")
    out = []
    for item in doc:
        if isinstance(item, dict):
            out.append((item["object"], tuple(item["window"]), tuple(item["force"])))
        else:
            out.append((item[0], tuple(item[1]), tuple(item[2])))
    return out


def sim3_to_dict(sim):
    return sim.to_dict()


def load_sim3(path):
    from ..register.sim3 import Sim3

    doc = read_json(path, SIM3_SCHEMA, "Sim(3) transform")
    return Sim3.from_dict(doc)


def save_sim3(path, sim):
    write_json(path, sim.to_dict())


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
