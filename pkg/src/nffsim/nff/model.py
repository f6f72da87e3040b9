"""Force-field configuration and parameter containers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..errors import ConfigError, ShapeError
from ..nn import Mlp, PointEncoder
from .contact import DEFAULT_THRESHOLD

N_GLOBAL = 6
N_STATE = 15  # c, c_dot, sin(theta), cos(theta), theta_dot
N_REL = 13  # dc, dc_dot, dtheta, dtheta_dot, min distance
N_POINT = 7  # local x, local x_dot, CAM bit


@dataclass(frozen=True)
class ForceFieldConfig:
    d_feature: int = 200
    d_latent: int = 64
    hidden: int = 200
    n_layers: int = 4
    boundary_layers: int = 2
    stress_hidden: int = 64
    stress_context: int = 64
    encoder_widths: tuple = (3, 64, 128)
    force_scale: float = 10.0
    torque_scale: float = 10.0
    stress_scale: float = 10.0
    length_scale: float = 0.25
    velocity_scale: float = 0.2
    spin_scale: float = 0.1
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        for f in ("d_feature", "d_latent", "hidden", "n_layers", "boundary_layers", "stress_hidden", "stress_context"):
            if int(getattr(self, f)) < 1:
                raise ConfigError(f"force field {f} must be >= 1")
        if not self.threshold > 0:
            raise ConfigError("collision threshold must be positive")
        object.__setattr__(self, "encoder_widths", tuple(int(w) for w in self.encoder_widths))

    @property
    def d_force(self):
        return N_GLOBAL + self.d_latent

    def to_dict(self):
        d = asdict(self)
        d["encoder_widths"] = list(self.encoder_widths)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown force field config keys: {sorted(unknown)}")
        d = dict(d)
        if "encoder_widths" in d:
            d["encoder_widths"] = tuple(d["encoder_widths"])
        return cls(**d)


@dataclass
class ForceFieldParams:
    config: ForceFieldConfig
    encoder: PointEncoder
    branch: Mlp
    trunk: Mlp
    W: object
    b: object
    boundary: Mlp
    stress_local: Mlp
    stress_head: Mlp

    SUBNETS = ("encoder", "branch", "trunk", "W", "b", "boundary", "stress_local", "stress_head")

    @classmethod
    def create(cls, config=None, seed=0, init="normal"):
        """Fresh parameters.  Output layers start small so early rollouts are near ballistic."""
        cfg = config or ForceFieldConfig()
        rng = np.random.default_rng(seed)
        hid = [cfg.hidden] * cfg.n_layers
        enc = PointEncoder.create(cfg.d_feature, rng, widths=cfg.encoder_widths, init=init)
        branch = Mlp.create([N_REL + cfg.d_feature, *hid, cfg.hidden], rng, last_scale=0.1, init=init)
        trunk = Mlp.create([N_STATE + cfg.d_feature, *hid, cfg.hidden], rng, last_scale=0.1, init=init)
        boundary = Mlp.create([N_STATE + cfg.d_feature + 6, *[cfg.hidden] * cfg.boundary_layers, N_GLOBAL], rng,
                              last_scale=0.1, init=init)
        local = Mlp.create([N_POINT, cfg.stress_hidden, cfg.stress_context], rng, out_activation="tanh", init=init)
        head = Mlp.create([N_POINT + cfg.d_latent + cfg.stress_context, cfg.stress_hidden, cfg.stress_hidden, 3], rng,
                          last_scale=0.1, init=init)
        if init == "zeros":
            W = np.zeros((cfg.hidden, cfg.d_force))
        else:
            W = rng.normal(0.0, 0.1 / np.sqrt(cfg.hidden), size=(cfg.hidden, cfg.d_force))
        return cls(cfg, enc, branch, trunk, W, np.zeros(cfg.d_force), boundary, local, head)

    def tree(self):
        """Flat ``{path: array}`` view; paths are stable and used in checkpoints."""
        t = {}
        t.update(self.encoder.parameters("encoder."))
        t.update(self.branch.parameters("branch."))
        t.update(self.trunk.parameters("trunk."))
        t["W"] = self.W
        t["b"] = self.b
        t.update(self.boundary.parameters("boundary."))
        t.update(self.stress_local.parameters("stress_local."))
        t.update(self.stress_head.parameters("stress_head."))
        return t

    def bind(self, tree):
        missing = set(self.tree()) - set(tree)
        if missing:
            raise ShapeError(f"parameter tree lacks {sorted(missing)[:5]}")
        return replace(
            self,
            encoder=self.encoder.bind(tree, "encoder."),
            branch=self.branch.bind(tree, "branch."),
            trunk=self.trunk.bind(tree, "trunk."),
            W=tree["W"],
            b=tree["b"],
            boundary=self.boundary.bind(tree, "boundary."),
            stress_local=self.stress_local.bind(tree, "stress_local."),
            stress_head=self.stress_head.bind(tree, "stress_head."),
        )

    def with_tree(self, tree):
        """Bind plain arrays, checking shapes and finiteness."""
        ref = self.tree()
        for k, v in tree.items():
            if k in ref and np.shape(v) != np.shape(ref[k]):
                raise ShapeError(f"parameter {k}: shape {np.shape(v)} != {np.shape(ref[k])}")
            if not np.all(np.isfinite(v)):
                raise ShapeError(f"parameter {k} has non-finite entries")
        return self.bind({k: np.asarray(v, dtype=np.float64) for k, v in tree.items()})

    def n_parameters(self):
        return int(sum(np.size(v) for v in self.tree().values()))


def subnet_of(path):
    return path.split(".", 1)[0]
