"""Random scene configurations with collision-free initial placements."""

from __future__ import annotations

import numpy as np

from ..errors import SamplingError
from .types import Domain, ObjectSpec, SceneConfig

MAX_TRIES = 1000


def _radius(store, kind):
    asset = store.asset(kind)
    return float(np.max(np.linalg.norm(asset.points, axis=1))) * asset.size


def place_objects(store, kinds, rng, domain=Domain(), height=(0.5, 1.5), jitter=0.3, max_speed=1.0,
                  moving_fraction=0.5, max_tries=MAX_TRIES):
    """Specs for ``kinds`` dropped above the domain centre without initial overlap.

    Each object gets a random orientation, a lift of ``height`` metres above
    the floor, lateral offset within ``±jitter`` and, with probability
    ``moving_fraction``, an initial velocity of up to ``max_speed``.  Objects
    are placed one at a time against bounding spheres; a dead end restarts
    the scene, and ``max_tries`` restarts raise :class:`SamplingError`.
    """
    centre = domain.center
    floor = domain.lo[2]
    radii = [_radius(store, k) for k in kinds]
    for _ in range(max_tries):
        placed = []
        for r in radii:
            for _ in range(50):
                pos = np.array([centre[0] + rng.uniform(-jitter, jitter), centre[1] + rng.uniform(-jitter, jitter),
                                floor + max(rng.uniform(*height), r)])
                if all(np.linalg.norm(pos - p) > r + q for p, q in placed) and \
                        np.all(pos - r >= domain.lo) and np.all(pos + r <= domain.hi):
                    placed.append((pos, r))
                    break
            else:
                break
        if len(placed) == len(kinds):
            break
    else:
        raise SamplingError(f"could not place {list(kinds)} without overlap after {max_tries} tries")
    specs = []
    for kind, (pos, _) in zip(kinds, placed):
        rot = rng.uniform(-np.pi, np.pi, size=3)
        vel = np.zeros(3)
        if rng.uniform() < moving_fraction:
            d = rng.normal(size=3)
            vel = d / np.linalg.norm(d) * rng.uniform(0.0, max_speed)
        specs.append(ObjectSpec(kind, kind, tuple(pos), tuple(rot), tuple(vel)))
    return specs


def scene_pool(store, n_three, n_four=0, n_six=0, n_groups=10, seed=0, kinds=None, n_main_steps=80,
               prefix="s", **placement):
    """Scene configs: three-object scenes in ``n_groups`` fixed triples, plus larger scenes.

    Group ``3_g`` always uses the same triple of object kinds; groups ``4``
    and ``6`` draw kinds per scene.
    """
    rng = np.random.default_rng(seed)
    kinds = sorted(kinds or store.names)
    triples = [tuple(str(k) for k in rng.choice(kinds, size=3, replace=len(kinds) < 3)) for _ in range(n_groups)]
    out = []
    for i in range(n_three):
        g = i % n_groups
        specs = place_objects(store, triples[g], rng, **placement)
        out.append(SceneConfig(objects=specs, scene_id=f"{prefix}3_{g}_{i:04d}", group=f"3_{g}",
                               n_main_steps=n_main_steps))
    for n, count in ((4, n_four), (6, n_six)):
        for i in range(count):
            chosen = tuple(str(k) for k in rng.choice(kinds, size=n, replace=len(kinds) < n))
            specs = place_objects(store, chosen, rng, **placement)
            out.append(SceneConfig(objects=specs, scene_id=f"{prefix}{n}_{i:04d}", group=str(n),
                                   n_main_steps=n_main_steps))
    return out
