import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nffsim.core import (Asset, AssetStore, Domain, MaterialParams, ObjectSpec, SceneConfig, builtin_assets,
                         center_of_mass, derive_lame, euler_to_rotation, farthest_point_sampling,
                         instantiate_scene, place_objects, rotation_to_euler, sample_keypoints, scene_pool,
                         wrap_angle)
from nffsim.errors import DomainError, InvalidMaterialError, PlacementError, SamplingError

angles = st.floats(-10.0, 10.0, allow_nan=False)


class TestLame:
    def test_zero_poisson(self):
        assert derive_lame(1.0, 0.0) == (0.5, 0.0)

    def test_quarter_poisson(self):
        mu, lam = derive_lame(1.0, 0.25)
        assert mu == pytest.approx(0.4, abs=1e-15)
        assert lam == pytest.approx(0.4, abs=1e-15)

    def test_near_incompressible(self):
        mu, lam = derive_lame(2.0, 0.49)
        assert mu == pytest.approx(2.0 / 2.98, rel=1e-14)
        # E nu / ((1 + nu)(1 - 2 nu)) evaluated independently
        assert lam == pytest.approx(0.98 / (1.49 * 0.02), rel=1e-12)

    @pytest.mark.parametrize("E,nu", [(0.0, 0.2), (-1.0, 0.2), (1.0, 0.5), (1.0, -0.1), (1.0, 0.7)])
    def test_invalid(self, E, nu):
        with pytest.raises(InvalidMaterialError):
            derive_lame(E, nu)

    def test_material_rejects_density(self):
        with pytest.raises(Exception):
            MaterialParams("m", 1e5, 0.3, 0.0)


class TestCenterOfMass:
    def test_unit_masses(self):
        np.testing.assert_array_equal(center_of_mass([[0, 0, 0], [2, 0, 0]], [1, 1]), [1, 0, 0])

    def test_weighted(self):
        np.testing.assert_array_equal(center_of_mass([[0, 0, 0], [4, 0, 0]], [1, 3]), [3, 0, 0])

    def test_single(self):
        np.testing.assert_allclose(center_of_mass([[0.3, -1.2, 5.0]], [7.5]), [0.3, -1.2, 5.0])

    def test_errors(self):
        with pytest.raises(DomainError):
            center_of_mass(np.zeros((0, 3)), np.zeros(0))
        with pytest.raises(DomainError):
            center_of_mass([[0, 0, 0]], [0.0])


class TestRotation:
    def test_identity(self):
        np.testing.assert_array_equal(euler_to_rotation([0, 0, 0]), np.eye(3))

    def test_quarter_turn_z(self):
        R = euler_to_rotation([0, 0, np.pi / 2])
        np.testing.assert_allclose(R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)

    @given(st.tuples(angles, angles, angles))
    def test_orthonormal(self, th):
        R = euler_to_rotation(th)
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)

    @given(st.tuples(angles, st.floats(-1.5, 1.5), angles))
    def test_euler_round_trip(self, th):
        R = euler_to_rotation(th)
        np.testing.assert_allclose(euler_to_rotation(rotation_to_euler(R)), R, atol=1e-9)

    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_wrap_range(self, a):
        w = float(wrap_angle(a))
        assert -np.pi < w <= np.pi
        assert np.sin(w) == pytest.approx(np.sin(a), abs=1e-9)
        assert np.cos(w) == pytest.approx(np.cos(a), abs=1e-9)


def cube_store(n_side=2, density=1.0):
    g = np.linspace(-0.25, 0.25, n_side)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    mats = {"unit": MaterialParams("unit", 1e4, 0.2, density)}
    return AssetStore([Asset("cube", pts, 1.0, "unit", volume=1.0)], mats)


class TestScene:
    def test_rope_particle_count(self):
        store = builtin_assets(scale="paper", kinds=["rope"])
        cfg = SceneConfig(objects=[ObjectSpec("rope", "rope", (1.0, 1.0, 1.0))])
        system = instantiate_scene(cfg, store)
        assert int((system.object_ids == 0).sum()) == 8051

    def test_empty_scene(self):
        system = instantiate_scene(SceneConfig(), cube_store())
        assert system.size == 0 and system.n_objects == 0

    def test_mass_partition(self):
        store = cube_store()
        cfg = SceneConfig(objects=[ObjectSpec("cube", "unit", (0.5, 0.5, 0.5)),
                                   ObjectSpec("cube", "unit", (1.5, 1.5, 0.5))])
        system = instantiate_scene(cfg, store)
        assert system.size == 16
        np.testing.assert_array_equal(system.masses, np.full(16, 1.0 / 8.0))
        np.testing.assert_array_equal(system.object_ids, [0] * 8 + [1] * 8)

    def test_outside_domain(self):
        cfg = SceneConfig(objects=[ObjectSpec("cube", "unit", (0.1, 0.5, 0.5))])
        with pytest.raises(PlacementError):
            instantiate_scene(cfg, cube_store())


class TestKeypoints:
    def test_all_particles_identity(self):
        store = cube_store()
        system = instantiate_scene(SceneConfig(objects=[ObjectSpec("cube", "unit", (1, 1, 1))]), store)
        np.testing.assert_array_equal(sample_keypoints(system, 0, 8), np.arange(8))

    def test_square_diagonal(self):
        sq = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
        for start in range(4):
            idx = farthest_point_sampling(sq, 2, start)
            assert sorted(idx) in ([0, 2], [1, 3])
            assert np.linalg.norm(sq[idx[0]] - sq[idx[1]]) == pytest.approx(np.sqrt(2))

    def test_deterministic(self):
        store = builtin_assets(kinds=["duck"])
        system = instantiate_scene(SceneConfig(objects=[ObjectSpec("duck", "duck", (1, 1, 1))]), store)
        a = sample_keypoints(system, 0, 16, seed=3)
        b = sample_keypoints(system, 0, 16, seed=3)
        np.testing.assert_array_equal(a, b)
        assert len(np.unique(a)) == 16

    def test_too_many(self):
        system = instantiate_scene(SceneConfig(objects=[ObjectSpec("cube", "unit", (1, 1, 1))]), cube_store())
        with pytest.raises(SamplingError):
            sample_keypoints(system, 0, 9)


class TestSampling:
    def test_pool_layout(self):
        store = builtin_assets()
        pool = scene_pool(store, 6, n_four=2, n_groups=3, seed=1)
        assert [len(c.objects) for c in pool] == [3] * 6 + [4] * 2
        groups = {}
        for c in pool[:6]:
            groups.setdefault(c.group, set()).add(tuple(o.asset for o in c.objects))
        assert all(len(v) == 1 for v in groups.values())
        for c in pool:
            instantiate_scene(c, store)  # inside the domain

    def test_pool_deterministic(self):
        store = builtin_assets()
        assert scene_pool(store, 4, seed=5) == scene_pool(store, 4, seed=5)

    def test_no_initial_overlap(self):
        store = builtin_assets()
        for cfg in scene_pool(store, 10, seed=2):
            system = instantiate_scene(cfg, store)
            parts = [system.positions[system.object_ids == k] for k in range(3)]
            for i in range(3):
                for j in range(i + 1, 3):
                    d = np.linalg.norm(parts[i][:, None] - parts[j][None], axis=-1).min()
                    assert d > 0.0

    def test_exhaustion(self):
        store = builtin_assets(kinds=["pillow"])
        with pytest.raises(SamplingError):
            place_objects(store, ["pillow"] * 40, np.random.default_rng(0), max_tries=3)

    def test_domain_contains(self):
        d = Domain((0, 0, 0), 2.0)
        assert d.contains([1, 1, 1]) and not d.contains([2.1, 1, 1])
