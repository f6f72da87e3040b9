import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from nffsim.core import Asset, AssetStore, Domain, MaterialParams, ObjectSpec, ParticleSystem, SceneConfig
from nffsim.errors import ConfigError, InvertedElementError
from nffsim.mpm import Collider, Grid, g2p, grid_update, neo_hookean_energy, neo_hookean_stress, p2g, simulate


def particles(x, v=None, m=None):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = len(x)
    v = np.zeros((n, 3)) if v is None else np.atleast_2d(np.asarray(v, dtype=np.float64))
    m = np.ones(n) if m is None else np.asarray(m, dtype=np.float64)
    return ParticleSystem(x, v, np.tile(np.eye(3), (n, 1, 1)), m, np.full(n, 1e-3),
                          np.zeros((n, 3, 3)), np.zeros(n, dtype=np.int64), 1)


class TestStress:
    def test_rest_state(self):
        assert np.all(neo_hookean_stress(np.eye(3), 3.0, 7.0) == 0.0)

    def test_uniaxial(self):
        P = neo_hookean_stress(np.diag([2.0, 1.0, 1.0]), 1.0, 0.0)
        np.testing.assert_allclose(P, np.diag([1.5, 0.0, 0.0]), atol=1e-15)

    def test_rotation_is_stress_free(self):
        R = Rotation.random(50, random_state=0).as_matrix()
        assert np.abs(neo_hookean_stress(R, 2.0, 5.0)).max() < 1e-9

    def test_inverted(self):
        with pytest.raises(InvertedElementError):
            neo_hookean_stress(np.diag([-1.0, 1.0, 1.0]), 1.0, 1.0)

    @settings(max_examples=30)
    @given(st.integers(0, 2**31))
    def test_stress_is_energy_gradient(self, seed):
        rng = np.random.default_rng(seed)
        F = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
        mu, lam = 1.3, 0.7
        eps = 1e-6
        fd = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                d = np.zeros((3, 3))
                d[i, j] = eps
                fd[i, j] = (neo_hookean_energy(F + d, mu, lam) - neo_hookean_energy(F - d, mu, lam)) / (2 * eps)
        np.testing.assert_allclose(neo_hookean_stress(F, mu, lam), fd, atol=1e-7)


class TestTransfer:
    def grid(self):
        return Grid.for_domain(Domain(edge=1.0), resolution=16)

    def test_node_centred_particle(self):
        g = self.grid()
        x = g.origin + 10 * g.spacing
        p2g(particles(x, m=[2.5]), g, 1e-4)
        assert g.n_active == 27
        assert g.total_mass() == pytest.approx(2.5, rel=1e-14)
        np.testing.assert_array_equal(g.total_momentum(), 0.0)

    def test_momentum_transfer(self):
        g = self.grid()
        p2g(particles([0.41, 0.52, 0.37], v=[1.0, -2.0, 0.5], m=[3.0]), g, 1e-4)
        np.testing.assert_allclose(g.total_momentum(), [3.0, -6.0, 1.5], rtol=1e-13)

    def test_opposite_momenta(self):
        g = self.grid()
        p2g(particles([[0.4, 0.5, 0.5], [0.6, 0.45, 0.5]], v=[[1, 2, 3], [-1, -2, -3]]), g, 1e-4)
        assert np.abs(g.total_momentum()).max() < 1e-12

    def test_free_node_gravity(self):
        g = self.grid()
        p2g(particles([0.5, 0.5, 0.5]), g, 1e-2)
        grid_update(g, [], (0.0, 0.0, -9.8), 0.01)
        v = g.node_velocity[g.active_nodes()]
        np.testing.assert_allclose(v, np.tile([0.0, 0.0, -0.098], (27, 1)), atol=1e-15)

    def _single_node(self, v, model):
        g = self.grid()
        node = 5 * g.nodes_per_axis**2 + 5 * g.nodes_per_axis + 3  # below the floor plane z=0
        g.node_mass[node] = 1.0
        g.node_momentum[node] = v
        g.active[0] = node
        g.n_active = 1
        floor = Collider("plane", (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), model)
        grid_update(g, [floor], (0.0, 0.0, 0.0), 0.01)
        return g.node_velocity[node]

    def test_sticky_floor(self):
        np.testing.assert_array_equal(self._single_node([1.0, 0.0, -3.0], "sticky"), 0.0)

    def test_separate_outward(self):
        np.testing.assert_array_equal(self._single_node([1.0, 0.0, 2.0], "separate"), [1.0, 0.0, 2.0])

    def test_slip_inward(self):
        np.testing.assert_allclose(self._single_node([1.0, 0.0, -2.0], "slip"), [1.0, 0.0, 0.0])

    def test_uniform_field(self):
        g = self.grid()
        g.node_velocity[:] = [0.3, -0.1, 0.2]
        sys = particles([[0.31, 0.47, 0.55], [0.6, 0.6, 0.4]])
        out = g2p(sys, g, 0.0)
        np.testing.assert_allclose(out.velocities, [[0.3, -0.1, 0.2]] * 2, atol=1e-14)
        assert np.abs(out.affine).max() < 1e-12
        np.testing.assert_array_equal(out.deformation_gradients, sys.deformation_gradients)

    def test_linear_field(self):
        g = self.grid()
        A = np.random.default_rng(1).normal(size=(3, 3))
        G = g.nodes_per_axis
        g.node_velocity[:] = g.node_positions(np.arange(G**3)) @ A.T
        out = g2p(particles([[0.313, 0.471, 0.552]]), g, 0.0)
        np.testing.assert_allclose(out.affine[0], A, atol=1e-10)

    def test_zero_field(self):
        g = self.grid()
        sys = particles([[0.31, 0.47, 0.55]])
        out = g2p(sys, g, 1e-3)
        np.testing.assert_array_equal(out.positions, sys.positions)
        np.testing.assert_array_equal(out.deformation_gradients, sys.deformation_gradients)


def ball_store():
    g = np.linspace(-0.5, 0.5, 7)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    pts = pts[np.linalg.norm(pts, axis=1) <= 0.5]
    mats = {"stiff": MaterialParams("stiff", 1e6, 0.3, 1000.0), "soft": MaterialParams("soft", 1e3, 0.3, 1000.0)}
    return AssetStore([Asset("ball", pts, 0.2, "stiff")], mats)


class TestSimulate:
    def test_static_without_gravity(self):
        cfg = SceneConfig(objects=[ObjectSpec("ball", "stiff", (1.0, 1.0, 1.0))], gravity=(0, 0, 0),
                          n_main_steps=3, substeps_per_main=20, grid_resolution=32)
        traj = simulate(cfg, ball_store(), keypoints_per_object=8)
        for t in range(1, 3):
            assert np.abs(traj.keypoints[0][t] - traj.keypoints[0][0]).max() < 1e-9

    def test_default_frame_count(self):
        cfg = SceneConfig(objects=[ObjectSpec("ball", "soft", (1.0, 1.0, 1.0))], substeps_per_main=20,
                          grid_resolution=16)
        traj = simulate(cfg, ball_store(), keypoints_per_object=4)
        assert traj.n_frames == 100
        assert traj.frame_dt == 0.02

    def test_single_frame_rejected(self):
        cfg = SceneConfig(objects=[ObjectSpec("ball", "stiff", (1.0, 1.0, 1.0))], n_main_steps=1)
        with pytest.raises(ConfigError):
            simulate(cfg, ball_store())

    def test_hook_mass_conservation(self):
        cfg = SceneConfig(objects=[ObjectSpec("ball", "stiff", (1.0, 1.0, 1.0), velocity=(0.5, 0, 0))],
                          gravity=(0, 0, 0), n_main_steps=2, substeps_per_main=10, grid_resolution=32)
        masses = []
        simulate(cfg, ball_store(), keypoints_per_object=4,
                 on_substep=lambda step, x, v, m, grid: masses.append(grid.total_mass()))
        assert len(masses) == 20
        np.testing.assert_allclose(masses, masses[0], rtol=1e-12)
