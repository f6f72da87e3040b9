import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from gradcheck import relative_errors
from nffsim.core import Domain, ObjectState, euler_to_rotation, rotation_to_euler
from nffsim.errors import ModelDivergenceError
from nffsim.io import load_params, save_params
from nffsim.nff import (ForceFieldConfig, ForceFieldParams, contact_graph, detect_boundary, detect_collisions,
                        encode_state, force_field, interaction_forces, stress_forces)
from nffsim.nff.contact import contact_geometry
from nffsim.nff.field import batch_states, interaction, pair_terms, _features
from nffsim.nn import ops

SMALL = ForceFieldConfig(d_feature=8, d_latent=4, hidden=8, n_layers=2, boundary_layers=1, stress_hidden=6,
                         stress_context=5, encoder_widths=(3, 6, 7))
DOMAIN = Domain()


def obj(center, m=6, seed=0, spread=0.02, vel=(0, 0, 0), th=(0, 0, 0)):
    rng = np.random.default_rng(seed)
    kp = np.asarray(center, float) + rng.normal(0, spread, (m, 3))
    return ObjectState(kp, np.tile(vel, (m, 1)).astype(float), kp.mean(0), np.asarray(vel, float),
                       np.asarray(th, float), np.zeros(3))


def point(p):
    p = np.asarray([p], float)
    return ObjectState(p, np.zeros((1, 3)), p[0], np.zeros(3), np.zeros(3), np.zeros(3))


class TestContact:
    def test_far_apart(self):
        g = detect_collisions([obj([0.5, 1, 1]), obj([1.5, 1, 1])], 0.05)
        assert g.edges == [] and not any(c.any() for c in g.cam)

    def test_close_points(self):
        g = detect_collisions([point([1.0, 1.0, 1.0]), point([1.04, 1.0, 1.0])], 0.05)
        assert g.edges == [(0, 1)]
        assert g.cam[0][0] and g.cam[1][0]

    def test_single_object(self):
        for thr in (0.05, 10.0):
            assert detect_collisions([obj([1, 1, 1])], thr).edges == []

    def test_floor_flag(self):
        flags, bits = detect_boundary([point([1.0, 1.0, 0.03])], DOMAIN, 0.05)
        assert flags[0] and bits[0][0]

    def test_centre_not_flagged(self):
        flags, _ = detect_boundary([point([1.0, 1.0, 1.0])], DOMAIN, 0.05)
        assert not flags[0]

    def test_strict_threshold(self):
        flags, _ = detect_boundary([point([1.0, 1.0, 0.05])], DOMAIN, 0.05)
        assert not flags[0]
        g = detect_collisions([point([1.0, 1.0, 1.0]), point([1.0, 1.0, 1.25])], 0.25)
        assert g.edges == []

    @settings(max_examples=50)
    @given(st.integers(0, 2**31), st.floats(0.01, 0.5))
    def test_kernel_matches_brute_force(self, seed, thr):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, 2.0, (2, 3, 5, 3)) * [1, 1, 0.5] + [0, 0, 0.8]
        geo = contact_geometry(x, DOMAIN, thr)
        for b in range(2):
            states = [ObjectState(x[b, k], np.zeros((5, 3)), x[b, k].mean(0), np.zeros(3), np.zeros(3), np.zeros(3))
                      for k in range(3)]
            g = contact_graph(states, DOMAIN, thr)
            np.testing.assert_array_equal(geo.intersection[b], g.intersection)
            np.testing.assert_array_equal(geo.boundary[b], g.boundary)
            np.testing.assert_array_equal(geo.cam[b], np.stack(g.cam))
            for q in range(3):
                for i in range(3):
                    if q != i:
                        d = np.linalg.norm(x[b, q][:, None] - x[b, i][None], axis=-1).min() ** 2
                        assert geo.pair_d2[b, q, i] == pytest.approx(d, rel=1e-12)


class TestEncoding:
    def setup_method(self):
        self.params = ForceFieldParams.create(SMALL, seed=1)

    def test_translation(self):
        a = encode_state(obj([0.5, 1, 1], seed=3), self.params).feature
        b = encode_state(obj([1.5, 0.7, 1.2], seed=3), self.params).feature
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_permutation(self):
        s = obj([1, 1, 1], seed=4)
        perm = np.random.default_rng(0).permutation(6)
        t = ObjectState(s.keypoints[perm], s.keypoint_velocities, s.com, s.com_velocity, s.orientation,
                        s.angular_velocity)
        np.testing.assert_allclose(encode_state(s, self.params).feature, encode_state(t, self.params).feature,
                                   atol=1e-12)


class TestForces:
    def test_isolated_zero(self):
        params = ForceFieldParams.create(SMALL, seed=2)
        out = force_field([obj([1, 1, 1])], params, DOMAIN)
        np.testing.assert_array_equal(out[0].F_global, 0.0)

    def test_zero_params(self):
        params = ForceFieldParams.create(SMALL, init="zeros")
        states = [obj([1, 1, 0.03], seed=0), obj([1.03, 1, 0.05], seed=1)]
        for o in force_field(states, params, DOMAIN):
            assert not o.F_global.any() and not o.F_latent.any() and not o.F_local.any()

    def test_zero_params_stress(self):
        params = ForceFieldParams.create(SMALL, init="zeros")
        s = [obj([1, 1, 1])]
        out = stress_forces(s, np.ones((1, SMALL.d_latent)), [np.ones(6, bool)], params)
        np.testing.assert_array_equal(out[0], 0.0)

    def test_deform_disabled(self):
        params = ForceFieldParams.create(SMALL, seed=3)
        states = [obj([1, 1, 1], seed=0), obj([1.02, 1, 1.02], seed=1)]
        on = force_field(states, params, DOMAIN)
        off = force_field(states, params, DOMAIN, deform_enabled=False)
        for a, b in zip(on, off):
            np.testing.assert_array_equal(b.F_local, 0.0)
            np.testing.assert_array_equal(a.F_global, b.F_global)
        assert any(np.abs(a.F_local).max() > 0 for a in on)

    def test_ragged_keypoints(self):
        params = ForceFieldParams.create(SMALL, seed=3)
        out = force_field([obj([1, 1, 1], m=4), obj([1.02, 1, 1], m=7, seed=1)], params, DOMAIN)
        assert out[0].F_local.shape == (4, 3) and out[1].F_local.shape == (7, 3)

    def test_stack_additivity(self):
        params = ForceFieldParams.create(SMALL, seed=4)
        states = [obj([1, 1, 0.5], seed=0), obj([1, 1, 0.54], seed=1), obj([1, 1, 0.58], seed=2)]
        st_ = batch_states(states)
        h = _features(states, params)
        geo = contact_geometry(st_.x, DOMAIN, 0.05)
        assert geo.intersection[0, 1].sum() == 2  # middle object touches both neighbours
        full = interaction(params, st_, h, geo, DOMAIN)
        gate = geo.intersection.copy()
        gate[0, 1, 2] = False
        partial = interaction(params, st_, h, geo, DOMAIN, gate=gate)
        term = pair_terms(params, st_, h, geo, DOMAIN, (np.array([0]), np.array([1]), np.array([2])))
        np.testing.assert_allclose(full[0, 1] - partial[0, 1], (term @ params.W)[0], atol=1e-12)
        np.testing.assert_array_equal(full[0, 0], partial[0, 0])

    def test_local_frame_invariance(self):
        params = ForceFieldParams.create(SMALL, seed=5)
        rng = np.random.default_rng(0)
        s = obj([1, 1, 1], seed=0, vel=(0.1, -0.2, 0.3), th=(0.3, -0.2, 1.0))
        s.keypoint_velocities = s.keypoint_velocities + rng.normal(0, 0.1, (6, 3))
        lat = rng.normal(size=(1, SMALL.d_latent))
        cam = [rng.uniform(size=6) < 0.5]
        base = stress_forces([s], lat, cam, params)[0]
        for R0 in Rotation.random(5, random_state=1).as_matrix():
            pivot = np.array([1.0, 1.0, 1.0])
            t = ObjectState((s.keypoints - pivot) @ R0.T + pivot, s.keypoint_velocities @ R0.T,
                            (s.com - pivot) @ R0.T + pivot, s.com_velocity @ R0.T,
                            rotation_to_euler(R0 @ euler_to_rotation(s.orientation)), s.angular_velocity)
            np.testing.assert_allclose(stress_forces([t], lat, cam, params)[0], base, atol=1e-9)

    def test_cam_is_used(self):
        params = ForceFieldParams.create(SMALL, seed=6)
        s = [obj([1, 1, 1])]
        lat = np.zeros((1, SMALL.d_latent))
        a = stress_forces(s, lat, [np.zeros(6, bool)], params)[0]
        b = stress_forces(s, lat, [np.ones(6, bool)], params)[0]
        assert np.abs(a - b).max() > 1e-6

    def test_given_graph(self):
        params = ForceFieldParams.create(SMALL, seed=7)
        states = [obj([1, 1, 1], seed=0), obj([1.5, 1, 1], seed=1)]
        g = contact_graph(states, DOMAIN)
        g.intersection = np.array([[False, True], [True, False]])
        forced = interaction_forces(states, params, DOMAIN, graph=g)
        free = interaction_forces(states, params, DOMAIN)
        assert np.abs(forced[0][0] - free[0][0]).max() > 0

    def test_divergence(self):
        params = ForceFieldParams.create(SMALL, seed=8)
        bad = obj([1, 1, 1])
        bad.com_velocity = np.array([np.nan, 0, 0])
        with pytest.raises(ModelDivergenceError) as err:
            force_field([obj([1.5, 1, 1]), bad, obj([1.02, 1, 1.02], seed=3)], params, DOMAIN)
        assert err.value.object_index in (1, 2)

    def test_checkpoint_round_trip(self, tmp_path):
        params = ForceFieldParams.create(SMALL, seed=9)
        save_params(tmp_path / "p.ngff", params)
        back = load_params(tmp_path / "p.ngff")
        assert back.config == params.config
        for k, v in params.tree().items():
            np.testing.assert_array_equal(back.tree()[k], v)


def test_subnet_gradients():
    params = ForceFieldParams.create(SMALL, seed=10)
    states = [obj([1, 1, 0.04], seed=0, vel=(0.1, 0, -0.2)), obj([1.02, 1, 0.07], seed=1, th=(0.2, 0.1, -0.3))]
    st_ = batch_states(states)
    x0 = np.asarray(st_.x)
    h0 = _features(states, params)
    geo = contact_geometry(x0, DOMAIN, SMALL.threshold)
    r = np.random.default_rng(0)
    from nffsim.nff.field import evaluate_field, ModelState

    w_g = r.normal(size=(1, 2, 6))
    w_l = r.normal(size=x0.shape)

    def f(v):
        p = params.bind(v)
        s = ModelState(v["x"], st_.xd, st_.c, st_.cd, st_.th, st_.thd)
        ev = evaluate_field(p, s, v["h"], DOMAIN)
        return ops.sum(ops.mul(ev.F_global, w_g)) + ops.sum(ops.mul(ev.F_local, w_l))

    tree = {**params.tree(), "x": x0, "h": h0}
    errs = relative_errors(f, tree, n_samples=4)
    assert max(errs.values()) < 1e-4, errs
