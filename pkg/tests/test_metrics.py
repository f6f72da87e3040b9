import numpy as np
import pytest
from hypothesis import given, strategies as st

from nffsim.core import Trajectory
from nffsim.errors import DomainError, ShapeError
from nffsim.metrics import (Ballistic, ConstantVelocity, evaluate, fpe, mse, pce, pearson, pearson_r, rmse)


def traj(com, kp=None, ref="s"):
    com = np.asarray(com, dtype=np.float64)
    T, K = com.shape[:2]
    kp = com[:, :, None, :] if kp is None else kp
    z = np.zeros((T, K, 3))
    return Trajectory([np.array(kp[:, k]) for k in range(K)], [np.zeros_like(kp[:, k]) for k in range(K)],
                      com, z, z, z, 0.02, ref)


def uniform(T=6, v=(1.5, 0.0, 0.0), h=0.02):
    return np.arange(T)[:, None, None] * h * np.asarray(v) + [[[1.0, 1.0, 1.0]]]


class TestRmse:
    def setup_method(self):
        self.kp = np.random.default_rng(0).normal(size=(5, 2, 4, 3))

    def test_identical(self):
        assert rmse(self.kp, self.kp) == 0.0

    def test_constant_offset(self):
        assert rmse(self.kp + 0.25, self.kp) == pytest.approx(0.25, rel=1e-14)

    def test_half_offset(self):
        p = self.kp.copy()
        p[..., :2, :] += 0.3
        assert rmse(p, self.kp) == pytest.approx(0.3 / np.sqrt(2), rel=1e-14)

    def test_shape(self):
        with pytest.raises(ShapeError):
            rmse(self.kp, self.kp[:4])

    @given(st.integers(0, 2**31))
    def test_sum_identity(self, seed):
        rng = np.random.default_rng(seed)
        p, g = rng.normal(size=(3, 2, 5, 3)), rng.normal(size=(3, 2, 5, 3))
        assert rmse(p, g) ** 2 * p.size == pytest.approx(np.sum((p - g) ** 2), rel=1e-12)


class TestFpe:
    def test_identical(self):
        c = uniform()
        assert fpe(c, c) == 0.0

    def test_345(self):
        g = np.zeros((3, 1, 3))
        p = g.copy()
        p[-1, 0] = [3.0, 4.0, 0.0]
        assert fpe(p, g) == 5.0

    def test_mean(self):
        g = np.zeros((2, 2, 3))
        p = g.copy()
        p[-1, 0, 0], p[-1, 1, 1] = 1.0, 3.0
        assert fpe(p, g) == 2.0

    def test_empty(self):
        with pytest.raises(DomainError):
            fpe(np.zeros((0, 1, 3)), np.zeros((0, 1, 3)))


class TestPce:
    def test_identical(self):
        assert pce(uniform(), uniform()) == 0.0

    def test_static_prediction(self):
        g = uniform(T=7, v=(1.5, 0, 0), h=0.02)
        p = np.repeat(g[:1], 7, axis=0)
        assert pce(p, g) == pytest.approx(1.5 * 0.02, rel=1e-12)

    def test_delayed(self):
        T = 9
        g = uniform(T=T)
        p = np.concatenate([g[:1], g[:-1]])
        assert pce(p, g) == pytest.approx(1.5 * 0.02 / (T - 1), rel=1e-12)

    def test_single_frame(self):
        with pytest.raises(DomainError):
            pce(np.zeros((1, 1, 3)), np.zeros((1, 1, 3)))


class TestPearson:
    def setup_method(self):
        self.g = np.random.default_rng(2).normal(size=(10, 2, 3))

    def test_identical(self):
        assert pearson_r(self.g, self.g) == pytest.approx(1.0, abs=1e-15)

    def test_anti(self):
        assert pearson_r(-self.g + 4.0, self.g) == pytest.approx(-1.0, abs=1e-15)

    @given(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
    def test_affine(self, a, b):
        assert abs(pearson_r(a * self.g + b, self.g) - 1.0) < 1e-12

    def test_degenerate(self):
        r, degenerate = pearson(np.ones(5), np.arange(5.0))
        assert r == 0.0 and degenerate


class TestEvaluate:
    def setup_method(self):
        rng = np.random.default_rng(3)
        self.trajs = []
        for i in range(3):
            com = uniform(T=8, v=rng.normal(size=3)) + rng.normal(0, 0.1, (1, 2, 3))
            self.trajs.append(traj(com + rng.normal(0, 0.01, com.shape), ref=f"s{i}"))

    def test_self(self):
        rep = evaluate(lambda gt: gt, self.trajs, name="gt")
        assert rep.rmse == 0 and rep.fpe == 0 and rep.pce == 0 and rep.mse == 0
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert rep.n_scenes == 3 and len(rep.scenes) == 3

    def test_rmse_is_root_mse(self):
        rep = evaluate(ConstantVelocity(), self.trajs)
        assert abs(rep.rmse - np.sqrt(rep.mse)) < 1e-12

    def test_scene_order(self):
        a = evaluate(Ballistic(), self.trajs)
        b = evaluate(Ballistic(), self.trajs[::-1])
        for key in ("rmse", "fpe", "pce"):
            assert getattr(a, key) == pytest.approx(getattr(b, key), rel=1e-12)

    def test_noise_monotone(self):
        gt = self.trajs[0]
        means = []
        for sigma in (0.01, 0.05, 0.2):
            vals = []
            for seed in range(5):
                rng = np.random.default_rng(seed)
                kp = [k + rng.normal(0, sigma, k.shape) for k in gt.keypoints]
                noisy = Trajectory(kp, gt.keypoint_velocities, gt.com, gt.com_velocity, gt.orientation,
                                   gt.angular_velocity, gt.frame_dt, gt.scene_ref)
                vals.append(rmse(noisy, gt))
            means.append(np.mean(vals))
        assert means == sorted(means)

    def test_ballistic_closed_form(self):
        g = np.array([0.0, 0.0, -9.8])
        T, h = 6, 0.02
        t = np.arange(T)[:, None, None] * h
        c0, v0 = np.array([1.0, 1.0, 1.5]), np.array([0.3, 0.0, 0.5])
        com = c0 + v0 * t + 0.5 * g * t**2
        gt = traj(com)
        gt.com_velocity = np.broadcast_to(v0 + g * t, com.shape).copy()
        pred = Ballistic()(gt)
        np.testing.assert_allclose(pred.com, com, atol=1e-12)

    def test_empty(self):
        with pytest.raises(DomainError):
            evaluate(Ballistic(), [])
