import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from nffsim.core.kinematics import rotation_angle
from nffsim.errors import DomainError, RankError, RegistrationError
from nffsim.register import (Sim3, chamfer, kabsch, nearest, nearest_brute, ransac_kabsch, refine_sim3, register,
                             scale_init, umeyama)


def cloud(n=300, seed=0):
    return np.random.default_rng(seed).normal(size=(n, 3)) * [1.0, 0.6, 0.35]


def random_sim(seed):
    rng = np.random.default_rng(seed)
    return Sim3(Rotation.random(random_state=seed).as_matrix(), rng.normal(size=3), float(rng.uniform(0.5, 2.0)))


def rot_err_deg(A, B):
    return np.degrees(rotation_angle(A.T @ B))


class TestScale:
    def test_identical(self):
        P = cloud()
        assert scale_init(P, P) == pytest.approx(1.0, rel=1e-14)

    def test_double(self):
        P = cloud()
        assert scale_init(P, 2 * P) == pytest.approx(2.0, rel=1e-14)

    def test_planar(self):
        P = cloud()
        P[:, 2] = 0.0
        with pytest.raises(DomainError):
            scale_init(P, cloud())


class TestKabsch:
    def test_exact(self):
        P = cloud(20)
        sim = random_sim(1)
        R, t = kabsch(P, P @ sim.R.T + sim.t)
        np.testing.assert_allclose(R, sim.R, atol=1e-10)
        np.testing.assert_allclose(t, sim.t, atol=1e-10)

    def test_identity(self):
        P = cloud(10)
        R, t = kabsch(P, P)
        np.testing.assert_allclose(R, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(t, 0.0, atol=1e-12)

    def test_reflection(self):
        P = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [1.0, 1.0, 1.0]])
        Q = P * [1, 1, -1]
        R, t = kabsch(P, Q)
        assert np.linalg.det(R) == pytest.approx(1.0)
        res = np.sum((P @ R.T + t - Q) ** 2)
        assert res > 1e-6
        # no proper rotation does better: brute-force over a rotation sample
        best = min(np.sum((P @ Rs.T + (Q.mean(0) - P.mean(0) @ Rs.T) - Q) ** 2)
                   for Rs in Rotation.random(3000, random_state=0).as_matrix())
        assert res <= best + 1e-9

    def test_collinear(self):
        P = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
        with pytest.raises(RankError):
            umeyama(P, P)

    @given(st.integers(0, 2**31))
    def test_umeyama_recovers_similarity(self, seed):
        P = cloud(30, seed % 100)
        sim = random_sim(seed)
        R, t, s = umeyama(P, sim.apply(P), with_scale=True)
        assert s == pytest.approx(sim.s, rel=1e-9)
        np.testing.assert_allclose(R, sim.R, atol=1e-9)


class TestRansac:
    def test_clean(self):
        P = cloud(50)
        sim = random_sim(2)
        R, t, s, inl = ransac_kabsch(P, P @ sim.R.T + sim.t, iterations=50)
        assert len(inl) == 50

    def test_outliers(self):
        rng = np.random.default_rng(4)
        P = cloud(200, 4)
        sim = random_sim(4)
        Q = P @ sim.R.T + sim.t
        bad = rng.choice(200, 60, replace=False)
        Q[bad] += rng.normal(0, 1.0, (60, 3))
        R, t, _, inl = ransac_kabsch(P, Q, iterations=500, inlier_threshold=1e-3)
        assert rot_err_deg(R, sim.R) < 0.1
        good = np.setdiff1d(np.arange(200), bad)
        assert set(good) <= set(inl)

    def test_random_pairs_fail(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            with pytest.raises(RegistrationError):
                ransac_kabsch(rng.normal(size=(40, 3)), rng.normal(size=(40, 3)), iterations=200,
                              inlier_threshold=1e-3, seed=seed)


class TestChamfer:
    def test_zero(self):
        P = cloud(50)
        assert chamfer(P, P) == 0.0

    def test_single(self):
        assert chamfer(np.zeros((1, 3)), np.array([[1.0, 0, 0]])) == 2.0

    @given(st.integers(0, 2**31))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        P, Q = rng.normal(size=(17, 3)), rng.normal(size=(23, 3))
        assert chamfer(P, Q) == pytest.approx(chamfer(Q, P), rel=1e-12)

    def test_tree_matches_brute(self):
        P, Q = cloud(2500, 1), cloud(2600, 2)
        d1, i1 = nearest(P, Q)
        d2, i2 = nearest_brute(P, Q)
        np.testing.assert_allclose(d1, d2, rtol=1e-9, atol=1e-15)


class TestRefine:
    def test_optimal_start(self):
        P = cloud(200)
        hist = []
        out = refine_sim3(Sim3.identity(), P, P, history=hist)
        assert hist == [0.0]
        np.testing.assert_array_equal(out.R, np.eye(3))

    def test_perturbed(self):
        P = cloud(400, 5)
        true = random_sim(5)
        Q = true.apply(P)
        dR = Rotation.from_rotvec(np.radians(5.0) * np.array([0.6, 0.8, 0.0])).as_matrix()
        init = Sim3(dR @ true.R, true.t + [0.05, 0.0, 0.0], true.s * 1.03)
        hist = []
        out = refine_sim3(init, P, Q, iters=300, history=hist)
        assert rot_err_deg(out.R, true.R) < 0.5
        assert abs(out.s / true.s - 1) < 5e-3
        assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_register_without_pairs():
    P = cloud(400, 7)
    true = Sim3(Rotation.from_rotvec([0.05, -0.03, 0.08]).as_matrix(), np.array([0.3, -0.2, 0.1]), 1.4)
    Q = true.apply(P)
    sim, info = register(P, Q, seed=0)
    assert rot_err_deg(sim.R, true.R) < 1.0
    assert abs(sim.s / true.s - 1) < 0.01
    assert all(b <= a for a, b in zip(info["objective"], info["objective"][1:]))


def test_sim3_algebra():
    a, b = random_sim(11), random_sim(12)
    P = cloud(10)
    np.testing.assert_allclose(a.inverse().apply(a.apply(P)), P, atol=1e-12)
    np.testing.assert_allclose(a.compose(b).apply(P), a.apply(b.apply(P)), atol=1e-12)
    back = Sim3.from_dict(a.to_dict())
    np.testing.assert_array_equal(back.R, a.R)
