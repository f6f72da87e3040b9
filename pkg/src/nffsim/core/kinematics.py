"""Elasticity identities, rotations and centre-of-mass helpers."""

import numpy as np

from ..errors import DomainError, InvalidMaterialError


def derive_lame(youngs_modulus, poisson_ratio):
    """Lamé parameters ``(mu, lam)`` from Young's modulus and Poisson ratio.

    The incompressible limit ``nu -> 0.5`` is rejected.
    """
    E, nu = float(youngs_modulus), float(poisson_ratio)
    if not E > 0:
        raise InvalidMaterialError(f"Young's modulus must be positive, got {E}")
    if not 0.0 <= nu < 0.5:
        raise InvalidMaterialError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return mu, lam


def center_of_mass(points, masses):
    points = np.asarray(points, dtype=np.float64)
    masses = np.asarray(masses, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise DomainError("center of mass of an empty point set")
    if masses.shape != (points.shape[0],):
        raise DomainError(f"masses shape {masses.shape} does not match {points.shape[0]} points")
    if np.any(masses <= 0):
        raise DomainError("masses must be strictly positive")
    return masses @ points / masses.sum()


def euler_to_rotation(theta):
    """Rotation matrix for extrinsic X-Y-Z Euler angles, ``R = Rz @ Ry @ Rx``.

    Accepts ``(..., 3)`` and returns ``(..., 3, 3)``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    a, b, g = theta[..., 0], theta[..., 1], theta[..., 2]
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cg, sg = np.cos(g), np.sin(g)
    R = np.empty(theta.shape[:-1] + (3, 3))
    R[..., 0, 0] = cg * cb
    R[..., 0, 1] = cg * sb * sa - sg * ca
    R[..., 0, 2] = cg * sb * ca + sg * sa
    R[..., 1, 0] = sg * cb
    R[..., 1, 1] = sg * sb * sa + cg * ca
    R[..., 1, 2] = sg * sb * ca - cg * sa
    R[..., 2, 0] = -sb
    R[..., 2, 1] = cb * sa
    R[..., 2, 2] = cb * ca
    return R


def rotation_to_euler(R):
    """Inverse of :func:`euler_to_rotation`, angles wrapped to (-pi, pi]."""
    R = np.asarray(R, dtype=np.float64)
    b = -np.arcsin(np.clip(R[..., 2, 0], -1.0, 1.0))
    a = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    g = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    return wrap_angle(np.stack([a, b, g], axis=-1))


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    out = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def euler_rate_matrix(theta):
    """Matrix ``J`` with ``omega = J @ theta_dot`` for the extrinsic X-Y-Z convention."""
    theta = np.asarray(theta, dtype=np.float64)
    b, g = theta[..., 1], theta[..., 2]
    cb, sb, cg, sg = np.cos(b), np.sin(b), np.cos(g), np.sin(g)
    J = np.zeros(theta.shape[:-1] + (3, 3))
    # columns: Rz Ry e_x, Rz e_y, e_z
    J[..., 0, 0] = cg * cb
    J[..., 1, 0] = sg * cb
    J[..., 2, 0] = -sb
    J[..., 0, 1] = -sg
    J[..., 1, 1] = cg
    J[..., 2, 2] = 1.0
    return J


def angular_velocity_to_euler_rates(theta, omega):
    J = euler_rate_matrix(theta)
    return np.linalg.lstsq(J, np.asarray(omega, dtype=np.float64), rcond=1e-10)[0]


def polar_rotation(F):
    """Rotation factor of the polar decomposition ``F = R S`` (batched)."""
    U, _, Vt = np.linalg.svd(F)
    d = np.sign(np.linalg.det(U @ Vt))
    U = U.copy()
    U[..., :, 2] *= d[..., None]
    return U @ Vt


def project_to_so3(M):
    return polar_rotation(M)


def axis_angle_to_rotation(w):
    """Rodrigues formula for a single axis-angle 3-vector."""
    w = np.asarray(w, dtype=np.float64)
    angle = np.linalg.norm(w)
    K = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    if angle < 1e-12:
        return np.eye(3) + K
    K /= angle
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotation_angle(R):
    """Geodesic angle of a rotation matrix, in radians."""
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
