"""Numba kernels for the particle-grid transfers.

Grid arrays are flat over ``G**3`` nodes with ``index = (i * G + j) * G + k``.
Only nodes touched during the scatter are visited by the update and cleared
afterwards, so cost scales with the particle count, not the grid volume.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_INVERTED = 1
STATUS_OUTSIDE = 2

STICKY, SLIP, SEPARATE = 0, 1, 2
BOX_WALLS, PLANE, CUBOID = 0, 1, 2


@njit(cache=True)
def _stress_kirchhoff(F, mu, lam, out):
    """Writes P F^T into ``out``; returns det F."""
    a, b, c = F[0, 0], F[0, 1], F[0, 2]
    d, e, f = F[1, 0], F[1, 1], F[1, 2]
    g, h, i = F[2, 0], F[2, 1], F[2, 2]
    A = e * i - f * h
    B = -(d * i - f * g)
    C = d * h - e * g
    J = a * A + b * B + c * C
    if J <= 0.0:
        return J
    # P F^T = mu (F F^T - I) + lam ln J I
    logJ = np.log(J)
    for r in range(3):
        for s in range(3):
            acc = 0.0
            for t in range(3):
                acc += F[r, t] * F[s, t]
            out[r, s] = mu * acc
        out[r, r] += -mu + lam * logJ
    return J


@njit(cache=True)
def _weights(fx, w):
    for d in range(3):
        f = fx[d]
        w[0, d] = 0.5 * (1.5 - f) ** 2
        w[1, d] = 0.75 - (f - 1.0) ** 2
        w[2, d] = 0.5 * (f - 0.5) ** 2


@njit(cache=True)
def p2g_kernel(x, v, C, F, mass, vol, mu, lam, dt, origin, dx, G,
               grid_m, grid_mv, flag, active, n_active):
    """Scatter mass and APIC momentum plus the MLS internal-force impulse.

    Returns ``(status, particle_index, n_active)``.
    """
    inv_dx = 1.0 / dx
    w = np.empty((3, 3))
    fx = np.empty(3)
    base = np.empty(3, dtype=np.int64)
    tau = np.zeros((3, 3))
    aff = np.empty((3, 3))
    for p in range(x.shape[0]):
        for d in range(3):
            X = (x[p, d] - origin[d]) * inv_dx
            b = int(np.floor(X - 0.5))
            if b < 0 or b + 2 >= G:
                return STATUS_OUTSIDE, p, n_active
            base[d] = b
            fx[d] = X - b
        _weights(fx, w)
        J = _stress_kirchhoff(F[p], mu[p], lam[p], tau)
        if not J > 0.0:
            return STATUS_INVERTED, p, n_active
        scale = -dt * vol[p] * 4.0 * inv_dx * inv_dx
        m = mass[p]
        for r in range(3):
            for s in range(3):
                aff[r, s] = scale * tau[r, s] + m * C[p, r, s]
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    weight = w[i, 0] * w[j, 1] * w[k, 2]
                    dp0 = (i - fx[0]) * dx
                    dp1 = (j - fx[1]) * dx
                    dp2 = (k - fx[2]) * dx
                    node = ((base[0] + i) * G + (base[1] + j)) * G + (base[2] + k)
                    if flag[node] == 0:
                        flag[node] = 1
                        active[n_active] = node
                        n_active += 1
                    grid_m[node] += weight * m
                    for r in range(3):
                        grid_mv[node, r] += weight * (
                            m * v[p, r] + aff[r, 0] * dp0 + aff[r, 1] * dp1 + aff[r, 2] * dp2)
    return STATUS_OK, -1, n_active


@njit(cache=True)
def _project(vel, n, model, friction):
    vn = vel[0] * n[0] + vel[1] * n[1] + vel[2] * n[2]
    if model == STICKY:
        vel[0] = 0.0
        vel[1] = 0.0
        vel[2] = 0.0
        return
    if model == SEPARATE and vn >= 0.0:
        return
    for r in range(3):
        vel[r] -= vn * n[r]
    if friction > 0.0 and vn < 0.0:
        vt = np.sqrt(vel[0] ** 2 + vel[1] ** 2 + vel[2] ** 2)
        if vt > 0.0:
            s = max(0.0, vt + friction * vn) / vt
            for r in range(3):
                vel[r] *= s


@njit(cache=True)
def grid_update_kernel(grid_m, grid_mv, grid_v, active, n_active, origin, dx, G, gravity, dt,
                       c_kind, c_a, c_b, c_model, c_friction, mass_eps):
    vel = np.empty(3)
    n = np.zeros(3)
    for a in range(n_active):
        node = active[a]
        m = grid_m[node]
        if m <= mass_eps:
            grid_v[node, 0] = 0.0
            grid_v[node, 1] = 0.0
            grid_v[node, 2] = 0.0
            continue
        for r in range(3):
            vel[r] = grid_mv[node, r] / m + gravity[r] * dt
        k = node % G
        j = (node // G) % G
        i = node // (G * G)
        pos0 = origin[0] + i * dx
        pos1 = origin[1] + j * dx
        pos2 = origin[2] + k * dx
        pos = (pos0, pos1, pos2)
        for c in range(c_kind.shape[0]):
            kind = c_kind[c]
            if kind == BOX_WALLS:
                # c_a = lo, c_b = hi; each face projects with its inward normal
                for d in range(3):
                    if pos[d] <= c_a[c, d]:
                        n[0] = 0.0
                        n[1] = 0.0
                        n[2] = 0.0
                        n[d] = 1.0
                        _project(vel, n, c_model[c], c_friction[c])
                    elif pos[d] >= c_b[c, d]:
                        n[0] = 0.0
                        n[1] = 0.0
                        n[2] = 0.0
                        n[d] = -1.0
                        _project(vel, n, c_model[c], c_friction[c])
            elif kind == PLANE:
                # c_a = point on plane, c_b = unit normal toward free space
                sd = ((pos0 - c_a[c, 0]) * c_b[c, 0] + (pos1 - c_a[c, 1]) * c_b[c, 1]
                      + (pos2 - c_a[c, 2]) * c_b[c, 2])
                if sd <= 0.0:
                    for r in range(3):
                        n[r] = c_b[c, r]
                    _project(vel, n, c_model[c], c_friction[c])
            else:
                # cuboid obstacle [c_a, c_b]; push out through the nearest face
                if (pos0 >= c_a[c, 0] and pos0 <= c_b[c, 0] and pos1 >= c_a[c, 1]
                        and pos1 <= c_b[c, 1] and pos2 >= c_a[c, 2] and pos2 <= c_b[c, 2]):
                    best = 1e300
                    bd = 0
                    bs = 1.0
                    for d in range(3):
                        lo_gap = pos[d] - c_a[c, d]
                        hi_gap = c_b[c, d] - pos[d]
                        if lo_gap < best:
                            best = lo_gap
                            bd = d
                            bs = -1.0
                        if hi_gap < best:
                            best = hi_gap
                            bd = d
                            bs = 1.0
                    n[0] = 0.0
                    n[1] = 0.0
                    n[2] = 0.0
                    n[bd] = bs
                    _project(vel, n, c_model[c], c_friction[c])
        for r in range(3):
            grid_v[node, r] = vel[r]


@njit(cache=True)
def g2p_kernel(x, v, C, F, dt, origin, dx, G, grid_v, clamp_lo, clamp_hi):
    """Gather velocity and affine field, advect, update F.

    Returns ``(status, particle_index, max_speed, n_clamped)``.
    """
    inv_dx = 1.0 / dx
    w = np.empty((3, 3))
    fx = np.empty(3)
    base = np.empty(3, dtype=np.int64)
    nv = np.empty(3)
    nC = np.empty((3, 3))
    Fn = np.empty((3, 3))
    vmax = 0.0
    n_clamped = 0
    for p in range(x.shape[0]):
        for d in range(3):
            X = (x[p, d] - origin[d]) * inv_dx
            b = int(np.floor(X - 0.5))
            if b < 0 or b + 2 >= G:
                return STATUS_OUTSIDE, p, vmax, n_clamped
            base[d] = b
            fx[d] = X - b
        _weights(fx, w)
        for r in range(3):
            nv[r] = 0.0
            for s in range(3):
                nC[r, s] = 0.0
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    weight = w[i, 0] * w[j, 1] * w[k, 2]
                    node = ((base[0] + i) * G + (base[1] + j)) * G + (base[2] + k)
                    dp0 = (i - fx[0]) * dx
                    dp1 = (j - fx[1]) * dx
                    dp2 = (k - fx[2]) * dx
                    for r in range(3):
                        gv = grid_v[node, r]
                        nv[r] += weight * gv
                        nC[r, 0] += 4.0 * inv_dx * inv_dx * weight * gv * dp0
                        nC[r, 1] += 4.0 * inv_dx * inv_dx * weight * gv * dp1
                        nC[r, 2] += 4.0 * inv_dx * inv_dx * weight * gv * dp2
        speed = 0.0
        for r in range(3):
            v[p, r] = nv[r]
            speed += nv[r] * nv[r]
            for s in range(3):
                C[p, r, s] = nC[r, s]
        speed = np.sqrt(speed)
        if speed > vmax:
            vmax = speed
        clamped = False
        for r in range(3):
            xr = x[p, r] + dt * nv[r]
            if xr < clamp_lo[r]:
                xr = clamp_lo[r]
                clamped = True
            elif xr > clamp_hi[r]:
                xr = clamp_hi[r]
                clamped = True
            x[p, r] = xr
        if clamped:
            n_clamped += 1
        for r in range(3):
            for s in range(3):
                acc = 0.0
                for t in range(3):
                    acc += (dt * nC[r, t] + (1.0 if r == t else 0.0)) * F[p, t, s]
                Fn[r, s] = acc
        for r in range(3):
            for s in range(3):
                F[p, r, s] = Fn[r, s]
    return STATUS_OK, -1, vmax, n_clamped


@njit(cache=True)
def clear_kernel(grid_m, grid_mv, grid_v, flag, active, n_active):
    for a in range(n_active):
        node = active[a]
        grid_m[node] = 0.0
        flag[node] = 0
        for r in range(3):
            grid_mv[node, r] = 0.0
            grid_v[node, r] = 0.0


STATUS_CFL = 3


@njit(cache=True)
def substeps_kernel(n_sub, x, v, C, F, mass, vol, mu, lam, dt, origin, dx, G,
                    grid_m, grid_mv, grid_v, flag, active,
                    gravity, c_kind, c_a, c_b, c_model, c_friction, mass_eps,
                    clamp_lo, clamp_hi, cfl):
    """Run ``n_sub`` full substeps.

    Returns ``(status, particle_index, substeps_done, n_clamped)``.
    """
    n_clamped = 0
    for s in range(n_sub):
        status, p, n_active = p2g_kernel(x, v, C, F, mass, vol, mu, lam, dt, origin, dx, G,
                                         grid_m, grid_mv, flag, active, 0)
        if status != STATUS_OK:
            clear_kernel(grid_m, grid_mv, grid_v, flag, active, n_active)
            return status, p, s, n_clamped
        grid_update_kernel(grid_m, grid_mv, grid_v, active, n_active, origin, dx, G, gravity, dt,
                           c_kind, c_a, c_b, c_model, c_friction, mass_eps)
        status, p, vmax, nc = g2p_kernel(x, v, C, F, dt, origin, dx, G, grid_v, clamp_lo, clamp_hi)
        n_clamped += nc
        clear_kernel(grid_m, grid_mv, grid_v, flag, active, n_active)
        if status != STATUS_OK:
            return status, p, s, n_clamped
        if vmax * dt > cfl * dx:
            return STATUS_CFL, -1, s, n_clamped
    return STATUS_OK, -1, n_sub, n_clamped
