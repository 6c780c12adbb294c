"""Compiled inner loops. All loops are serial with a fixed summation order,
so every result is bitwise reproducible for a given build."""

from __future__ import annotations

import numpy as np
from numba import njit

PART_FULL = 0
PART_INTERNAL = 1
PART_EXTERNAL = 2


@njit(cache=True, fastmath=True)
def pair_field(xs, ys, zs, w, eps2):
    """Symmetric O(N^2/2) sum of w_j (x_i - x_j)/(r^2+eps2)^(3/2) and w_j/sqrt(r^2+eps2).

    Returns (ex, ey, ez, phi, n_coincident).
    """
    n = xs.shape[0]
    ex = np.zeros(n)
    ey = np.zeros(n)
    ez = np.zeros(n)
    phi = np.zeros(n)
    bad = 0
    for i in range(n):
        ax = 0.0
        ay = 0.0
        az = 0.0
        p = 0.0
        xi = xs[i]
        yi = ys[i]
        zi = zs[i]
        wi = w[i]
        for j in range(i + 1, n):
            dx = xi - xs[j]
            dy = yi - ys[j]
            dz = zi - zs[j]
            r2 = dx * dx + dy * dy + dz * dz + eps2
            if r2 == 0.0:
                bad += 1
                continue
            inv = 1.0 / np.sqrt(r2)
            inv3 = inv * inv * inv
            wj = w[j]
            ax += wj * dx * inv3
            ay += wj * dy * inv3
            az += wj * dz * inv3
            p += wj * inv
            ex[j] -= wi * dx * inv3
            ey[j] -= wi * dy * inv3
            ez[j] -= wi * dz * inv3
            phi[j] += wi * inv
        ex[i] += ax
        ey[i] += ay
        ez[i] += az
        phi[i] += p
    return ex, ey, ez, phi, bad


@njit(cache=True, fastmath=True)
def target_field(tx, ty, tz, sx, sy, sz, w, eps2):
    """Field and potential of weighted sources at separate targets.

    Coincident target/source pairs with eps2 = 0 are skipped and counted.
    """
    m = tx.shape[0]
    n = sx.shape[0]
    ex = np.zeros(m)
    ey = np.zeros(m)
    ez = np.zeros(m)
    phi = np.zeros(m)
    bad = 0
    for i in range(m):
        ax = 0.0
        ay = 0.0
        az = 0.0
        p = 0.0
        for j in range(n):
            dx = tx[i] - sx[j]
            dy = ty[i] - sy[j]
            dz = tz[i] - sz[j]
            r2 = dx * dx + dy * dy + dz * dz + eps2
            if r2 == 0.0:
                bad += 1
                continue
            inv = 1.0 / np.sqrt(r2)
            inv3 = inv * inv * inv
            ax += w[j] * dx * inv3
            ay += w[j] * dy * inv3
            az += w[j] * dz * inv3
            p += w[j] * inv
        ex[i] = ax
        ey[i] = ay
        ez[i] = az
        phi[i] = p
    return ex, ey, ez, phi, bad


@njit(cache=True)
def chi0(u):
    """Radial profile: 1 on [0,1], 0 on [2,inf), quintic smoothstep between."""
    if u <= 1.0:
        return 1.0
    if u >= 2.0:
        return 0.0
    p = u - 1.0
    return 1.0 - p * p * p * (10.0 - 15.0 * p + 6.0 * p * p)


@njit(cache=True)
def dchi0(u):
    if u <= 1.0 or u >= 2.0:
        return 0.0
    p = u - 1.0
    return -30.0 * p * p * (1.0 - p) * (1.0 - p)


@njit(cache=True)
def masked_field(targets, sources, w, eps2, R, part, want_jac):
    """Cutoff-masked kernel sum at each target.

    Each source j contributes m(r) w_j z/(r^2+eps2_j)^(3/2), z = x - y_j,
    with m = 1, chi0(r/R) or 1 - chi0(r/R) for the full, internal and
    external parts. The Jacobian dE_a/dx_b is returned when ``want_jac``.
    Sources located exactly at a target are skipped.
    """
    mt = targets.shape[0]
    n = sources.shape[0]
    E = np.zeros((mt, 3))
    J = np.zeros((mt, 3, 3))
    for i in range(mt):
        for j in range(n):
            z0 = targets[i, 0] - sources[j, 0]
            z1 = targets[i, 1] - sources[j, 1]
            z2 = targets[i, 2] - sources[j, 2]
            r2 = z0 * z0 + z1 * z1 + z2 * z2
            if r2 == 0.0:
                # a source never acts on a target at its own location
                continue
            s2 = r2 + eps2[j]
            r = np.sqrt(r2)
            if part == PART_FULL:
                mval = 1.0
                dm = 0.0
            else:
                u = r / R
                if part == PART_INTERNAL:
                    if u >= 2.0:
                        continue
                    mval = chi0(u)
                    dm = dchi0(u) / R
                else:
                    if u <= 1.0:
                        continue
                    mval = 1.0 - chi0(u)
                    dm = -dchi0(u) / R
            inv = 1.0 / np.sqrt(s2)
            inv3 = inv * inv * inv
            psi = w[j] * mval * inv3
            E[i, 0] += psi * z0
            E[i, 1] += psi * z1
            E[i, 2] += psi * z2
            if want_jac:
                # d/dr of m(r) (r^2+eps2)^(-3/2), divided by r
                inv5 = inv3 * inv * inv
                c = -3.0 * w[j] * mval * inv5
                if dm != 0.0:
                    c += w[j] * dm * inv3 / r
                zz = (z0, z1, z2)
                for a in range(3):
                    J[i, a, a] += psi
                    for b in range(3):
                        J[i, a, b] += c * zz[a] * zz[b]
    return E, J


@njit(cache=True)
def _charge_accel(x, xi, eps2c):
    d0 = x[0] - xi[0]
    d1 = x[1] - xi[1]
    d2 = x[2] - xi[2]
    r2 = d0 * d0 + d1 * d1 + d2 * d2
    s2 = r2 + eps2c
    inv = 1.0 / np.sqrt(s2)
    inv3 = inv * inv * inv
    return d0 * inv3, d1 * inv3, d2 * inv3, np.sqrt(r2)


@njit(cache=True)
def substep_particle(x0, v0, E0, E1, xi0, eta0, A0, dt, nsub, eps2c, floor):
    """Velocity-Verlet over one outer step split into ``nsub`` substeps.

    The plasma field is interpolated linearly in time between E0 and E1 and
    the charge follows xi0 + tau eta0 + tau^2 A0 / 2, matching the outer
    step's drift of the charge. Returns (x, v, min_distance).
    """
    h = dt / nsub
    x = x0.copy()
    v = v0.copy()
    xi = xi0.copy()
    fx, fy, fz, rmin = _charge_accel(x, xi, eps2c)
    ax = E0[0] + fx
    ay = E0[1] + fy
    az = E0[2] + fz
    for k in range(nsub):
        tau = (k + 1) * h
        v[0] += 0.5 * h * ax
        v[1] += 0.5 * h * ay
        v[2] += 0.5 * h * az
        x[0] += h * v[0]
        x[1] += h * v[1]
        x[2] += h * v[2]
        for c in range(3):
            xi[c] = xi0[c] + tau * eta0[c] + 0.5 * tau * tau * A0[c]
        lam = tau / dt
        fx, fy, fz, r = _charge_accel(x, xi, eps2c)
        if r < rmin:
            rmin = r
        if r < floor:
            break
        ax = E0[0] + lam * (E1[0] - E0[0]) + fx
        ay = E0[1] + lam * (E1[1] - E0[1]) + fy
        az = E0[2] + lam * (E1[2] - E0[2]) + fz
        v[0] += 0.5 * h * ax
        v[1] += 0.5 * h * ay
        v[2] += 0.5 * h * az
    return x, v, rmin


@njit(cache=True, fastmath=True)
def move_particle_update(xs, ys, zs, w, eps2, i, new_pos, ex, ey, ez, phi):
    """Move particle i to new_pos and update all pair fields in place."""
    n = xs.shape[0]
    ox = xs[i]
    oy = ys[i]
    oz = zs[i]
    nx = new_pos[0]
    ny = new_pos[1]
    nz = new_pos[2]
    wi = w[i]
    ax = 0.0
    ay = 0.0
    az = 0.0
    p = 0.0
    for j in range(n):
        if j == i:
            continue
        # remove old contribution of i on j
        dx = xs[j] - ox
        dy = ys[j] - oy
        dz = zs[j] - oz
        inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz + eps2)
        inv3 = inv * inv * inv
        ex[j] -= wi * dx * inv3
        ey[j] -= wi * dy * inv3
        ez[j] -= wi * dz * inv3
        phi[j] -= wi * inv
        # add new contribution, and the field of j at the new position of i
        dx = xs[j] - nx
        dy = ys[j] - ny
        dz = zs[j] - nz
        inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz + eps2)
        inv3 = inv * inv * inv
        ex[j] += wi * dx * inv3
        ey[j] += wi * dy * inv3
        ez[j] += wi * dz * inv3
        phi[j] += wi * inv
        ax -= w[j] * dx * inv3
        ay -= w[j] * dy * inv3
        az -= w[j] * dz * inv3
        p += w[j] * inv
    xs[i] = nx
    ys[i] = ny
    zs[i] = nz
    ex[i] = ax
    ey[i] = ay
    ez[i] = az
    phi[i] = p
