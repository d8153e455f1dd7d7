"""Compiled stencil kernels.

Everything here is a plain loop nest over a staggered grid, compiled with
numba in single-threaded mode so results are bitwise reproducible.  Index
conventions (spacing h, domain periodic in x and z, walls at y = 0, y_L):

    cells   c[i,j,k] at ((i+.5)h, (j+.5)h, (k+.5)h)   shape (nx, ny, nz)
    u faces u[i,j,k] at (i h,     (j+.5)h, (k+.5)h)   shape (nx, ny, nz)
    v faces v[i,j,k] at ((i+.5)h, j h,     (k+.5)h)   shape (nx, ny+1, nz)
    w faces w[i,j,k] at ((i+.5)h, (j+.5)h, k h)       shape (nx, ny, nz)

Wall rows of v (j = 0 and j = ny) carry the prescribed wall-normal velocity
(always zero).  Tangential velocities at the walls enter through ghost
values reconstructed as 2*wall - interior.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, fastmath=False)


# ----------------------------------------------------------------------
# scalar operator:  A(x) = m*x + (1/h^2) * sum_links beta * (x - x_nbr)
#
# bx[i,j,k] couples x[i,j,k] with x[i+1,j,k] (periodic),
# bz[i,j,k] couples x[i,j,k] with x[i,j,k+1] (periodic),
# by[i,j,k] couples x[i,j-1,k] with x[i,j,k]; rows j=0 and j=n1 of by are
# the wall links (zero for Neumann walls, pre-scaled for Dirichlet walls).
# Beyond-wall neighbor values are zero, so wall links only add to the
# diagonal.  This one convention covers cell-centered unknowns (u, w, P)
# and the y-node-centered interior v unknowns alike.
# ----------------------------------------------------------------------

@njit(**_JIT)
def scalar_apply(x, m, bx, by, bz, invh2, out):
    n0, n1, n2 = x.shape
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                xc = x[i, j, k]
                acc = bx[i, j, k] * (xc - x[ip, j, k])
                acc += bx[im, j, k] * (xc - x[im, j, k])
                acc += bz[i, j, k] * (xc - x[i, j, kp])
                acc += bz[i, j, km] * (xc - x[i, j, km])
                if j < n1 - 1:
                    acc += by[i, j + 1, k] * (xc - x[i, j + 1, k])
                else:
                    acc += by[i, n1, k] * xc
                if j > 0:
                    acc += by[i, j, k] * (xc - x[i, j - 1, k])
                else:
                    acc += by[i, 0, k] * xc
                out[i, j, k] = m[i, j, k] * xc + invh2 * acc


@njit(**_JIT)
def scalar_diag(m, bx, by, bz, invh2, out):
    n0, n1, n2 = m.shape
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                d = bx[i, j, k] + bx[im, j, k] + bz[i, j, k] + bz[i, j, km]
                d += by[i, j, k] + by[i, j + 1, k]
                out[i, j, k] = m[i, j, k] + invh2 * d


# ----------------------------------------------------------------------
# grid transfer operators (coarsening factor 2 in every direction)
# ----------------------------------------------------------------------

@njit(**_JIT)
def restrict_avg8(fine, coarse):
    """Plain 8-child average; used to coarsen cell-centered coefficients."""
    n0, n1, n2 = coarse.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                s = 0.0
                for di in range(2):
                    for dj in range(2):
                        for dk in range(2):
                            s += fine[2 * i + di, 2 * j + dj, 2 * k + dk]
                coarse[i, j, k] = 0.125 * s


@njit(**_JIT)
def prolong_cell(coarse, fine, wlo, whi):
    """Trilinear prolongation, cell-centered in all axes.

    x and z wrap periodically.  In y the missing outside neighbor is
    handled through the boundary weight: fine boundary rows get
    wlo (or whi) times the adjacent coarse value, which encodes a
    homogeneous Dirichlet ghost (w = 1/2) or Neumann ghost (w = 1).
    """
    n0, n1, n2 = fine.shape
    c0, c1, c2 = coarse.shape
    for fi in range(n0):
        ci = fi // 2
        # neighbor coarse index and weight along x (periodic)
        if fi % 2 == 0:
            oi = ci - 1 if ci > 0 else c0 - 1
        else:
            oi = ci + 1 if ci < c0 - 1 else 0
        for fj in range(n1):
            cj = fj // 2
            interior_j = True
            if fj % 2 == 0:
                oj = cj - 1
                if oj < 0:
                    interior_j = False
            else:
                oj = cj + 1
                if oj > c1 - 1:
                    interior_j = False
            for fk in range(n2):
                ck = fk // 2
                if fk % 2 == 0:
                    ok = ck - 1 if ck > 0 else c2 - 1
                else:
                    ok = ck + 1 if ck < c2 - 1 else 0
                # tensor-product weights 3/4 (own) and 1/4 (neighbor)
                if interior_j:
                    vj_own = 0.75 * coarse[ci, cj, ck]
                    vj_nbr = 0.25 * coarse[ci, oj, ck]
                    a = vj_own + vj_nbr
                    vj_own = 0.75 * coarse[oi, cj, ck]
                    vj_nbr = 0.25 * coarse[oi, oj, ck]
                    b = vj_own + vj_nbr
                    vj_own = 0.75 * coarse[ci, cj, ok]
                    vj_nbr = 0.25 * coarse[ci, oj, ok]
                    c = vj_own + vj_nbr
                    vj_own = 0.75 * coarse[oi, cj, ok]
                    vj_nbr = 0.25 * coarse[oi, oj, ok]
                    d = vj_own + vj_nbr
                else:
                    wb = wlo if fj == 0 else whi
                    a = wb * coarse[ci, cj, ck]
                    b = wb * coarse[oi, cj, ck]
                    c = wb * coarse[ci, cj, ok]
                    d = wb * coarse[oi, cj, ok]
                fine[fi, fj, fk] = 0.75 * (0.75 * a + 0.25 * b) + 0.25 * (0.75 * c + 0.25 * d)


@njit(**_JIT)
def restrict_cell(fine, coarse, wlo, whi):
    """Adjoint of prolong_cell scaled by 1/8 (full weighting)."""
    n0, n1, n2 = fine.shape
    c0, c1, c2 = coarse.shape
    coarse[:, :, :] = 0.0
    for fi in range(n0):
        ci = fi // 2
        if fi % 2 == 0:
            oi = ci - 1 if ci > 0 else c0 - 1
        else:
            oi = ci + 1 if ci < c0 - 1 else 0
        for fj in range(n1):
            cj = fj // 2
            interior_j = True
            if fj % 2 == 0:
                oj = cj - 1
                if oj < 0:
                    interior_j = False
                    oj = cj
            else:
                oj = cj + 1
                if oj > c1 - 1:
                    interior_j = False
                    oj = cj
            for fk in range(n2):
                ck = fk // 2
                if fk % 2 == 0:
                    ok = ck - 1 if ck > 0 else c2 - 1
                else:
                    ok = ck + 1 if ck < c2 - 1 else 0
                val = 0.125 * fine[fi, fj, fk]
                if interior_j:
                    wyc = 0.75
                    wyo = 0.25
                else:
                    wyc = wlo if fj == 0 else whi
                    wyo = 0.0
                coarse[ci, cj, ck] += 0.75 * wyc * 0.75 * val
                coarse[oi, cj, ck] += 0.25 * wyc * 0.75 * val
                coarse[ci, cj, ok] += 0.75 * wyc * 0.25 * val
                coarse[oi, cj, ok] += 0.25 * wyc * 0.25 * val
                if wyo != 0.0:
                    coarse[ci, oj, ck] += 0.75 * wyo * 0.75 * val
                    coarse[oi, oj, ck] += 0.25 * wyo * 0.75 * val
                    coarse[ci, oj, ok] += 0.75 * wyo * 0.25 * val
                    coarse[oi, oj, ok] += 0.25 * wyo * 0.25 * val


@njit(**_JIT)
def prolong_node_y(coarse, fine):
    """Trilinear prolongation with y node-centered (interior nodes only).

    ``coarse`` holds interior y-node values of the coarse grid
    (shape (c0, ny_c - 1, c2)); wall nodes are implicitly zero.
    x and z are cell-centered periodic.
    """
    n0, n1, n2 = fine.shape
    c0, c1, c2 = coarse.shape
    for fi in range(n0):
        ci = fi // 2
        if fi % 2 == 0:
            oi = ci - 1 if ci > 0 else c0 - 1
        else:
            oi = ci + 1 if ci < c0 - 1 else 0
        for fj in range(n1):
            jn = fj + 1  # global fine node index 1..ny_f-1
            for fk in range(n2):
                ck = fk // 2
                if fk % 2 == 0:
                    ok = ck - 1 if ck > 0 else c2 - 1
                else:
                    ok = ck + 1 if ck < c2 - 1 else 0
                if jn % 2 == 0:
                    cj = jn // 2 - 1  # array index of coincident coarse node
                    a = coarse[ci, cj, ck]
                    b = coarse[oi, cj, ck]
                    c = coarse[ci, cj, ok]
                    d = coarse[oi, cj, ok]
                else:
                    jlo = (jn - 1) // 2 - 1  # may be -1 (wall, value 0)
                    jhi = (jn + 1) // 2 - 1  # may be c1 (wall, value 0)
                    a = 0.0
                    b = 0.0
                    c = 0.0
                    d = 0.0
                    if jlo >= 0:
                        a += 0.5 * coarse[ci, jlo, ck]
                        b += 0.5 * coarse[oi, jlo, ck]
                        c += 0.5 * coarse[ci, jlo, ok]
                        d += 0.5 * coarse[oi, jlo, ok]
                    if jhi <= c1 - 1:
                        a += 0.5 * coarse[ci, jhi, ck]
                        b += 0.5 * coarse[oi, jhi, ck]
                        c += 0.5 * coarse[ci, jhi, ok]
                        d += 0.5 * coarse[oi, jhi, ok]
                fine[fi, fj, fk] = 0.75 * (0.75 * a + 0.25 * b) + 0.25 * (0.75 * c + 0.25 * d)


@njit(**_JIT)
def restrict_node_y(fine, coarse):
    """Adjoint of prolong_node_y scaled by 1/8."""
    n0, n1, n2 = fine.shape
    c0, c1, c2 = coarse.shape
    coarse[:, :, :] = 0.0
    for fi in range(n0):
        ci = fi // 2
        if fi % 2 == 0:
            oi = ci - 1 if ci > 0 else c0 - 1
        else:
            oi = ci + 1 if ci < c0 - 1 else 0
        for fj in range(n1):
            jn = fj + 1
            for fk in range(n2):
                ck = fk // 2
                if fk % 2 == 0:
                    ok = ck - 1 if ck > 0 else c2 - 1
                else:
                    ok = ck + 1 if ck < c2 - 1 else 0
                val = 0.125 * fine[fi, fj, fk]
                va = 0.75 * 0.75 * val
                vb = 0.25 * 0.75 * val
                vc = 0.75 * 0.25 * val
                vd = 0.25 * 0.25 * val
                if jn % 2 == 0:
                    cj = jn // 2 - 1
                    coarse[ci, cj, ck] += va
                    coarse[oi, cj, ck] += vb
                    coarse[ci, cj, ok] += vc
                    coarse[oi, cj, ok] += vd
                else:
                    jlo = (jn - 1) // 2 - 1
                    jhi = (jn + 1) // 2 - 1
                    if jlo >= 0:
                        coarse[ci, jlo, ck] += 0.5 * va
                        coarse[oi, jlo, ck] += 0.5 * vb
                        coarse[ci, jlo, ok] += 0.5 * vc
                        coarse[oi, jlo, ok] += 0.5 * vd
                    if jhi <= c1 - 1:
                        coarse[ci, jhi, ck] += 0.5 * va
                        coarse[oi, jhi, ck] += 0.5 * vb
                        coarse[ci, jhi, ok] += 0.5 * vc
                        coarse[oi, jhi, ok] += 0.5 * vd


# ----------------------------------------------------------------------
# skew-symmetric advection: 0.5 * (u . grad u  +  div(u u))
# ----------------------------------------------------------------------

@njit(**_JIT)
def advect(u, v, w, h, ubx, ubz, utx, utz, au, av, aw):
    nx, ny, nz = u.shape
    inv_h = 1.0 / h
    for i in range(nx):
        im = i - 1 if i > 0 else nx - 1
        ip = i + 1 if i < nx - 1 else 0
        for j in range(ny):
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                # ---------------- x component at u[i,j,k] -----------------
                uc_e = 0.5 * (u[i, j, k] + u[ip, j, k])      # cell i
                uc_w = 0.5 * (u[im, j, k] + u[i, j, k])      # cell i-1
                # u at z-edges (i, j) and (i, j+1), ghosts give wall value
                if j == 0:
                    ue_s = ubx
                else:
                    ue_s = 0.5 * (u[i, j - 1, k] + u[i, j, k])
                if j == ny - 1:
                    ue_n = utx
                else:
                    ue_n = 0.5 * (u[i, j, k] + u[i, j + 1, k])
                ve_s = 0.5 * (v[im, j, k] + v[i, j, k])
                ve_n = 0.5 * (v[im, j + 1, k] + v[i, j + 1, k])
                ue_b = 0.5 * (u[i, j, km] + u[i, j, k])
                ue_f = 0.5 * (u[i, j, k] + u[i, j, kp])
                we_b = 0.5 * (w[im, j, k] + w[i, j, k])
                we_f = 0.5 * (w[im, j, kp] + w[i, j, kp])
                div_form = (uc_e * uc_e - uc_w * uc_w
                            + ve_n * ue_n - ve_s * ue_s
                            + we_f * ue_f - we_b * ue_b) * inv_h
                adv_form = (u[i, j, k] * (uc_e - uc_w)
                            + 0.5 * (ve_s + ve_n) * (ue_n - ue_s)
                            + 0.5 * (we_b + we_f) * (ue_f - ue_b)) * inv_h
                au[i, j, k] = 0.5 * (div_form + adv_form)
                # ---------------- z component at w[i,j,k] -----------------
                wc_f = 0.5 * (w[i, j, k] + w[i, j, kp])      # cell k
                wc_b = 0.5 * (w[i, j, km] + w[i, j, k])      # cell k-1
                if j == 0:
                    we_s = ubz
                else:
                    we_s = 0.5 * (w[i, j - 1, k] + w[i, j, k])
                if j == ny - 1:
                    we_n = utz
                else:
                    we_n = 0.5 * (w[i, j, k] + w[i, j + 1, k])
                ve_sz = 0.5 * (v[i, j, km] + v[i, j, k])
                ve_nz = 0.5 * (v[i, j + 1, km] + v[i, j + 1, k])
                wz_w = 0.5 * (w[im, j, k] + w[i, j, k])
                wz_e = 0.5 * (w[i, j, k] + w[ip, j, k])
                uz_w = 0.5 * (u[i, j, km] + u[i, j, k])
                uz_e = 0.5 * (u[ip, j, km] + u[ip, j, k])
                div_form = (uz_e * wz_e - uz_w * wz_w
                            + ve_nz * we_n - ve_sz * we_s
                            + wc_f * wc_f - wc_b * wc_b) * inv_h
                adv_form = (0.5 * (uz_w + uz_e) * (wz_e - wz_w)
                            + 0.5 * (ve_sz + ve_nz) * (we_n - we_s)
                            + w[i, j, k] * (wc_f - wc_b)) * inv_h
                aw[i, j, k] = 0.5 * (div_form + adv_form)
        # ---------------- y component at interior v faces -----------------
        for j in range(1, ny):
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                vc_n = 0.5 * (v[i, j, k] + v[i, j + 1, k])   # cell j
                vc_s = 0.5 * (v[i, j - 1, k] + v[i, j, k])   # cell j-1
                ve_w = 0.5 * (v[im, j, k] + v[i, j, k])
                ve_e = 0.5 * (v[i, j, k] + v[ip, j, k])
                ue_w = 0.5 * (u[i, j - 1, k] + u[i, j, k])
                ue_e = 0.5 * (u[ip, j - 1, k] + u[ip, j, k])
                vz_b = 0.5 * (v[i, j, km] + v[i, j, k])
                vz_f = 0.5 * (v[i, j, k] + v[i, j, kp])
                wz_b = 0.5 * (w[i, j - 1, k] + w[i, j, k])
                wz_f = 0.5 * (w[i, j - 1, kp] + w[i, j, kp])
                div_form = (ue_e * ve_e - ue_w * ve_w
                            + vc_n * vc_n - vc_s * vc_s
                            + wz_f * vz_f - wz_b * vz_b) * inv_h
                adv_form = (0.5 * (ue_w + ue_e) * (ve_e - ve_w)
                            + v[i, j, k] * (vc_n - vc_s)
                            + 0.5 * (wz_b + wz_f) * (vz_f - vz_b)) * inv_h
                av[i, j, k] = 0.5 * (div_form + adv_form)


# ----------------------------------------------------------------------
# Lagrangian <-> Eulerian transfer
# ----------------------------------------------------------------------

@njit(inline="always")
def _phi(r):
    a = abs(r)
    if a <= 1.0:
        s = 1.0 + 4.0 * a - 4.0 * a * a
        if s < 0.0:
            s = 0.0
        return (3.0 - 2.0 * a + np.sqrt(s)) * 0.125
    if a <= 2.0:
        s = -7.0 + 12.0 * a - 4.0 * a * a
        if s < 0.0:
            s = 0.0
        return (5.0 - 2.0 * a - np.sqrt(s)) * 0.125
    return 0.0


@njit(**_JIT)
def spread(pos, val, target, h, omega, ox, oy, oz, scale):
    """Accumulate val_s * delta(x - X_s, omega) * scale onto a lattice.

    Lattice points sit at ((i+ox)h, (j+oy)h, (k+oz)h).  x and z wrap
    periodically; in y, points outside [0, n1) are dropped (support is
    truncated at the walls without renormalization).
    """
    n0, n1, n2 = target.shape
    ns = pos.shape[0]
    half = 2.0 * omega
    inv_o = 1.0 / omega
    for s in range(ns):
        x0 = pos[s, 0]
        x1 = pos[s, 1]
        x2 = pos[s, 2]
        i_lo = int(np.ceil((x0 - half) / h - ox))
        i_hi = int(np.floor((x0 + half) / h - ox))
        j_lo = int(np.ceil((x1 - half) / h - oy))
        j_hi = int(np.floor((x1 + half) / h - oy))
        k_lo = int(np.ceil((x2 - half) / h - oz))
        k_hi = int(np.floor((x2 + half) / h - oz))
        if j_lo < 0:
            j_lo = 0
        if j_hi > n1 - 1:
            j_hi = n1 - 1
        c = val[s] * scale * inv_o * inv_o * inv_o
        for i in range(i_lo, i_hi + 1):
            wx = _phi(((i + ox) * h - x0) * inv_o)
            if wx == 0.0:
                continue
            ii = i % n0
            for j in range(j_lo, j_hi + 1):
                wy = _phi(((j + oy) * h - x1) * inv_o)
                if wy == 0.0:
                    continue
                wxy = wx * wy
                for k in range(k_lo, k_hi + 1):
                    wz = _phi(((k + oz) * h - x2) * inv_o)
                    if wz == 0.0:
                        continue
                    target[ii, j, k % n2] += c * wxy * wz


@njit(inline="always")
def _sample_cell_y(field, i, j, k, n1, wall_lo, wall_hi):
    """Read a cell-centered-in-y field with mirrored linear wall ghosts."""
    if j < 0:
        return 2.0 * wall_lo - field[i, -1 - j, k]
    if j > n1 - 1:
        return 2.0 * wall_hi - field[i, 2 * n1 - 1 - j, k]
    return field[i, j, k]


@njit(inline="always")
def _sample_node_y(field, i, j, k, n1):
    """Read a y-node field (walls stored in rows 0 and n1-1), reflecting."""
    if j < 0:
        return 2.0 * field[i, 0, k] - field[i, -j, k]
    if j > n1 - 1:
        return 2.0 * field[i, n1 - 1, k] - field[i, 2 * (n1 - 1) - j, k]
    return field[i, j, k]


@njit(**_JIT)
def interpolate(pos, u, v, w, h, ubx, ubz, utx, utz, out):
    """Grid-kernel velocity interpolation U = sum u delta(x - X, h) h^3."""
    nx, ny, nz = u.shape
    ns = pos.shape[0]
    inv_h = 1.0 / h
    for s in range(ns):
        x0 = pos[s, 0] * inv_h
        x1 = pos[s, 1] * inv_h
        x2 = pos[s, 2] * inv_h
        # --- u: lattice offsets (0, .5, .5) -------------------------------
        acc = 0.0
        i_lo = int(np.ceil(x0 - 2.0))
        j_lo = int(np.ceil(x1 - 0.5 - 2.0))
        k_lo = int(np.ceil(x2 - 0.5 - 2.0))
        for i in range(i_lo, i_lo + 4):
            wx = _phi(i - x0)
            if wx == 0.0:
                continue
            ii = i % nx
            for j in range(j_lo, j_lo + 4):
                wy = _phi(j + 0.5 - x1)
                if wy == 0.0:
                    continue
                wxy = wx * wy
                for k in range(k_lo, k_lo + 4):
                    wz = _phi(k + 0.5 - x2)
                    if wz == 0.0:
                        continue
                    acc += wxy * wz * _sample_cell_y(u, ii, j, k % nz, ny, ubx, utx)
        out[s, 0] = acc
        # --- v: lattice offsets (.5, 0, .5); wall rows stored -------------
        acc = 0.0
        i_lo = int(np.ceil(x0 - 0.5 - 2.0))
        j_lo = int(np.ceil(x1 - 2.0))
        k_lo = int(np.ceil(x2 - 0.5 - 2.0))
        for i in range(i_lo, i_lo + 4):
            wx = _phi(i + 0.5 - x0)
            if wx == 0.0:
                continue
            ii = i % nx
            for j in range(j_lo, j_lo + 4):
                wy = _phi(j - x1)
                if wy == 0.0:
                    continue
                wxy = wx * wy
                for k in range(k_lo, k_lo + 4):
                    wz = _phi(k + 0.5 - x2)
                    if wz == 0.0:
                        continue
                    acc += wxy * wz * _sample_node_y(v, ii, j, k % nz, ny + 1)
        out[s, 1] = acc
        # --- w: lattice offsets (.5, .5, 0) -------------------------------
        acc = 0.0
        i_lo = int(np.ceil(x0 - 0.5 - 2.0))
        j_lo = int(np.ceil(x1 - 0.5 - 2.0))
        k_lo = int(np.ceil(x2 - 2.0))
        for i in range(i_lo, i_lo + 4):
            wx = _phi(i + 0.5 - x0)
            if wx == 0.0:
                continue
            ii = i % nx
            for j in range(j_lo, j_lo + 4):
                wy = _phi(j + 0.5 - x1)
                if wy == 0.0:
                    continue
                wxy = wx * wy
                for k in range(k_lo, k_lo + 4):
                    wz = _phi(k - x2)
                    if wz == 0.0:
                        continue
                    acc += wxy * wz * _sample_cell_y(w, ii, j, k % nz, ny, ubz, utz)
        out[s, 2] = acc


# ----------------------------------------------------------------------
# lean stress matvec with precomputed edge viscosities
# ----------------------------------------------------------------------

@njit(**_JIT)
def stress_divergence_fast(u, v, w, mu, ez, ey, ex, h,
                           ubx, ubz, utx, utz, fu, fv, fw):
    """Same operator as stress_divergence, reading cached edge viscosities.

    ez: (nx, ny+1, nz) viscosity at z-edges, ey: (nx, ny, nz) at y-edges,
    ex: (nx, ny+1, nz) at x-edges, all arithmetic cell averages.
    """
    nx, ny, nz = mu.shape
    inv_h = 1.0 / h
    inv_h2 = inv_h * inv_h
    for i in range(nx):
        im = i - 1 if i > 0 else nx - 1
        ip = i + 1 if i < nx - 1 else 0
        for j in range(ny):
            jp = j + 1
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                # ---- x momentum ----
                # tau_xy at edges (i, j) and (i, j+1)
                if j == 0:
                    dudy_s = 2.0 * (u[i, 0, k] - ubx)
                else:
                    dudy_s = u[i, j, k] - u[i, j - 1, k]
                if jp == ny:
                    dudy_n = 2.0 * (utx - u[i, ny - 1, k])
                else:
                    dudy_n = u[i, jp, k] - u[i, j, k]
                txy_s = ez[i, j, k] * (dudy_s + v[i, j, k] - v[im, j, k])
                txy_n = ez[i, jp, k] * (dudy_n + v[i, jp, k] - v[im, jp, k])
                txz_b = ey[i, j, k] * (u[i, j, k] - u[i, j, km] + w[i, j, k] - w[im, j, k])
                txz_f = ey[i, j, kp] * (u[i, j, kp] - u[i, j, k] + w[i, j, kp] - w[im, j, kp])
                txx_w = 2.0 * mu[im, j, k] * (u[i, j, k] - u[im, j, k])
                txx_e = 2.0 * mu[i, j, k] * (u[ip, j, k] - u[i, j, k])
                fu[i, j, k] = (txx_e - txx_w + txy_n - txy_s + txz_f - txz_b) * inv_h2
                # ---- z momentum ----
                if j == 0:
                    dwdy_s = 2.0 * (w[i, 0, k] - ubz)
                else:
                    dwdy_s = w[i, j, k] - w[i, j - 1, k]
                if jp == ny:
                    dwdy_n = 2.0 * (utz - w[i, ny - 1, k])
                else:
                    dwdy_n = w[i, jp, k] - w[i, j, k]
                tyz_s = ex[i, j, k] * (dwdy_s + v[i, j, k] - v[i, j, km])
                tyz_n = ex[i, jp, k] * (dwdy_n + v[i, jp, k] - v[i, jp, km])
                txz_w = ey[i, j, k] * (u[i, j, k] - u[i, j, km] + w[i, j, k] - w[im, j, k])
                txz_e = ey[ip, j, k] * (u[ip, j, k] - u[ip, j, km] + w[ip, j, k] - w[i, j, k])
                tzz_b = 2.0 * mu[i, j, km] * (w[i, j, k] - w[i, j, km])
                tzz_f = 2.0 * mu[i, j, k] * (w[i, j, kp] - w[i, j, k])
                fw[i, j, k] = (txz_e - txz_w + tyz_n - tyz_s + tzz_f - tzz_b) * inv_h2
        for j in range(1, ny):
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                txy_w = ez[i, j, k] * (u[i, j, k] - u[i, j - 1, k] + v[i, j, k] - v[im, j, k])
                txy_e = ez[ip, j, k] * (u[ip, j, k] - u[ip, j - 1, k] + v[ip, j, k] - v[i, j, k])
                tyy_s = 2.0 * mu[i, j - 1, k] * (v[i, j, k] - v[i, j - 1, k])
                tyy_n = 2.0 * mu[i, j, k] * (v[i, j + 1, k] - v[i, j, k])
                tyz_b = ex[i, j, k] * (v[i, j, k] - v[i, j, km] + w[i, j, k] - w[i, j - 1, k])
                tyz_f = ex[i, j, kp] * (v[i, j, kp] - v[i, j, k] + w[i, j, kp] - w[i, j - 1, kp])
                fv[i, j, k] = (txy_e - txy_w + tyy_n - tyy_s + tyz_f - tyz_b) * inv_h2


# ----------------------------------------------------------------------
# red-black Gauss-Seidel smoothing (in place, deterministic ordering)
# ----------------------------------------------------------------------

@njit(**_JIT)
def rbgs_sweep(x, b, diag, bx, by, bz, invh2, color):
    """One colored half-sweep of Gauss-Seidel on the scalar operator."""
    n0, n1, n2 = x.shape
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            k0 = (i + j + color) % 2
            for k in range(k0, n2, 2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                acc = bx[i, j, k] * x[ip, j, k] + bx[im, j, k] * x[im, j, k]
                acc += bz[i, j, k] * x[i, j, kp] + bz[i, j, km] * x[i, j, km]
                if j < n1 - 1:
                    acc += by[i, j + 1, k] * x[i, j + 1, k]
                if j > 0:
                    acc += by[i, j, k] * x[i, j - 1, k]
                x[i, j, k] = (b[i, j, k] + invh2 * acc) / diag[i, j, k]


@njit(**_JIT)
def assemble_dense(m, bx, by, bz, invh2, A):
    """Dense matrix of the scalar operator (coarsest-level direct solve)."""
    n0, n1, n2 = m.shape
    n12 = n1 * n2
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                row = i * n12 + j * n2 + k
                diag = m[i, j, k]
                cx = invh2 * bx[i, j, k]
                A[row, ip * n12 + j * n2 + k] -= cx
                diag += cx
                cx = invh2 * bx[im, j, k]
                A[row, im * n12 + j * n2 + k] -= cx
                diag += cx
                cx = invh2 * bz[i, j, k]
                A[row, i * n12 + j * n2 + kp] -= cx
                diag += cx
                cx = invh2 * bz[i, j, km]
                A[row, i * n12 + j * n2 + km] -= cx
                diag += cx
                cx = invh2 * by[i, j + 1, k]
                if j < n1 - 1:
                    A[row, i * n12 + (j + 1) * n2 + k] -= cx
                diag += cx
                cx = invh2 * by[i, j, k]
                if j > 0:
                    A[row, i * n12 + (j - 1) * n2 + k] -= cx
                diag += cx
                A[row, row] += diag


@njit(**_JIT)
def sgs_sweep(x, b, diag, bx, by, bz, invh2, reverse):
    """One lexicographic Gauss-Seidel sweep (backward if ``reverse``)."""
    n0, n1, n2 = x.shape
    if reverse:
        ir0, ir1, irs = n0 - 1, -1, -1
    else:
        ir0, ir1, irs = 0, n0, 1
    for i in range(ir0, ir1, irs):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for jj in range(n1):
            j = n1 - 1 - jj if reverse else jj
            for kk in range(n2):
                k = n2 - 1 - kk if reverse else kk
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                acc = bx[i, j, k] * x[ip, j, k] + bx[im, j, k] * x[im, j, k]
                acc += bz[i, j, k] * x[i, j, kp] + bz[i, j, km] * x[i, j, km]
                if j < n1 - 1:
                    acc += by[i, j + 1, k] * x[i, j + 1, k]
                if j > 0:
                    acc += by[i, j, k] * x[i, j - 1, k]
                x[i, j, k] = (b[i, j, k] + invh2 * acc) / diag[i, j, k]


@njit(**_JIT)
def viscous_matvec(u, v, w, mu, ez, ey, ex, mu_scale, m_u, m_v, m_w, h,
                   ou, ov, ow):
    """ou = m_u u - mu_scale * [stress divergence]_x, and likewise v, w.

    Fused form of the coupled backward-Euler operator with homogeneous
    walls; ``v`` carries zero wall rows, ``ov`` is the interior-node
    (nx, ny-1, nz) output.
    """
    nx, ny, nz = mu.shape
    c = mu_scale / (h * h)
    for i in range(nx):
        im = i - 1 if i > 0 else nx - 1
        ip = i + 1 if i < nx - 1 else 0
        for j in range(ny):
            jp = j + 1
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                if j == 0:
                    dudy_s = 2.0 * u[i, 0, k]
                    dwdy_s = 2.0 * w[i, 0, k]
                else:
                    dudy_s = u[i, j, k] - u[i, j - 1, k]
                    dwdy_s = w[i, j, k] - w[i, j - 1, k]
                if jp == ny:
                    dudy_n = -2.0 * u[i, ny - 1, k]
                    dwdy_n = -2.0 * w[i, ny - 1, k]
                else:
                    dudy_n = u[i, jp, k] - u[i, j, k]
                    dwdy_n = w[i, jp, k] - w[i, j, k]
                txy_s = ez[i, j, k] * (dudy_s + v[i, j, k] - v[im, j, k])
                txy_n = ez[i, jp, k] * (dudy_n + v[i, jp, k] - v[im, jp, k])
                txz_b = ey[i, j, k] * (u[i, j, k] - u[i, j, km] + w[i, j, k] - w[im, j, k])
                txz_f = ey[i, j, kp] * (u[i, j, kp] - u[i, j, k] + w[i, j, kp] - w[im, j, kp])
                txx_w = 2.0 * mu[im, j, k] * (u[i, j, k] - u[im, j, k])
                txx_e = 2.0 * mu[i, j, k] * (u[ip, j, k] - u[i, j, k])
                ou[i, j, k] = m_u[i, j, k] * u[i, j, k] - c * (
                    txx_e - txx_w + txy_n - txy_s + txz_f - txz_b)
                tyz_s = ex[i, j, k] * (dwdy_s + v[i, j, k] - v[i, j, km])
                tyz_n = ex[i, jp, k] * (dwdy_n + v[i, jp, k] - v[i, jp, km])
                txz_w = ey[i, j, k] * (u[i, j, k] - u[i, j, km] + w[i, j, k] - w[im, j, k])
                txz_e = ey[ip, j, k] * (u[ip, j, k] - u[ip, j, km] + w[ip, j, k] - w[i, j, k])
                tzz_b = 2.0 * mu[i, j, km] * (w[i, j, k] - w[i, j, km])
                tzz_f = 2.0 * mu[i, j, k] * (w[i, j, kp] - w[i, j, k])
                ow[i, j, k] = m_w[i, j, k] * w[i, j, k] - c * (
                    txz_e - txz_w + tyz_n - tyz_s + tzz_f - tzz_b)
        for j in range(1, ny):
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                kp = k + 1 if k < nz - 1 else 0
                txy_w = ez[i, j, k] * (u[i, j, k] - u[i, j - 1, k] + v[i, j, k] - v[im, j, k])
                txy_e = ez[ip, j, k] * (u[ip, j, k] - u[ip, j - 1, k] + v[ip, j, k] - v[i, j, k])
                tyy_s = 2.0 * mu[i, j - 1, k] * (v[i, j, k] - v[i, j - 1, k])
                tyy_n = 2.0 * mu[i, j, k] * (v[i, j + 1, k] - v[i, j, k])
                tyz_b = ex[i, j, k] * (v[i, j, k] - v[i, j, km] + w[i, j, k] - w[i, j - 1, k])
                tyz_f = ex[i, j, kp] * (v[i, j, kp] - v[i, j, k] + w[i, j, kp] - w[i, j - 1, kp])
                ov[i, j - 1, k] = m_v[i, j - 1, k] * v[i, j, k] - c * (
                    txy_e - txy_w + tyy_n - tyy_s + tyz_f - tyz_b)
