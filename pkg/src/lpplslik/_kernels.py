"""Jitted inner loops for the subordinated least-squares calibration.

These kernels exist purely for speed: profile construction evaluates the
linear-subordination cost tens of millions of times.  The authoritative,
condition-checked linear solve lives in ``calibrate.solve_linear``; the
kernel uses the same equilibrated Cholesky factorization with a cheap
pivot-based degeneracy guard and returns INF for degenerate or singular
points so the simplex walks away from them.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = 1e300
_SING_GUARD = 1e-9
_PIVOT_FLOOR = 1e-13

# Nelder-Mead coefficients (standard)
_RHO, _CHI, _GAMMA, _SIGMA = 1.0, 2.0, 0.5, 0.5

# objective modes
MODE_F1 = 0        # x = (m, w) at fixed tc; data = ln|tc - t|
MODE_POLISH = 1    # x = (tc, m, w); data = observation times
MODE_FIX_M = 2     # x = (w,) with m fixed
MODE_FIX_W = 3     # x = (m,) with w fixed


@njit(cache=True)
def linear_sse(ln_r, y, m, w):
    """Exact linear subordination at fixed (tc, m, w).

    Solves the 4x4 normal equations for (A, B, C1, C2) by Cholesky on the
    column-equilibrated matrix and returns (sse, A, B, C1, C2).  Returns
    sse = INF when the equilibrated factorization hits a pivot below the
    degeneracy floor.
    """
    n = ln_r.shape[0]
    f = np.empty(n)
    g = np.empty(n)
    h = np.empty(n)
    s_f = 0.0
    s_g = 0.0
    s_h = 0.0
    s_ff = 0.0
    s_fg = 0.0
    s_fh = 0.0
    s_gg = 0.0
    s_gh = 0.0
    s_hh = 0.0
    s_y = 0.0
    s_yf = 0.0
    s_yg = 0.0
    s_yh = 0.0
    for i in range(n):
        fi = np.exp(m * ln_r[i])
        wl = w * ln_r[i]
        gi = fi * np.cos(wl)
        hi = fi * np.sin(wl)
        f[i] = fi
        g[i] = gi
        h[i] = hi
        yi = y[i]
        s_f += fi
        s_g += gi
        s_h += hi
        s_ff += fi * fi
        s_fg += fi * gi
        s_fh += fi * hi
        s_gg += gi * gi
        s_gh += gi * hi
        s_hh += hi * hi
        s_y += yi
        s_yf += yi * fi
        s_yg += yi * gi
        s_yh += yi * hi
    G = np.empty((4, 4))
    G[0, 0] = n
    G[0, 1] = s_f
    G[0, 2] = s_g
    G[0, 3] = s_h
    G[1, 0] = s_f
    G[1, 1] = s_ff
    G[1, 2] = s_fg
    G[1, 3] = s_fh
    G[2, 0] = s_g
    G[2, 1] = s_fg
    G[2, 2] = s_gg
    G[2, 3] = s_gh
    G[3, 0] = s_h
    G[3, 1] = s_fh
    G[3, 2] = s_gh
    G[3, 3] = s_hh
    b = np.empty(4)
    b[0] = s_y
    b[1] = s_yf
    b[2] = s_yg
    b[3] = s_yh
    d = np.empty(4)
    for i in range(4):
        di = G[i, i]
        if not (di > 0.0) or not np.isfinite(di):
            return INF, 0.0, 0.0, 0.0, 0.0
        d[i] = np.sqrt(di)
    A = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            A[i, j] = G[i, j] / (d[i] * d[j])
    # Cholesky of the unit-diagonal matrix; small pivots flag collinearity
    L = np.zeros((4, 4))
    for i in range(4):
        s = A[i, i]
        for k in range(i):
            s -= L[i, k] * L[i, k]
        if not (s > _PIVOT_FLOOR):
            return INF, 0.0, 0.0, 0.0, 0.0
        L[i, i] = np.sqrt(s)
        for j in range(i + 1, 4):
            t = A[j, i]
            for k in range(i):
                t -= L[j, k] * L[i, k]
            L[j, i] = t / L[i, i]
    z = np.empty(4)
    for i in range(4):
        t = b[i] / d[i]
        for k in range(i):
            t -= L[i, k] * z[k]
        z[i] = t / L[i, i]
    for i in range(3, -1, -1):
        t = z[i]
        for k in range(i + 1, 4):
            t -= L[k, i] * z[k]
        z[i] = t / L[i, i]
    ca = z[0] / d[0]
    cb = z[1] / d[1]
    cc1 = z[2] / d[2]
    cc2 = z[3] / d[3]
    sse = 0.0
    for i in range(n):
        resid = y[i] - (ca + cb * f[i] + cc1 * g[i] + cc2 * h[i])
        sse += resid * resid
    return sse, ca, cb, cc1, cc2


@njit(cache=True)
def _fold(x, lo, hi):
    """Reflect x into [lo, hi] (triangle wave of period 2(hi - lo))."""
    span = hi - lo
    if span <= 0.0:
        return lo
    y = (x - lo) % (2.0 * span)
    if y < 0.0:
        y += 2.0 * span
    if y > span:
        y = 2.0 * span - y
    return lo + y


@njit(cache=True)
def _objective(mode, x, lo, hi, ln_r, times, y, fixed):
    if mode == MODE_F1:
        m = _fold(x[0], lo[0], hi[0])
        w = _fold(x[1], lo[1], hi[1])
        sse, _, _, _, _ = linear_sse(ln_r, y, m, w)
        return sse
    elif mode == MODE_POLISH:
        tc = _fold(x[0], lo[0], hi[0])
        m = _fold(x[1], lo[1], hi[1])
        w = _fold(x[2], lo[2], hi[2])
        n = times.shape[0]
        lr = np.empty(n)
        for i in range(n):
            r = abs(tc - times[i])
            if r < _SING_GUARD:
                return INF
            lr[i] = np.log(r)
        sse, _, _, _, _ = linear_sse(lr, y, m, w)
        return sse
    elif mode == MODE_FIX_M:
        w = _fold(x[0], lo[0], hi[0])
        sse, _, _, _, _ = linear_sse(ln_r, y, fixed, w)
        return sse
    else:
        m = _fold(x[0], lo[0], hi[0])
        sse, _, _, _, _ = linear_sse(ln_r, y, m, fixed)
        return sse


@njit(cache=True)
def nelder_mead(mode, x0, steps, lo, hi, ln_r, times, y, fixed,
                xtol_rel, ftol_rel, ftol_abs, max_iter):
    """Nelder-Mead with box handling by coordinate reflection.

    Converged when both the relative simplex extent and the relative cost
    spread drop below their tolerances.  Returns (x_best_folded, f_best,
    converged, n_eval).
    """
    d = x0.shape[0]
    nv = d + 1
    X = np.empty((nv, d))
    F = np.empty(nv)
    for j in range(d):
        X[0, j] = x0[j]
    for v in range(1, nv):
        for j in range(d):
            X[v, j] = x0[j]
        X[v, v - 1] = x0[v - 1] + steps[v - 1]
    for v in range(nv):
        F[v] = _objective(mode, X[v], lo, hi, ln_r, times, y, fixed)
    n_eval = nv
    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(F)
        X = X[order].copy()
        F = F[order].copy()
        x_ok = True
        for j in range(d):
            scale = abs(X[0, j])
            if scale < 1.0:
                scale = 1.0
            for v in range(1, nv):
                if abs(X[v, j] - X[0, j]) > xtol_rel * scale:
                    x_ok = False
                    break
            if not x_ok:
                break
        fscale = abs(F[0])
        f_ok = (F[nv - 1] - F[0]) <= ftol_rel * fscale + ftol_abs
        if x_ok and f_ok and F[0] < INF:
            converged = True
            break
        cent = np.zeros(d)
        for v in range(nv - 1):
            for j in range(d):
                cent[j] += X[v, j]
        for j in range(d):
            cent[j] /= (nv - 1)
        xr = np.empty(d)
        for j in range(d):
            xr[j] = cent[j] + _RHO * (cent[j] - X[nv - 1, j])
        fr = _objective(mode, xr, lo, hi, ln_r, times, y, fixed)
        n_eval += 1
        if fr < F[0]:
            xe = np.empty(d)
            for j in range(d):
                xe[j] = cent[j] + _CHI * (xr[j] - cent[j])
            fe = _objective(mode, xe, lo, hi, ln_r, times, y, fixed)
            n_eval += 1
            if fe < fr:
                X[nv - 1] = xe
                F[nv - 1] = fe
            else:
                X[nv - 1] = xr
                F[nv - 1] = fr
        elif fr < F[nv - 2]:
            X[nv - 1] = xr
            F[nv - 1] = fr
        else:
            shrink = False
            xc = np.empty(d)
            if fr < F[nv - 1]:
                for j in range(d):
                    xc[j] = cent[j] + _GAMMA * (xr[j] - cent[j])
                fc = _objective(mode, xc, lo, hi, ln_r, times, y, fixed)
                n_eval += 1
                if fc <= fr:
                    X[nv - 1] = xc
                    F[nv - 1] = fc
                else:
                    shrink = True
            else:
                for j in range(d):
                    xc[j] = cent[j] - _GAMMA * (cent[j] - X[nv - 1, j])
                fc = _objective(mode, xc, lo, hi, ln_r, times, y, fixed)
                n_eval += 1
                if fc < F[nv - 1]:
                    X[nv - 1] = xc
                    F[nv - 1] = fc
                else:
                    shrink = True
            if shrink:
                for v in range(1, nv):
                    for j in range(d):
                        X[v, j] = X[0, j] + _SIGMA * (X[v, j] - X[0, j])
                    F[v] = _objective(mode, X[v], lo, hi, ln_r, times, y, fixed)
                n_eval += nv - 1
        it += 1
    best = 0
    for v in range(1, nv):
        if F[v] < F[best]:
            best = v
    out = np.empty(d)
    for j in range(d):
        out[j] = _fold(X[best, j], lo[j], hi[j])
    return out, F[best], converged, n_eval
