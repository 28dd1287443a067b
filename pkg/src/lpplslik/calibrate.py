"""Subordinated least-squares calibration of the LPPLS model.

Three-stage structure: the four linear amplitudes are solved exactly from
the normal equations at fixed (tc, m, w); the cost F1(tc, m, w) is then
minimized over (m, w) by multistart Nelder-Mead at each fixed tc, giving
the profile cost F2(tc); the full MLE is the F2 minimizer over a tc grid,
refined by a final simplex polish over (tc, m, w) jointly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, model
from ._kernels import nelder_mead
from .model import LinearParams, LpplsParams, NonlinearParams
from .series import PriceSeries

__all__ = [
    "DegenerateDesignError",
    "FitResult",
    "ProfilePoint",
    "solve_linear",
    "minimize_f1",
    "profile_f2",
    "full_mle",
    "default_tc_grid",
    "DEFAULT_STARTS",
    "SEARCH_BOX_M",
    "SEARCH_BOX_OMEGA",
]

# multistart grid: one minimum along m, a few along omega is the typical
# landscape, so omega gets the denser coverage
DEFAULT_M_STARTS = (0.2, 0.5, 0.8)
DEFAULT_OMEGA_STARTS = (4.0, 7.0, 10.0, 13.0, 17.0)
DEFAULT_STARTS = tuple(
    (m, w) for m in DEFAULT_M_STARTS for w in DEFAULT_OMEGA_STARTS
)

# optimizer box, deliberately wider than the qualification bounds so that
# likelihood curves extend past the filter region; enforced by reflection
SEARCH_BOX_M = (0.01, 1.99)
SEARCH_BOX_OMEGA = (1.0, 50.0)

XTOL_REL = 1e-10
FTOL_REL = 1e-10
MAX_ITER = 1000
COND_LIMIT = 1e12


def _ftol_abs(y: np.ndarray) -> float:
    """Absolute cost-spread floor: the roundoff level of an SSE of this data.

    Near a perfect fit the SSE sits at its floating-point floor and relative
    spreads are pure noise; below this level only the simplex-size criterion
    is meaningful."""
    scale = max(1.0, float(np.max(np.abs(y))))
    return max(1e-30, y.size * (16.0 * np.finfo(float).eps * scale) ** 2)

_NM_STEP_M = 0.05
_NM_STEP_OMEGA = 0.5
_NM_STEP_TC = 2.0


class DegenerateDesignError(ValueError):
    """Normal matrix of the linear subproblem is numerically singular."""

    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(f"normal-matrix condition number {cond:.3e} exceeds "
                         f"{COND_LIMIT:.0e}")


@dataclass(frozen=True)
class ProfilePoint:
    """Subordinated MLE at one fixed critical time."""

    tc: float
    f2: float
    m_hat: float
    omega_hat: float
    linear: LinearParams
    s_hat: float
    converged: bool
    degenerate: bool
    n_starts: int
    condition_number: float

    @property
    def valid(self) -> bool:
        return not self.degenerate

    def psi(self) -> np.ndarray:
        """Packed (m, w, A, B, C1, C2) vector."""
        lin = self.linear
        return np.array([self.m_hat, self.omega_hat, lin.a, lin.b,
                         lin.c1, lin.c2])


@dataclass(frozen=True)
class FitResult:
    params: LpplsParams
    sse: float
    n: int
    converged: bool
    n_restarts_used: int
    condition_number: float
    boundary: bool  # F2 argmin sat on the tc grid edge

    def psi(self) -> np.ndarray:
        nl, lin = self.params.nonlinear, self.params.linear
        return np.array([nl.m, nl.omega, lin.a, lin.b, lin.c1, lin.c2])


def solve_linear(series: PriceSeries, tc: float, m: float, omega: float):
    """Exact solution of the 4x4 normal equations at fixed (tc, m, w).

    Returns (LinearParams, sse, condition_number).  The condition number is
    taken on the column-equilibrated normal matrix, so it measures genuine
    regressor collinearity instead of column scale; values above 1e12 raise
    DegenerateDesignError (callers skip and flag such grid points).
    """
    y = series.log_prices
    t = series.times
    if len(y) < 5:
        raise ValueError("linear subordination needs n >= 5 observations")
    f, g, h = model.basis(t, tc, m, omega)
    X = np.column_stack([np.ones_like(f), f, g, h])
    G = X.T @ X
    rhs = X.T @ y
    scale = np.sqrt(np.diag(G))
    if not np.all(np.isfinite(scale)) or np.any(scale <= 0):
        raise DegenerateDesignError(cond=np.inf)
    Gs = G / np.outer(scale, scale)
    evals, vecs = np.linalg.eigh(Gs)
    if evals[0] <= 0.0:
        raise DegenerateDesignError(cond=np.inf)
    cond = float(evals[-1] / evals[0])
    if cond > COND_LIMIT:
        raise DegenerateDesignError(cond=cond)
    z = vecs @ ((vecs.T @ (rhs / scale)) / evals)
    coef = z / scale
    resid = y - X @ coef
    sse = float(resid @ resid)
    return LinearParams(*(float(c) for c in coef)), sse, cond


def _finalize_point(series: PriceSeries, tc: float, m: float, omega: float,
                    converged: bool, n_starts: int) -> ProfilePoint:
    n = len(series)
    try:
        linear, sse, cond = solve_linear(series, tc, m, omega)
    except DegenerateDesignError as exc:
        return ProfilePoint(tc=tc, f2=np.nan, m_hat=m, omega_hat=omega,
                            linear=LinearParams(np.nan, np.nan, np.nan, np.nan),
                            s_hat=np.nan, converged=False, degenerate=True,
                            n_starts=n_starts, condition_number=exc.cond)
    return ProfilePoint(tc=tc, f2=sse, m_hat=m, omega_hat=omega, linear=linear,
                        s_hat=sse / n, converged=bool(converged),
                        degenerate=False, n_starts=n_starts,
                        condition_number=cond)


def _ln_radius(series: PriceSeries, tc: float) -> np.ndarray:
    r = np.abs(tc - series.times)
    if np.any(r < model.SINGULARITY_GUARD_DAYS):
        raise model.SingularityError(
            f"tc = {tc} coincides with an observation time")
    return np.log(r)


_EMPTY = np.empty(0)


def minimize_f1(series: PriceSeries, tc: float,
                starts: tuple | None = None) -> ProfilePoint:
    """Minimize F1(tc, m, w) over (m, w) at fixed tc by multistart Nelder-Mead.

    Returns the best converged start's subordinated point; when every start
    exhausts its iteration budget the best effort is returned with the
    converged flag cleared.
    """
    ln_r = _ln_radius(series, tc)
    y = series.log_prices
    if starts is None:
        starts = DEFAULT_STARTS
    lo = np.array([SEARCH_BOX_M[0], SEARCH_BOX_OMEGA[0]])
    hi = np.array([SEARCH_BOX_M[1], SEARCH_BOX_OMEGA[1]])
    steps = np.array([_NM_STEP_M, _NM_STEP_OMEGA])
    best_x = None
    best_f = np.inf
    best_conv = False
    for m0, w0 in starts:
        x0 = np.array([float(m0), float(w0)])
        x, fval, conv, _ = nelder_mead(
            _kernels.MODE_F1, x0, steps, lo, hi, ln_r, _EMPTY, y, 0.0,
            XTOL_REL, FTOL_REL, _ftol_abs(y), MAX_ITER)
        if fval >= _kernels.INF:
            continue
        # a converged result always beats a non-converged one
        if (conv, -fval) > (best_conv, -best_f):
            best_x, best_f, best_conv = x, fval, conv
    if best_x is None:
        # every start degenerate: finalize at the first start for the flags
        m0, w0 = starts[0]
        return _finalize_point(series, tc, float(m0), float(w0),
                               converged=False, n_starts=len(starts))
    return _finalize_point(series, tc, float(best_x[0]), float(best_x[1]),
                           converged=best_conv, n_starts=len(starts))


def default_tc_grid(t2_time: float, min_offset: float = -50.0,
                    max_offset: float = 150.0, step: float = 1.0) -> np.ndarray:
    """tc grid around the analysis date, shifted half a day off the integer
    observation times to stay clear of the log singularity."""
    offsets = np.arange(min_offset, max_offset + 0.5 * step, step)
    return t2_time + offsets + 0.5


def profile_f2(series: PriceSeries, tc_grid: np.ndarray,
               starts: tuple | None = None,
               warm_start: bool = True) -> list[ProfilePoint]:
    """Profile cost F2 over a tc grid: one subordinated fit per grid value.

    With warm_start the previous grid point's (m, w) optimum joins the
    start set; the profile must not depend on this shortcut (verified on
    synthetic data), it only saves iterations.
    """
    base = DEFAULT_STARTS if starts is None else tuple(starts)
    points: list[ProfilePoint] = []
    prev: tuple[float, float] | None = None
    for tc in np.asarray(tc_grid, dtype=float):
        use = base
        if warm_start and prev is not None:
            use = base + (prev,)
        pt = minimize_f1(series, float(tc), starts=use)
        points.append(pt)
        if warm_start and pt.valid:
            prev = (pt.m_hat, pt.omega_hat)
    return points


def full_mle(series: PriceSeries, tc_grid: np.ndarray,
             starts: tuple | None = None,
             points: list[ProfilePoint] | None = None) -> FitResult:
    """Full MLE: F2 minimizer over the grid plus a joint (tc, m, w) polish.

    Pass precomputed ``points`` to reuse an existing profile.  The boundary
    flag marks an argmin on the grid edge, where the true optimum may lie
    outside the search range and interval inference is unreliable.
    """
    tc_grid = np.asarray(tc_grid, dtype=float)
    if points is None:
        points = profile_f2(series, tc_grid, starts=starts)
    valid = [(i, p) for i, p in enumerate(points) if p.valid]
    if not valid:
        raise DegenerateDesignError(cond=np.inf)
    i_best, best = min(valid, key=lambda ip: ip[1].f2)
    boundary = i_best == 0 or i_best == len(points) - 1
    n = len(series)
    lo = np.array([tc_grid.min(), SEARCH_BOX_M[0], SEARCH_BOX_OMEGA[0]])
    hi = np.array([tc_grid.max(), SEARCH_BOX_M[1], SEARCH_BOX_OMEGA[1]])
    steps = np.array([_NM_STEP_TC, _NM_STEP_M, _NM_STEP_OMEGA])
    x0 = np.array([best.tc, best.m_hat, best.omega_hat])
    x, fval, conv, _ = nelder_mead(
        _kernels.MODE_POLISH, x0, steps, lo, hi, _EMPTY, series.times,
        series.log_prices, 0.0, XTOL_REL, FTOL_REL,
        _ftol_abs(series.log_prices), MAX_ITER)
    tc_fit, m_fit, w_fit = float(x[0]), float(x[1]), float(x[2])
    converged = best.converged and conv
    if not np.isfinite(fval) or fval >= _kernels.INF or fval > best.f2:
        tc_fit, m_fit, w_fit = best.tc, best.m_hat, best.omega_hat
        converged = best.converged
    try:
        linear, sse, cond = solve_linear(series, tc_fit, m_fit, w_fit)
    except DegenerateDesignError:
        tc_fit, m_fit, w_fit = best.tc, best.m_hat, best.omega_hat
        linear, sse, cond = best.linear, best.f2, best.condition_number
        converged = best.converged
    params = LpplsParams(
        nonlinear=NonlinearParams(tc=tc_fit, m=m_fit, omega=w_fit),
        linear=linear,
        s=sse / n,
    )
    return FitResult(params=params, sse=sse, n=n, converged=bool(converged),
                     n_restarts_used=best.n_starts + 1,
                     condition_number=cond, boundary=bool(boundary))


def minimize_1d(series: PriceSeries, tc: float, which: str, fixed_value: float,
                starts: tuple | None = None):
    """Optimize the remaining nonlinear parameter with the other one pinned.

    which = 'm' pins m and searches w; which = 'omega' pins w and searches m.
    Returns (optimum, ProfilePoint-like finalized point).
    """
    ln_r = _ln_radius(series, tc)
    y = series.log_prices
    if which == "m":
        mode = _kernels.MODE_FIX_M
        box = SEARCH_BOX_OMEGA
        default = DEFAULT_OMEGA_STARTS
        step = _NM_STEP_OMEGA
    elif which == "omega":
        mode = _kernels.MODE_FIX_W
        box = SEARCH_BOX_M
        default = DEFAULT_M_STARTS
        step = _NM_STEP_M
    else:
        raise ValueError(f"unknown parameter {which!r}")
    if starts is None:
        starts = default
    lo = np.array([box[0]])
    hi = np.array([box[1]])
    steps = np.array([step])
    best_x, best_f, best_conv = None, np.inf, False
    for u0 in starts:
        x, fval, conv, _ = nelder_mead(
            mode, np.array([float(u0)]), steps, lo, hi, ln_r, _EMPTY, y,
            float(fixed_value), XTOL_REL, FTOL_REL, _ftol_abs(y), MAX_ITER)
        if fval >= _kernels.INF:
            continue
        if (conv, -fval) > (best_conv, -best_f):
            best_x, best_f, best_conv = x, fval, conv
    if best_x is None:
        u = float(starts[0])
    else:
        u = float(best_x[0])
    if which == "m":
        m_val, w_val = float(fixed_value), u
    else:
        m_val, w_val = u, float(fixed_value)
    return _finalize_point(series, tc, m_val, w_val, converged=best_conv,
                           n_starts=len(starts))
