"""Likelihood intervals for the critical time and the nuisance parameters.

Interval endpoints come from thresholding a relative-likelihood curve at a
cutoff, with linear interpolation between the bracketing grid points; grid
resolution is the accuracy control.  For m, w and the damping ratio there
are also quadratic (Fisher-information) approximations whose half-width is
sqrt(-2 ln c [I^-1]_jj).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .calibrate import minimize_1d, minimize_f1
from .likelihood import (
    FLAG_DEGENERATE,
    FLAG_NO_CONVERGENCE,
    FLAG_NOT_PD,
    FLAG_PERFECT_FIT,
    FLAG_SINGULAR_CROSS,
    FisherBlocks,
    LikelihoodCurve,
    N_FULL_PARAMS,
    N_PSI,
    _chol_logdet,
    _relative,
)
from .series import PriceSeries

__all__ = [
    "LikelihoodInterval",
    "NuisanceInterval",
    "EmptyIntervalError",
    "likelihood_interval",
    "threshold_segments",
    "nuisance_profile",
    "approx_nuisance_interval",
    "damping_interval",
    "default_nuisance_grid",
    "interval_to_json",
]

DEFAULT_CUTOFF = 0.05
CONTOUR_CUTOFFS = (0.05, 0.5, 0.95)

# nuisance-profile grids
M_GRID = (0.05, 1.5, 0.01)
OMEGA_GRID = (2.0, 20.0, 0.05)


class EmptyIntervalError(ValueError):
    pass


@dataclass(frozen=True)
class LikelihoodInterval:
    cutoff: float
    segments: tuple[tuple[float, float], ...]
    boundary_touched: bool

    def contains(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.segments)

    @property
    def total_width(self) -> float:
        return sum(hi - lo for lo, hi in self.segments)


@dataclass(frozen=True)
class NuisanceInterval:
    parameter: str    # "m" | "omega" | "damping"
    center: float
    half_width: float

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width


def threshold_segments(grid: np.ndarray, rel: np.ndarray, cutoff: float):
    """Maximal runs with rel > cutoff; endpoints interpolated linearly.

    NaN values (flagged points) never belong to a segment and block the
    endpoint interpolation on their side.  Returns (segments, boundary),
    boundary True when a segment endpoint is a grid edge.
    """
    grid = np.asarray(grid, dtype=float)
    rel = np.asarray(rel, dtype=float)
    above = np.zeros(len(grid), dtype=bool)
    finite = np.isfinite(rel)
    above[finite] = rel[finite] > cutoff
    segments: list[tuple[float, float]] = []
    boundary = False
    i = 0
    k = len(grid)
    while i < k:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < k and above[j + 1]:
            j += 1
        if i == 0:
            lo = grid[0]
            boundary = True
        elif finite[i - 1]:
            lo = grid[i - 1] + (cutoff - rel[i - 1]) * (
                grid[i] - grid[i - 1]) / (rel[i] - rel[i - 1])
        else:
            lo = grid[i]
        if j == k - 1:
            hi = grid[k - 1]
            boundary = True
        elif finite[j + 1]:
            hi = grid[j] + (cutoff - rel[j]) * (
                grid[j + 1] - grid[j]) / (rel[j + 1] - rel[j])
        else:
            hi = grid[j]
        segments.append((float(lo), float(hi)))
        i = j + 1
    return tuple(segments), boundary


def likelihood_interval(curve: LikelihoodCurve, which: str = "lm",
                        cutoff: float = DEFAULT_CUTOFF) -> LikelihoodInterval:
    """Likelihood interval from a relative curve at the given cutoff."""
    if not 0.0 < cutoff < 1.0:
        raise ValueError("cutoff must be in (0, 1)")
    if which == "lp":
        rel, valid = curve.rel_lp, curve.lp_valid()
    elif which == "lm":
        rel, valid = curve.rel_lm, curve.lm_valid()
    else:
        raise ValueError(f"unknown curve selector {which!r}")
    if valid.sum() < 3:
        raise ValueError("need at least 3 valid curve points")
    segments, boundary = threshold_segments(curve.grid, rel, cutoff)
    if not segments:
        raise EmptyIntervalError(
            "no point above the cutoff; the curve maximum must be flagged")
    return LikelihoodInterval(cutoff=cutoff, segments=segments,
                              boundary_touched=boundary)


def default_nuisance_grid(which: str) -> np.ndarray:
    lo, hi, step = M_GRID if which == "m" else OMEGA_GRID
    return np.arange(lo, hi + 0.5 * step, step)


def nuisance_profile(series: PriceSeries, tc: float, which: str,
                     grid: np.ndarray | None = None) -> LikelihoodCurve:
    """Profile and modified profile likelihood of m or w at a fixed tc.

    At each grid value of the target parameter the remaining five model
    parameters are re-estimated (simplex over the other nonlinear one plus
    the exact linear solve).  The modified curve uses the reduced gradient
    and curvature matrices with the target's column and row removed, and the
    reduced-model MLE at this tc as the reference point.
    """
    if which not in ("m", "omega"):
        raise ValueError(f"unknown nuisance parameter {which!r}")
    if grid is None:
        grid = default_nuisance_grid(which)
    grid = np.asarray(grid, dtype=float)
    n = len(series)
    t = series.times
    y = series.log_prices
    drop = 0 if which == "m" else 1
    keep = [j for j in range(N_PSI) if j != drop]

    ref = minimize_f1(series, tc)
    if ref.degenerate:
        raise ValueError("reference fit at this tc is degenerate")
    X_ref = model.gradient_matrix(t, tc, ref.psi())[:, keep]

    k = len(grid)
    f2 = np.full(k, np.nan)
    log_lp = np.full(k, np.nan)
    log_lm = np.full(k, np.nan)
    flags = np.zeros(k, dtype=np.uint16)
    m_hat = np.full(k, np.nan)
    omega_hat = np.full(k, np.nan)
    warm: float | None = None
    for i, v in enumerate(grid):
        starts = (4.0, 7.0, 10.0, 13.0, 17.0) if which == "m" else (0.2, 0.5, 0.8)
        if warm is not None:
            starts = starts + (warm,)
        pt = minimize_1d(series, tc, which, float(v), starts=starts)
        if pt.degenerate:
            flags[i] |= FLAG_DEGENERATE
            continue
        if not pt.converged:
            flags[i] |= FLAG_NO_CONVERGENCE
        warm = pt.omega_hat if which == "m" else pt.m_hat
        f2[i] = pt.f2
        m_hat[i] = pt.m_hat
        omega_hat[i] = pt.omega_hat
        if pt.f2 == 0.0:
            flags[i] |= FLAG_PERFECT_FIT
            log_lp[i] = np.inf
            log_lm[i] = np.inf
            continue
        log_lp[i] = -0.5 * n * np.log(pt.f2)
        psi = pt.psi()
        X_red = model.gradient_matrix(t, tc, psi)[:, keep]
        resid = y - model.lppls_eval_psi(t, tc, psi)
        hess = model.hessian_tensor(t, tc, psi)
        h_full = np.einsum("k,kij->ij", resid, hess)
        h_red = h_full[np.ix_(keep, keep)]
        curv = X_red.T @ X_red - h_red
        logdet_curv, ok = _chol_logdet(curv)
        if not ok:
            flags[i] |= FLAG_NOT_PD
            continue
        cross = X_red.T @ X_ref
        sign, logabs = np.linalg.slogdet(cross)
        if sign == 0:
            flags[i] |= FLAG_SINGULAR_CROSS
            continue
        p_red = N_PSI - 1
        log_lm[i] = (0.5 * logdet_curv - logabs
                     - 0.5 * (n - p_red - 2) * np.log(pt.s_hat))
    lp_valid = (flags & FLAG_DEGENERATE) == 0
    lm_valid = (flags & (FLAG_DEGENERATE | FLAG_NOT_PD | FLAG_SINGULAR_CROSS)) == 0
    curve = LikelihoodCurve(
        parameter=which, grid=grid, f2=f2, log_lp=log_lp, log_lm=log_lm,
        rel_lp=_relative(log_lp, lp_valid), rel_lm=_relative(log_lm, lm_valid),
        flags=flags, n=n, m_hat=m_hat, omega_hat=omega_hat,
    )
    return curve


def _invert_info(info: np.ndarray) -> np.ndarray:
    """Inverse of an information block, with the condition measured on the
    diagonally equilibrated matrix so that parameter scale differences do
    not masquerade as singularity."""
    diag = np.diag(info)
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise np.linalg.LinAlgError("information has a non-positive diagonal")
    scale = np.sqrt(diag)
    eq = info / np.outer(scale, scale)
    evals, vecs = np.linalg.eigh(eq)
    if evals[0] <= 0:
        raise np.linalg.LinAlgError(
            f"information not positive definite (min eigenvalue {evals[0]:.3e})")
    cond = evals[-1] / evals[0]
    if cond > 1e14:
        raise np.linalg.LinAlgError(
            f"information ill-conditioned (cond {cond:.3e})")
    inv_eq = (vecs / evals) @ vecs.T
    return inv_eq / np.outer(scale, scale)


def approx_nuisance_interval(fisher: FisherBlocks, which: str,
                             cutoff: float = DEFAULT_CUTOFF) -> NuisanceInterval:
    """Quadratic-approximation likelihood interval for m or w at fixed tc.

    Half-width sqrt(-2 ln c [I^-1]_jj): the profile curvature is the
    inverse of the marginal inverse-information entry, which is what makes
    the nuisance estimation cost show up in the width.  The variance block
    of the full information is diagonal against the others, so the marginal
    entries come exactly from the 6x6 model-parameter block.
    """
    if which == "m":
        j = 0
    elif which == "omega":
        j = 1
    else:
        raise ValueError(f"unknown nuisance parameter {which!r}")
    if not 0.0 < cutoff < 1.0:
        raise ValueError("cutoff must be in (0, 1)")
    inv = _invert_info(fisher.info_psi())
    half = math.sqrt(-2.0 * math.log(cutoff) * inv[j, j])
    return NuisanceInterval(parameter=which, center=float(fisher.psi[j]),
                            half_width=half)


def _damping_jacobian(psi: np.ndarray) -> np.ndarray:
    """Jacobian of (m, w, A, B, C1, C2, s) wrt (D, w, A, B, C1, C2, s)."""
    m, w, _, b, c1, c2 = psi
    c = math.hypot(c1, c2)
    if b == 0.0 or c == 0.0:
        raise ValueError("damping transform undefined at B = 0 or |C| = 0")
    d = model.damping(m, b, w, c1, c2)
    J = np.eye(N_FULL_PARAMS)
    J[0, 0] = w * c / abs(b)
    J[0, 1] = d * c / abs(b)
    J[0, 2] = 0.0
    J[0, 3] = -d * w * c / (b * abs(b))
    J[0, 4] = d * w * c1 / (abs(b) * c)
    J[0, 5] = d * w * c2 / (abs(b) * c)
    J[0, 6] = 0.0
    return J


def damping_interval(fisher: FisherBlocks,
                     cutoff: float = DEFAULT_CUTOFF) -> NuisanceInterval:
    """Likelihood interval for D = m|B|/(w|C|) via the change-of-variable
    Jacobian on the observed information.

    The Jacobian leaves the variance coordinate alone, so the transformed
    information keeps its block structure and the damping entry of the
    inverse comes from the 6x6 model-parameter block.
    """
    if not 0.0 < cutoff < 1.0:
        raise ValueError("cutoff must be in (0, 1)")
    J = _damping_jacobian(fisher.psi)[:N_PSI, :N_PSI]
    info_zeta = J.T @ fisher.info_psi() @ J
    inv = _invert_info(info_zeta)
    half = math.sqrt(-2.0 * math.log(cutoff) * inv[0, 0])
    psi = fisher.psi
    center = model.damping(psi[0], psi[3], psi[1], psi[4], psi[5])
    return NuisanceInterval(parameter="damping", center=center, half_width=half)


def interval_to_json(parameter: str, interval: LikelihoodInterval) -> dict:
    return {
        "parameter": parameter,
        "cutoff": interval.cutoff,
        "segments": [[lo, hi] for lo, hi in interval.segments],
        "boundary_touched": interval.boundary_touched,
    }
