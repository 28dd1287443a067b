"""Normal likelihood machinery for the calibrated model.

The profile log-likelihood of the critical time is a monotone transform of
the profile cost, log Lp = -(n/2) ln F2 up to an additive constant.  The
modified profile likelihood multiplies in a curvature penalty and a
score-covariance Jacobian surrogate:

    log Lm(tc) = 1/2 logdet(X'X - H) - log|det X'(mle) X(tc)|
                 - (n - p - 2)/2 * ln s_tc,      p = 6

with X the n x 6 matrix of model gradients, H the residual-weighted sum of
model Hessians and s_tc = F2(tc)/n.  Everything is computed and compared in
log space; relative curves are exponentiated only at the end.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import model
from .calibrate import FitResult, ProfilePoint
from .series import PriceSeries

__all__ = [
    "N_PSI",
    "N_FULL_PARAMS",
    "FLAG_NO_CONVERGENCE",
    "FLAG_DEGENERATE",
    "FLAG_NOT_PD",
    "FLAG_SINGULAR_CROSS",
    "FLAG_PERFECT_FIT",
    "flag_names",
    "LikelihoodCurve",
    "FisherBlocks",
    "sigma2_mle",
    "sigma2_unbiased",
    "profile_likelihood",
    "fisher_blocks",
    "severini_sigma",
    "severini_full",
    "modified_profile_likelihood",
    "curve_to_csv",
]

N_PSI = 6           # dim(m, w, A, B, C1, C2)
N_FULL_PARAMS = 7   # the above plus tc (variance bias correction divisor)

FLAG_NO_CONVERGENCE = 1
FLAG_DEGENERATE = 2
FLAG_NOT_PD = 4
FLAG_SINGULAR_CROSS = 8
FLAG_PERFECT_FIT = 16

# flags that invalidate a point's lm value (lp survives everything except
# a degenerate design, where there is no cost value at all)
_LM_EXCLUDE = FLAG_DEGENERATE | FLAG_NOT_PD | FLAG_SINGULAR_CROSS
_LP_EXCLUDE = FLAG_DEGENERATE

_FLAG_LABELS = (
    (FLAG_NO_CONVERGENCE, "no_convergence"),
    (FLAG_DEGENERATE, "degenerate"),
    (FLAG_NOT_PD, "not_pd"),
    (FLAG_SINGULAR_CROSS, "singular_cross"),
    (FLAG_PERFECT_FIT, "perfect_fit"),
)


def flag_names(mask: int) -> str:
    return "|".join(label for bit, label in _FLAG_LABELS if mask & bit)


def sigma2_mle(sse: float, n: int) -> float:
    """Residual-variance MLE, SSE/n."""
    if n <= 0:
        raise ValueError("need n > 0")
    if sse < 0:
        raise ValueError("SSE must be >= 0")
    return sse / n


def sigma2_unbiased(sse: float, n: int) -> float:
    """Bias-corrected variance, SSE/(n - 7): one degree of freedom per
    estimated model parameter including tc."""
    if n <= N_FULL_PARAMS:
        raise ValueError(f"need n > {N_FULL_PARAMS}")
    if sse < 0:
        raise ValueError("SSE must be >= 0")
    return sse / (n - N_FULL_PARAMS)


@dataclass
class LikelihoodCurve:
    """Profile and modified-profile likelihood values over a parameter grid."""

    parameter: str            # "tc" | "m" | "omega"
    grid: np.ndarray
    f2: np.ndarray
    log_lp: np.ndarray
    log_lm: np.ndarray
    rel_lp: np.ndarray
    rel_lm: np.ndarray
    flags: np.ndarray         # uint16 bitmask per grid point
    n: int
    m_hat: np.ndarray = field(default=None, repr=False)
    omega_hat: np.ndarray = field(default=None, repr=False)

    def lp_valid(self) -> np.ndarray:
        return (self.flags & _LP_EXCLUDE) == 0

    def lm_valid(self) -> np.ndarray:
        return (self.flags & _LM_EXCLUDE) == 0


def _relative(log_values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Per-curve normalization: rel = L / max L over valid points."""
    rel = np.full(log_values.shape, np.nan)
    if not valid.any():
        return rel
    vals = log_values[valid]
    if np.isposinf(vals).any():
        # perfect fit: those points carry all the mass
        rel[valid] = np.where(np.isposinf(vals), 1.0, 0.0)
        return rel
    peak = vals.max()
    rel[valid] = np.exp(log_values[valid] - peak)
    return rel


def profile_likelihood(points: list[ProfilePoint], n: int) -> LikelihoodCurve:
    """Profile likelihood curve from a list of subordinated fits."""
    if not points:
        raise ValueError("empty profile")
    k = len(points)
    grid = np.array([p.tc for p in points])
    f2 = np.array([p.f2 for p in points])
    flags = np.zeros(k, dtype=np.uint16)
    log_lp = np.full(k, np.nan)
    for i, p in enumerate(points):
        if p.degenerate:
            flags[i] |= FLAG_DEGENERATE
            continue
        if not p.converged:
            flags[i] |= FLAG_NO_CONVERGENCE
        if p.f2 == 0.0:
            flags[i] |= FLAG_PERFECT_FIT
            log_lp[i] = np.inf
        else:
            log_lp[i] = -0.5 * n * np.log(p.f2)
    valid = (flags & _LP_EXCLUDE) == 0
    rel_lp = _relative(log_lp, valid)
    return LikelihoodCurve(
        parameter="tc", grid=grid, f2=f2, log_lp=log_lp,
        log_lm=np.full(k, np.nan), rel_lp=rel_lp, rel_lm=np.full(k, np.nan),
        flags=flags, n=n,
        m_hat=np.array([p.m_hat for p in points]),
        omega_hat=np.array([p.omega_hat for p in points]),
    )


def _chol_logdet(a: np.ndarray):
    """(logdet, ok) via Cholesky; ok False when not positive definite."""
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.nan, False
    diag = np.diag(L)
    if np.any(diag <= 0):
        return np.nan, False
    return 2.0 * float(np.sum(np.log(diag))), True


@dataclass(frozen=True)
class FisherBlocks:
    """Ingredients of the observed information at a constrained MLE.

    xtx is the gradient cross-product sum, h the residual-weighted Hessian
    sum; the psi block of the information is (xtx - h)/s_hat and the
    variance block contributes n/(2 s_hat^2).  log_det_i is the log
    determinant of the full 7x7 information (NaN when xtx - h is not
    positive definite).
    """

    xtx: np.ndarray
    h: np.ndarray
    s_hat: float
    n: int
    tc: float
    psi: np.ndarray
    log_det_i: float
    is_pd: bool

    def info_psi(self) -> np.ndarray:
        return (self.xtx - self.h) / self.s_hat

    def info_full(self) -> np.ndarray:
        out = np.zeros((N_FULL_PARAMS, N_FULL_PARAMS))
        out[:N_PSI, :N_PSI] = self.info_psi()
        out[N_PSI, N_PSI] = self.n / (2.0 * self.s_hat ** 2)
        return out


def fisher_blocks(series: PriceSeries, tc: float,
                  psi_hat_tc: np.ndarray) -> FisherBlocks:
    """Observed-information blocks at the subordinated MLE for a fixed tc."""
    psi = np.asarray(psi_hat_tc, dtype=float)
    t = series.times
    y = series.log_prices
    n = len(series)
    X = model.gradient_matrix(t, tc, psi)
    xtx = X.T @ X
    resid = y - model.lppls_eval_psi(t, tc, psi)
    hess = model.hessian_tensor(t, tc, psi)
    h = np.einsum("k,kij->ij", resid, hess)
    sse = float(resid @ resid)
    s_hat = sse / n
    if s_hat > 0:
        logdet_psi, ok = _chol_logdet((xtx - h) / s_hat)
        if ok:
            log_det_i = logdet_psi + np.log(n / (2.0 * s_hat ** 2))
        else:
            log_det_i = np.nan
    else:
        log_det_i, ok = np.nan, _chol_logdet(xtx - h)[1]
    return FisherBlocks(xtx=xtx, h=h, s_hat=s_hat, n=n, tc=tc, psi=psi,
                        log_det_i=log_det_i, is_pd=ok)


def severini_sigma(series: PriceSeries, tc: float, psi_hat_tc: np.ndarray,
                   tc_hat: float, psi_hat: np.ndarray) -> np.ndarray:
    """Score-covariance cross matrix sum_i grad_i(tc, psi_tc) grad_i(mle)^T.

    This is the determinant argument of the covariance block; the full
    covariance carries a 1/s factor on this block and n/(2 s^2) in the
    variance slot (see severini_full), with zero cross terms.
    """
    t = series.times
    X1 = model.gradient_matrix(t, tc, np.asarray(psi_hat_tc, dtype=float))
    X2 = model.gradient_matrix(t, tc_hat, np.asarray(psi_hat, dtype=float))
    return X1.T @ X2


def severini_full(cross: np.ndarray, s_hat: float, n: int) -> np.ndarray:
    """Full 7x7 score covariance from the cross block and the variance MLE."""
    out = np.zeros((N_FULL_PARAMS, N_FULL_PARAMS))
    out[:N_PSI, :N_PSI] = cross / s_hat
    out[N_PSI, N_PSI] = n / (2.0 * s_hat ** 2)
    return out


def modified_profile_likelihood(series: PriceSeries,
                                points: list[ProfilePoint],
                                mle: FitResult) -> LikelihoodCurve:
    """Modified profile likelihood over the profile's tc grid.

    Points whose curvature matrix is not positive definite or whose score
    cross matrix is singular are flagged and excluded from the relative
    curve; they are never clamped or interpolated over.
    """
    curve = profile_likelihood(points, mle.n)
    t = series.times
    n = mle.n
    X_mle = model.gradient_matrix(t, mle.params.nonlinear.tc, mle.psi())
    log_lm = np.full(len(points), np.nan)
    for i, p in enumerate(points):
        if curve.flags[i] & FLAG_DEGENERATE:
            continue
        psi = p.psi()
        blocks = fisher_blocks(series, p.tc, psi)
        if not blocks.is_pd:
            curve.flags[i] |= FLAG_NOT_PD
            continue
        logdet_curv, _ = _chol_logdet(blocks.xtx - blocks.h)
        cross = severini_sigma(series, p.tc, psi,
                               mle.params.nonlinear.tc, mle.psi())
        sign, logabs = np.linalg.slogdet(cross)
        if sign == 0:
            curve.flags[i] |= FLAG_SINGULAR_CROSS
            continue
        if p.f2 == 0.0:
            log_lm[i] = np.inf
            continue
        log_lm[i] = (0.5 * logdet_curv - logabs
                     - 0.5 * (n - N_PSI - 2) * np.log(p.s_hat))
    valid = (curve.flags & _LM_EXCLUDE) == 0
    if not valid.any():
        raise ValueError("every grid point flagged; no modified curve")
    curve.log_lm = log_lm
    curve.rel_lm = _relative(log_lm, valid)
    return curve


def curve_to_csv(curve: LikelihoodCurve, t2_time: float,
                 fh: io.TextIOBase | None = None) -> str:
    """Serialize a tc curve: tc_offset_days, f2, log_lp, log_lm, rel_lp,
    rel_lm, flag.  Returns the CSV text when no file handle is given."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tc_offset_days", "f2", "log_lp", "log_lm",
                "rel_lp", "rel_lm", "flag"])
    for i in range(len(curve.grid)):
        w.writerow([
            repr(float(curve.grid[i] - t2_time)),
            repr(float(curve.f2[i])),
            repr(float(curve.log_lp[i])),
            repr(float(curve.log_lm[i])),
            repr(float(curve.rel_lp[i])),
            repr(float(curve.rel_lm[i])),
            flag_names(int(curve.flags[i])),
        ])
    if fh is None:
        return buf.getvalue()
    return ""
