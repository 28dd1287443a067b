"""LPPLS model core: evaluation, basis functions, analytic derivatives,
damping and stylized-constraint qualification.

The reformulated model for the log-price is

    LPPLS(t) = A + B|tc-t|^m + C1|tc-t|^m cos(w ln|tc-t|)
                             + C2|tc-t|^m sin(w ln|tc-t|)

which is linear in (A, B, C1, C2) and nonlinear in (tc, m, w).  The |.|
extension gives the time-inversion-symmetric continuation past tc.  The
derivative vector is ordered (m, w, A, B, C1, C2) throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearParams",
    "NonlinearParams",
    "LpplsParams",
    "QualificationBounds",
    "QualificationFlags",
    "SingularityError",
    "PSI_NAMES",
    "SINGULARITY_GUARD_DAYS",
    "lppls_eval",
    "basis",
    "grad_psi",
    "gradient_matrix",
    "hess_psi",
    "hessian_tensor",
    "damping",
    "qualify",
]

PSI_NAMES = ("m", "omega", "A", "B", "C1", "C2")

# evaluations closer to the critical time than this are refused
SINGULARITY_GUARD_DAYS = 1e-9


class SingularityError(ValueError):
    """Evaluation requested at (or too close to) the critical time."""


@dataclass(frozen=True)
class LinearParams:
    a: float
    b: float
    c1: float
    c2: float

    @property
    def c(self) -> float:
        """Oscillation amplitude |C| = sqrt(C1^2 + C2^2)."""
        return math.hypot(self.c1, self.c2)

    @property
    def phi(self) -> float:
        """Oscillation phase, atan2(C2, C1)."""
        return math.atan2(self.c2, self.c1)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c1, self.c2])


@dataclass(frozen=True)
class NonlinearParams:
    tc: float
    m: float
    omega: float

    def __post_init__(self):
        if not (self.m > 0 and self.omega > 0):
            raise ValueError("require m > 0 and omega > 0")


@dataclass(frozen=True)
class LpplsParams:
    nonlinear: NonlinearParams
    linear: LinearParams
    s: float  # residual variance

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("residual variance must be >= 0")

    @property
    def damping(self) -> float:
        return damping(self.nonlinear.m, self.linear.b, self.nonlinear.omega,
                       self.linear.c1, self.linear.c2)


def _radius(t, tc):
    r = np.abs(tc - np.asarray(t, dtype=float))
    if np.any(r < SINGULARITY_GUARD_DAYS):
        raise SingularityError(f"|tc - t| < {SINGULARITY_GUARD_DAYS} days")
    return r


def basis(t, tc: float, m: float, omega: float):
    """Basis triple (f, g, h) = (|tc-t|^m, f cos(w ln|tc-t|), f sin(w ln|tc-t|))."""
    r = _radius(t, tc)
    ln_r = np.log(r)
    f = np.exp(m * ln_r)
    wl = omega * ln_r
    return f, f * np.cos(wl), f * np.sin(wl)


def lppls_eval(t, nonlinear: NonlinearParams, linear: LinearParams):
    """Model log-price at time(s) t.  Raises SingularityError at t = tc."""
    f, g, h = basis(t, nonlinear.tc, nonlinear.m, nonlinear.omega)
    return linear.a + linear.b * f + linear.c1 * g + linear.c2 * h


def lppls_eval_psi(t, tc: float, psi: np.ndarray):
    """Evaluate from a packed (m, w, A, B, C1, C2) vector at fixed tc."""
    m, w, a, b, c1, c2 = psi
    f, g, h = basis(t, tc, m, w)
    return a + b * f + c1 * g + c2 * h


def gradient_matrix(t, tc: float, psi: np.ndarray) -> np.ndarray:
    """n x 6 matrix of first derivatives wrt (m, w, A, B, C1, C2).

    Rows follow the analytic forms: the m and w derivatives carry a common
    |tc-t|^m ln|tc-t| factor; derivatives wrt the linear parameters are the
    regressor columns themselves.
    """
    m, w, _, b, c1, c2 = psi
    r = _radius(t, tc)
    ln_r = np.log(r)
    f = np.exp(m * ln_r)
    wl = w * ln_r
    cos_wl = np.cos(wl)
    sin_wl = np.sin(wl)
    g = f * cos_wl
    h = f * sin_wl
    fl = f * ln_r
    out = np.empty(r.shape + (6,))
    out[..., 0] = fl * (b + c1 * cos_wl + c2 * sin_wl)
    out[..., 1] = fl * (-c1 * sin_wl + c2 * cos_wl)
    out[..., 2] = 1.0
    out[..., 3] = f
    out[..., 4] = g
    out[..., 5] = h
    return out


def grad_psi(t, params: LpplsParams) -> np.ndarray:
    """Gradient of LPPLS wrt (m, w, A, B, C1, C2) at time(s) t."""
    nl, lin = params.nonlinear, params.linear
    psi = np.array([nl.m, nl.omega, lin.a, lin.b, lin.c1, lin.c2])
    return gradient_matrix(t, nl.tc, psi)


def hessian_tensor(t, tc: float, psi: np.ndarray) -> np.ndarray:
    """n x 6 x 6 symmetric second-derivative tensor wrt (m, w, A, B, C1, C2).

    All second derivatives among the linear parameters vanish, as do the
    mixed (m,A), (w,A) and (w,B) entries.
    """
    m, w, _, b, c1, c2 = psi
    r = _radius(t, tc)
    ln_r = np.log(r)
    f = np.exp(m * ln_r)
    wl = w * ln_r
    cos_wl = np.cos(wl)
    sin_wl = np.sin(wl)
    fl = f * ln_r
    fl2 = fl * ln_r
    out = np.zeros(r.shape + (6, 6))
    mm = fl2 * (b + c1 * cos_wl + c2 * sin_wl)
    mw = fl2 * (-c1 * sin_wl + c2 * cos_wl)
    mB = fl
    mC1 = fl * cos_wl
    mC2 = fl * sin_wl
    ww = -fl2 * (c1 * cos_wl + c2 * sin_wl)
    wC1 = -fl * sin_wl
    wC2 = fl * cos_wl
    out[..., 0, 0] = mm
    out[..., 0, 1] = out[..., 1, 0] = mw
    out[..., 0, 3] = out[..., 3, 0] = mB
    out[..., 0, 4] = out[..., 4, 0] = mC1
    out[..., 0, 5] = out[..., 5, 0] = mC2
    out[..., 1, 1] = ww
    out[..., 1, 4] = out[..., 4, 1] = wC1
    out[..., 1, 5] = out[..., 5, 1] = wC2
    return out


def hess_psi(t, params: LpplsParams) -> np.ndarray:
    nl, lin = params.nonlinear, params.linear
    psi = np.array([nl.m, nl.omega, lin.a, lin.b, lin.c1, lin.c2])
    return hessian_tensor(t, nl.tc, psi)


def damping(m: float, b: float, omega: float, c1: float, c2: float) -> float:
    """Damping D = m|B| / (w |C|); infinite when the oscillation amplitude is 0.

    D = 0 when m = 0; the infinite sentinel counts as passing the D filter.
    """
    if omega <= 0:
        raise ValueError("require omega > 0")
    c = math.hypot(c1, c2)
    num = m * abs(b)
    if c == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / (omega * c)


@dataclass(frozen=True)
class QualificationBounds:
    """Stylized LPPLS constraint set used for fit filtering."""

    m_min: float = 0.1
    m_max: float = 0.9
    omega_min: float = 6.0
    omega_max: float = 13.0
    d_min: float = 0.8


DEFAULT_BOUNDS = QualificationBounds()


@dataclass(frozen=True)
class QualificationFlags:
    m_ok: bool
    omega_ok: bool
    b_ok: bool
    d_ok: bool
    mode: str  # "strict" | "confidence_aware"

    @property
    def passed(self) -> bool:
        return self.m_ok and self.omega_ok and self.b_ok and self.d_ok


def _overlaps(lo: float, hi: float, lo2: float, hi2: float) -> bool:
    return lo <= hi2 and lo2 <= hi


def qualify(params: LpplsParams, intervals: dict | None = None,
            mode: str = "strict",
            bounds: QualificationBounds = DEFAULT_BOUNDS) -> QualificationFlags:
    """Check the stylized constraints on a fit.

    strict            point estimates must fall inside the allowed ranges
    confidence_aware  a constraint passes when the parameter's likelihood
                      interval overlaps the allowed range; requires
                      ``intervals`` with keys 'm', 'omega', 'damping' mapping
                      to objects with .center and .half_width.  B keeps its
                      point-estimate test (no interval is defined for it).
    """
    m = params.nonlinear.m
    w = params.nonlinear.omega
    b = params.linear.b
    d = params.damping
    b_ok = b < 0.0
    if mode == "strict":
        return QualificationFlags(
            m_ok=bounds.m_min <= m <= bounds.m_max,
            omega_ok=bounds.omega_min <= w <= bounds.omega_max,
            b_ok=b_ok,
            d_ok=d >= bounds.d_min,
            mode=mode,
        )
    if mode != "confidence_aware":
        raise ValueError(f"unknown qualification mode {mode!r}")
    if intervals is None:
        raise ValueError("confidence_aware qualification requires intervals")
    try:
        im, iw, idmp = intervals["m"], intervals["omega"], intervals["damping"]
    except KeyError as exc:
        raise ValueError(f"missing interval for {exc.args[0]!r}") from None
    return QualificationFlags(
        m_ok=_overlaps(im.center - im.half_width, im.center + im.half_width,
                       bounds.m_min, bounds.m_max),
        omega_ok=_overlaps(iw.center - iw.half_width, iw.center + iw.half_width,
                           bounds.omega_min, bounds.omega_max),
        b_ok=b_ok,
        d_ok=(idmp.center + idmp.half_width) >= bounds.d_min or math.isinf(d),
        mode=mode,
    )
