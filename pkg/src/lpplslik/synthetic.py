"""Synthetic LPPLS-plus-noise series for tests and Monte Carlo studies.

Log-price = LPPLS(t) + sigma * eps(t) with iid standard normal eps drawn
from a seeded PCG64 stream, sampled on business days over a calendar-day
axis (mirroring real daily-close ingestion).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .model import LinearParams, NonlinearParams, damping, lppls_eval
from .series import PriceSeries

__all__ = ["GeneratorSpec", "default_paper_spec", "generate", "spec_to_json"]

RNG_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class GeneratorSpec:
    """Ground truth for a synthetic bubble series."""

    tc0: date
    m0: float
    omega0: float
    phi0: float
    a0: float
    b0: float
    c0: float
    sigma0: float
    start: date
    end: date
    seed: int

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be >= 0")
        if self.start >= self.end:
            raise ValueError("require start < end")

    @property
    def c1(self) -> float:
        return self.c0 * float(np.cos(self.phi0))

    @property
    def c2(self) -> float:
        return self.c0 * float(np.sin(self.phi0))

    @property
    def d0(self) -> float:
        return damping(self.m0, self.b0, self.omega0, self.c1, self.c2)


def default_paper_spec(sigma0: float = 0.03, seed: int = 0,
                       start: date | None = None,
                       end: date | None = None) -> GeneratorSpec:
    """Stock synthetic-bubble truth: a low-damping bubble peaking early 1975.

    tc0 = 1975-02-09, m = 0.8, w = 9, phi = 0, A = 8, B = -0.015,
    C = 0.0015 (so D0 = 8/9 ~ 0.889), sigma defaulting to 0.03.  The span
    runs from 800 days before tc0 to 60 days after unless overridden.
    """
    tc0 = date(1975, 2, 9)
    return GeneratorSpec(
        tc0=tc0, m0=0.8, omega0=9.0, phi0=0.0,
        a0=8.0, b0=-0.015, c0=0.0015, sigma0=sigma0,
        start=start if start is not None else tc0 - timedelta(days=800),
        end=end if end is not None else tc0 + timedelta(days=60),
        seed=seed,
    )


def _business_days(start: date, end: date) -> list[date]:
    out = []
    d = start
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def generate(spec: GeneratorSpec) -> PriceSeries:
    """Sample the model plus Gaussian noise; deterministic for a fixed seed.

    A business day falling exactly on tc0 is skipped with a notice (the
    model is singular there).
    """
    dates = _business_days(spec.start, spec.end)
    if spec.tc0 in dates:
        warnings.warn(f"sample date {spec.tc0} equals the critical time; skipped",
                      stacklevel=2)
        dates = [d for d in dates if d != spec.tc0]
    if not dates:
        raise ValueError("empty sampling span")
    origin = dates[0]
    times = np.array([(d - origin).days for d in dates], dtype=float)
    nl = NonlinearParams(tc=float((spec.tc0 - origin).days), m=spec.m0,
                         omega=spec.omega0)
    lin = LinearParams(a=spec.a0, b=spec.b0, c1=spec.c1, c2=spec.c2)
    clean = lppls_eval(times, nl, lin)
    rng = np.random.default_rng(spec.seed)
    eps = rng.standard_normal(len(dates))
    log_prices = clean + spec.sigma0 * eps
    return PriceSeries(dates=tuple(dates), log_prices=log_prices, origin=origin)


def spec_to_json(spec: GeneratorSpec) -> dict:
    return {
        "tc0": spec.tc0.isoformat(),
        "m0": spec.m0,
        "omega0": spec.omega0,
        "phi0": spec.phi0,
        "a0": spec.a0,
        "b0": spec.b0,
        "c0": spec.c0,
        "c1": spec.c1,
        "c2": spec.c2,
        "d0": spec.d0,
        "sigma0": spec.sigma0,
        "start": spec.start.isoformat(),
        "end": spec.end.isoformat(),
        "seed": spec.seed,
        "rng": RNG_NAME,
        "calendar": "business-days (Mon-Fri) on a calendar-day axis",
    }
