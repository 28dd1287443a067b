"""LPPLS bubble-model calibration with rigorous likelihood inference.

The package calibrates the log-periodic power law singularity model on
daily log-prices and infers the critical time through profile and modified
profile likelihoods, with likelihood intervals for the critical time, the
nonlinear nuisance parameters and the damping ratio, plus a multi-scale
surface across calibration-window sizes.

Modules
-------
series      CSV ingestion, calendar-day time axis, windows, gap filling
model       LPPLS evaluation, analytic derivatives, damping, qualification
calibrate   exact linear subordination, simplex multistart, F2 profiles
likelihood  profile and modified profile likelihood, Fisher blocks
intervals   likelihood intervals, nuisance profiles, quadratic widths
multiscale  window-size x critical-time likelihood surfaces
synthetic   seeded LPPLS-plus-noise generator
cli         command-line driver (fit / profile / multiscale / synth)
"""

__version__ = "0.1.0"

from .calibrate import (
    DegenerateDesignError,
    FitResult,
    ProfilePoint,
    default_tc_grid,
    full_mle,
    minimize_f1,
    profile_f2,
    solve_linear,
)
from .intervals import (
    LikelihoodInterval,
    NuisanceInterval,
    approx_nuisance_interval,
    damping_interval,
    likelihood_interval,
    nuisance_profile,
)
from .likelihood import (
    FisherBlocks,
    LikelihoodCurve,
    fisher_blocks,
    modified_profile_likelihood,
    profile_likelihood,
    severini_sigma,
    sigma2_mle,
    sigma2_unbiased,
)
from .model import (
    LinearParams,
    LpplsParams,
    NonlinearParams,
    QualificationFlags,
    SingularityError,
    basis,
    damping,
    grad_psi,
    hess_psi,
    lppls_eval,
    qualify,
)
from .multiscale import MultiscaleSurface, contour_export, qualify_surface, scan
from .series import PriceSeries, Window, fill_gaps, load_csv, window
from .synthetic import GeneratorSpec, default_paper_spec, generate

__all__ = [name for name in dir() if not name.startswith("_")]
