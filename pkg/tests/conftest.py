from datetime import timedelta

import numpy as np
import pytest

import lpplslik as lk


@pytest.fixture(scope="session")
def paper_spec_clean():
    return lk.default_paper_spec(sigma0=0.0)


@pytest.fixture(scope="session")
def clean_series(paper_spec_clean):
    return lk.generate(paper_spec_clean)


@pytest.fixture(scope="session")
def noisy_series():
    return lk.generate(lk.default_paper_spec(sigma0=0.03, seed=1))


@pytest.fixture(scope="session")
def clean_window(paper_spec_clean, clean_series):
    """300-day window ending 39 days before the true critical time."""
    t2 = paper_spec_clean.tc0 - timedelta(days=39)
    return lk.window(clean_series, t2 - timedelta(days=300), t2)


@pytest.fixture(scope="session")
def noisy_window(paper_spec_clean, noisy_series):
    t2 = paper_spec_clean.tc0 - timedelta(days=39)
    return lk.window(noisy_series, t2 - timedelta(days=300), t2)


@pytest.fixture(scope="session")
def t2_time(paper_spec_clean, clean_series):
    return clean_series.time_of(paper_spec_clean.tc0 - timedelta(days=39))


@pytest.fixture(scope="session")
def true_tc_time(paper_spec_clean, clean_series):
    return clean_series.time_of(paper_spec_clean.tc0)


@pytest.fixture(scope="session")
def true_psi(paper_spec_clean):
    sp = paper_spec_clean
    return np.array([sp.m0, sp.omega0, sp.a0, sp.b0, sp.c1, sp.c2])


@pytest.fixture(scope="session")
def noisy_profile(noisy_window, t2_time):
    """Shared default-grid profile, MLE and modified curve on noisy data."""
    grid = lk.default_tc_grid(t2_time)
    points = lk.profile_f2(noisy_window, grid)
    mle = lk.full_mle(noisy_window, grid, points=points)
    curve = lk.modified_profile_likelihood(noisy_window, points, mle)
    return points, mle, curve
