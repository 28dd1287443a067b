import dataclasses
from datetime import date, timedelta

import numpy as np
import pytest

import lpplslik as lk
from lpplslik import calibrate, synthetic
from lpplslik.model import LinearParams, NonlinearParams, lppls_eval


def test_default_spec_values():
    spec = lk.default_paper_spec()
    assert spec.tc0 == date(1975, 2, 9)
    assert (spec.m0, spec.omega0, spec.phi0) == (0.8, 9.0, 0.0)
    assert (spec.a0, spec.b0, spec.c0, spec.sigma0) == (8.0, -0.015, 0.0015, 0.03)
    assert spec.c1 == 0.0015 and spec.c2 == 0.0
    assert spec.d0 == pytest.approx(8.0 / 9.0, rel=1e-14)
    assert spec.start == spec.tc0 - timedelta(days=800)


def test_noiseless_value_one_day_before_tc():
    # tc0 on a Tuesday so the Monday before is sampled
    tc0 = date(1975, 2, 11)
    spec = dataclasses.replace(lk.default_paper_spec(sigma0=0.0), tc0=tc0,
                               start=tc0 - timedelta(days=400),
                               end=tc0 + timedelta(days=10))
    with pytest.warns(UserWarning):  # tc0 itself falls on a sampled weekday
        s = synthetic.generate(spec)
    i = s.dates.index(tc0 - timedelta(days=1))
    assert s.log_prices[i] == pytest.approx(7.9865, abs=1e-12)


def test_seed_determinism():
    a = synthetic.generate(lk.default_paper_spec(sigma0=0.03, seed=11))
    b = synthetic.generate(lk.default_paper_spec(sigma0=0.03, seed=11))
    c = synthetic.generate(lk.default_paper_spec(sigma0=0.03, seed=12))
    assert a.dates == b.dates
    assert np.array_equal(a.log_prices, b.log_prices)
    assert not np.array_equal(a.log_prices, c.log_prices)


def test_business_day_calendar():
    s = synthetic.generate(lk.default_paper_spec(sigma0=0.0))
    assert all(d.weekday() < 5 for d in s.dates)
    # calendar-day axis still counts weekends
    fri_to_mon = [s.times[i + 1] - s.times[i] for i in range(len(s) - 1)
                  if s.dates[i].weekday() == 4]
    assert set(fri_to_mon) == {3.0}


def test_tc0_sample_date_skipped():
    tc0 = date(1975, 2, 12)  # a Wednesday inside the span
    spec = dataclasses.replace(lk.default_paper_spec(sigma0=0.0), tc0=tc0,
                               start=tc0 - timedelta(days=200),
                               end=tc0 + timedelta(days=20))
    with pytest.warns(UserWarning, match="skipped"):
        s = synthetic.generate(spec)
    assert tc0 not in s.dates


def test_noise_variance_monte_carlo():
    # sample variance of (noisy - clean) over ~10k points within 3 SE
    tc0 = date(1975, 2, 9)
    long = dataclasses.replace(lk.default_paper_spec(sigma0=0.03, seed=5),
                               start=tc0 - timedelta(days=14200))
    noisy = synthetic.generate(long)
    clean = synthetic.generate(dataclasses.replace(long, sigma0=0.0))
    eps = noisy.log_prices - clean.log_prices
    n = len(eps)
    assert n >= 10000
    var = eps.var()
    se = 0.03 ** 2 * np.sqrt(2.0 / n)
    assert abs(var - 0.03 ** 2) <= 3 * se


def test_noiseless_exact_amplitude_recovery(clean_window, true_tc_time,
                                            paper_spec_clean):
    sp = paper_spec_clean
    lin, sse, _ = calibrate.solve_linear(clean_window, true_tc_time,
                                         sp.m0, sp.omega0)
    assert sse < 1e-18 * len(clean_window)
    assert lin.a == pytest.approx(sp.a0, abs=1e-9)


def test_generated_equals_model_plus_noise():
    spec = lk.default_paper_spec(sigma0=0.02, seed=9)
    s = synthetic.generate(spec)
    nl = NonlinearParams(tc=s.time_of(spec.tc0), m=spec.m0, omega=spec.omega0)
    lin = LinearParams(a=spec.a0, b=spec.b0, c1=spec.c1, c2=spec.c2)
    clean = lppls_eval(s.times, nl, lin)
    rng = np.random.default_rng(spec.seed)
    eps = rng.standard_normal(len(s))
    assert np.array_equal(s.log_prices, clean + spec.sigma0 * eps)


def test_spec_json_records_rng():
    meta = synthetic.spec_to_json(lk.default_paper_spec())
    assert meta["rng"] == "numpy.random.PCG64"
    assert meta["tc0"] == "1975-02-09"
    assert meta["d0"] == pytest.approx(8.0 / 9.0)


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        lk.default_paper_spec(sigma0=-0.1)
    tc0 = date(1975, 2, 9)
    with pytest.raises(ValueError):
        dataclasses.replace(lk.default_paper_spec(), start=tc0,
                            end=tc0 - timedelta(days=1))
