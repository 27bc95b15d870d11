from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf import numerics as nx
from epiconf.errors import BracketError, DomainError


@pytest.mark.parametrize("f,a,b,exact", [
    (lambda x: x * x, 0.0, 3.0, 9.0),
    (lambda x: math.exp(-x), 0.0, math.inf, 1.0),
    (lambda x: math.exp(-0.5 * x * x), -math.inf, math.inf, math.sqrt(2 * math.pi)),
    (lambda x: abs(x - 0.3), 0.0, 1.0, 0.29),
])
def test_integrate_closed_forms(f, a, b, exact):
    assert nx.integrate(f, a, b, points=[0.3]) == pytest.approx(exact, rel=1e-9)


def test_integrate_rejects_empty_interval():
    with pytest.raises(DomainError):
        nx.integrate(lambda x: x, 1.0, 1.0)


def test_find_root_and_bracket_error():
    assert nx.find_root(lambda x: x ** 3 - 2, 0.0, 2.0) == pytest.approx(2 ** (1 / 3), abs=1e-10)
    assert nx.find_root(lambda x: x, 0.0, 1.0) == 0.0
    with pytest.raises(BracketError):
        nx.find_root(lambda x: x * x + 1, -1.0, 1.0)


def test_five_point_derivative_is_exact_for_quartics():
    f = lambda x: x ** 4 - 3 * x ** 2
    x = np.array([-1.0, 0.5, 2.0])
    assert np.allclose(nx.five_point_derivative(f, x, 0.1), 4 * x ** 3 - 6 * x, atol=1e-10)


@pytest.mark.parametrize("x", [0.3, 1.0, 4.5, 12.0])
def test_special_functions_against_mpmath(x):
    assert nx.log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-13)
    assert nx.digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-12)
    assert nx.trigamma(x) == pytest.approx(float(mpmath.polygamma(1, x)), rel=1e-12)
    assert nx.normal_cdf(x - 3) == pytest.approx(float(mpmath.ncdf(x - 3)), rel=1e-13)


@pytest.mark.parametrize("x,a,b", [(0.2, 1.0, 1.0), (0.7, 3.0, 2.0), (0.05, 0.5, 7.5)])
def test_reg_inc_beta_against_mpmath(x, a, b):
    exact = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert nx.reg_inc_beta(x, a, b) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("bad", [(-0.1, 1, 1), (0.5, 0, 1), (1.2, 1, 1)])
def test_reg_inc_beta_domain(bad):
    with pytest.raises(DomainError):
        nx.reg_inc_beta(*bad)


@pytest.mark.parametrize("x,df,nc", [(0.5, 1.0, 0.0), (3.0, 2.0, 1.5), (40.0, 5.0, 20.0),
                                     (150.0, 3.0, 60.0)])
def test_noncentral_chisq_series_against_mpmath_sum(x, df, nc):
    # independent oracle: the same Poisson mixture evaluated in extended precision
    mpmath.mp.dps = 30
    half = mpmath.mpf(nc) / 2
    cdf = mpmath.nsum(lambda j: mpmath.exp(-half) * half ** j / mpmath.factorial(j)
                      * mpmath.gammainc(df / 2 + j, 0, x / 2, regularized=True), [0, mpmath.inf])
    assert nx.noncentral_chisq_cdf(x, df, nc) == pytest.approx(float(cdf), rel=1e-10)
    assert nx.noncentral_chisq_sf(x, df, nc) == pytest.approx(float(1 - cdf), rel=1e-8, abs=1e-300)
    mpmath.mp.dps = 15


def test_noncentral_chisq_pdf_integrates_to_one():
    total = nx.integrate(lambda x: math.exp(float(nx.noncentral_chisq_logpdf(x, 3.0, 4.0))),
                         0.0, math.inf)
    assert total == pytest.approx(1.0, rel=1e-8)


def test_special_dispatch():
    assert nx.special("digamma", 1.0) == pytest.approx(-np.euler_gamma)
    with pytest.raises(DomainError):
        nx.special("no_such_function", 1.0)


def test_grid_density_validation():
    g = np.linspace(0, 1, 5)
    with pytest.raises(DomainError):
        nx.GridDensity(g, -np.ones(5))
    with pytest.raises(DomainError):
        nx.GridDensity(g[::-1], np.ones(5))
    with pytest.raises(DomainError):
        nx.GridDensity(g, 2 * np.ones(5), normalized=True)
    d = nx.GridDensity(g, np.ones(5)).normalize()
    assert d.integral() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        d.values[0] = 3.0


def test_from_log_handles_huge_offsets():
    g = np.linspace(-5, 5, 2001)
    d = nx.GridDensity.from_log(g, 1e4 - 0.5 * g ** 2)
    assert d.integral() == pytest.approx(1.0, abs=1e-12)
    assert d(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-4)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.001, 0.999), mu=st.floats(-3, 3), s=st.floats(0.2, 4))
def test_quantile_inverts_cdf(p, mu, s):
    g = np.linspace(mu - 10 * s, mu + 10 * s, 4001)
    F = nx.GridDensity.from_log(g, -0.5 * ((g - mu) / s) ** 2).cdf()
    q = F.quantile(p)
    assert F(q) == pytest.approx(p, abs=1e-9)
    assert q == pytest.approx(mu + s * float(nx.normal_quantile(p)), abs=2e-3 * s)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.05, 5), df=st.floats(1.0, 30.0))
def test_adaptive_grid_reaches_tail_ratio(scale, df):
    def logd(x):
        return -0.5 * (df + 1) * np.log1p((x / scale) ** 2 / df)
    g = nx.adaptive_grid(logd, 0.0, scale)
    assert np.all(np.diff(g) > 0)
    assert logd(g[[0, -1]]).max() < math.log(nx.DEFAULT_TAIL_RATIO) + 1e-6


def test_adaptive_grid_stops_at_boundary():
    g = nx.adaptive_grid(lambda x: -x, 1.0, 1.0, lower=0.0)
    assert g[0] > 0 and g[0] < 1e-6
