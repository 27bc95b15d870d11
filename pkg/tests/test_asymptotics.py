from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf import numerics as nx
from epiconf.asymptotics import (HinkleyQuantileTable, LikelihoodSummary, bn_conditional_density,
                                 gamma_summary, hinkley_cdf, hinkley_density, hinkley_normalizer,
                                 hinkley_normalizer_recursive, hinkley_quantile, hinkley_sf,
                                 pstar_conditional_pvalue, pstar_log_ratio, pstar_pivot_density,
                                 rstar, rstar_confidence, rstar_pvalue, score_pvalue)
from epiconf.errors import CapabilityError, DomainError
from epiconf.models import Dataset, get_model


# |a| <= sqrt(n) for any sample
@pytest.mark.parametrize("a,n", [(a, n) for n in (1, 2, 3, 5, 8) for a in (-1.5, -0.4, 0.0, 0.9, 2.2)
                                 if abs(a) <= math.sqrt(n)])
def test_hinkley_normalizer_matches_recursion(a, n):
    assert hinkley_normalizer(a, n) == pytest.approx(hinkley_normalizer_recursive(a, n), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 7), frac=st.floats(-0.95, 0.95), w=st.floats(0.05, 6.0))
def test_hinkley_cdf_and_sf_are_complementary(n, frac, w):
    a = frac * math.sqrt(n)
    assert float(hinkley_cdf(w, a, n)) + float(hinkley_sf(w, a, n)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("a,n", [(0.5, 3), (-1.0, 4), (1.9, 5)])
def test_hinkley_density_is_normalized_and_quantiles_invert(a, n):
    total = nx.integrate(lambda w: float(hinkley_density(w, a, n)), 0.0, np.inf)
    assert total == pytest.approx(1.0, rel=1e-9)
    for p in (0.05, 0.5, 0.95):
        assert float(hinkley_cdf(hinkley_quantile(p, a, n), a, n)) == pytest.approx(p, abs=1e-10)


def test_hinkley_quantile_table_interpolates():
    tab = HinkleyQuantileTable.build(4, (0.025, 0.975), size=81)
    for a in (-1.3, 0.2, 1.7):
        exact = [hinkley_quantile(p, a, 4) for p in (0.025, 0.975)]
        assert np.allclose(tab(a), exact, rtol=1e-5)


def test_rstar_is_exact_for_the_normal_mean():
    m = get_model("normal_location")
    d = Dataset((0.3, 1.1, -0.2, 0.8))
    s = LikelihoodSummary.from_model(m, d)
    th = np.array([-0.5, 0.2, 0.9, 1.4])
    exact = m.tail_prob(m.statistic(d), th, n=4)
    assert np.allclose(rstar_pvalue(s, th), exact, atol=1e-6)


@pytest.mark.parametrize("t", [-1.3, -2.0, -3.5])
def test_rstar_is_close_to_exact_for_one_gamma_observation(t):
    m = get_model("gamma_shape")
    s = gamma_summary(1, t)
    th = s.theta_hat * np.array([0.5, 0.8, 1.25, 2.0])
    exact = np.asarray(m.tail_prob(t, th))
    approx = rstar_pvalue(s, th)
    assert np.max(np.abs(approx - exact)) < 0.01


def test_rstar_flags_points_at_the_mle():
    s = gamma_summary(5, -5.8791)
    rs, flagged = rstar(s, np.array([s.theta_hat, s.theta_hat * 1.5]))
    assert flagged[0] and not flagged[1]


def test_rstar_confidence_has_no_spike_at_the_mle():
    s = gamma_summary(5, -5.8791)
    grid = np.linspace(0.3, 12.0, 3001)
    cd = rstar_confidence(s, grid)
    assert cd.density.integral() == pytest.approx(1.0, abs=1e-9)
    v = cd.values
    assert np.max(np.abs(np.diff(v, 2))) < 0.05 * v.max()


def test_pstar_pieces():
    a, n = 0.7, 4
    assert pstar_log_ratio(1.3, 1.3, a, n) == pytest.approx(0.0, abs=1e-14)
    total = nx.integrate(lambda u: float(pstar_pivot_density(u, a, n)), 0.0, np.inf)
    assert total == pytest.approx(1.0, rel=1e-9)
    p = pstar_conditional_pvalue(np.array([0.8, 1.0, 1.3]), 1.0, a, n)
    assert np.all(np.diff(p) > 0)
    with pytest.raises(CapabilityError):
        bn_conditional_density(get_model("gamma_shape"), 1.0, 1.0, a, n)
    with pytest.raises(DomainError):
        bn_conditional_density(get_model("curved_normal"), 1.0, 1.0, a)


def test_score_pvalue_normal_location_closed_form():
    m = get_model("normal_location")
    d = Dataset((0.3, 1.1, -0.2))
    p = score_pvalue(m, 0.1, d)
    assert p == pytest.approx(float(nx.normal_sf(math.sqrt(3) * (np.mean(d.array()) - 0.1))), rel=1e-6)


def test_score_pvalue_curved_uses_observed_information():
    m = get_model("curved_normal")
    d = Dataset((0.9, 1.6, 1.2))
    u, info = m.score(1.0, d), m.observed_info(1.0, d)
    assert score_pvalue(m, 1.0, d) == pytest.approx(float(nx.normal_sf(u / math.sqrt(info))))
