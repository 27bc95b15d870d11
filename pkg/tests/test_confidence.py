from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf import numerics as nx
from epiconf.confidence import (DiscreteConfidence, conditional_density, confidence_of,
                                floor_guess_coverage, full_confidence, full_confidence_variants,
                                implied_prior, interval, marginal_cdf, marginal_density)
from epiconf.errors import CapabilityError, DomainError, IntervalError
from epiconf.models import Dataset, get_model

Z975 = float(nx.normal_quantile(0.975))


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-5, 5), n=st.integers(1, 9))
def test_normal_marginal_confidence_is_the_shifted_normal(t, n):
    cd = marginal_density(get_model("normal_location"), t, n=n)
    g = cd.grid
    exact = math.sqrt(n) * nx.normal_pdf((g - t) * math.sqrt(n))
    assert np.max(np.abs(cd.values - exact)) < 1e-4 * exact.max()
    ci = interval(cd, 0.95)
    assert ci.lower == pytest.approx(t - Z975 / math.sqrt(n), abs=1e-4)
    assert ci.upper == pytest.approx(t + Z975 / math.sqrt(n), abs=1e-4)


def test_marginal_cdf_is_the_tail_probability():
    m = get_model("gamma_shape")
    th = np.array([0.5, 1.0, 2.0])
    assert np.allclose(marginal_cdf(m, -1.6, th), m.tail_prob(-1.6, th))


@pytest.mark.parametrize("name,datum", [("gamma_shape", (0.4,)), ("normal_mean_eq_var", (1.7,)),
                                        ("curved_normal", (0.8,)), ("location_family", (0.3,))])
def test_marginal_density_is_a_normalized_monotone_cdf(name, datum):
    m = get_model(name)
    cd = marginal_density(m, m.statistic(Dataset(datum)))
    assert cd.density.integral() == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(cd.cdf.values) >= 0)


def test_normal_implied_prior_is_flat_and_data_free():
    p = implied_prior(get_model("normal_location"), Dataset((0.3,)))
    assert not p.data_dependent
    r = p.relative(np.linspace(-2, 2, 9), 0.3)
    assert np.max(np.abs(r - 1)) < 1e-9


def test_curved_normal_implied_prior_is_one_over_theta():
    p = implied_prior(get_model("curved_normal"), Dataset((1.1,)))
    th = np.linspace(0.5, 4.0, 15)
    assert np.allclose(p.relative(th, 1.0), 1.0 / th, rtol=1e-6)
    assert not p.data_dependent


def test_normal_mean_eq_var_prior_depends_on_the_datum():
    m = get_model("normal_mean_eq_var")
    assert implied_prior(m, Dataset((0.9,))).data_dependent


def test_conditional_route_for_normal_location_matches_marginal():
    m = get_model("normal_location")
    d = Dataset((0.2, 1.4, -0.3))
    cc = conditional_density(m, d)
    cm = marginal_density(m, m.statistic(d), n=3, grid=cc.grid)
    assert np.max(np.abs(cc.values - cm.values)) < 1e-6 * cm.values.max()


def test_flat_prior_full_confidence_for_normal():
    m = get_model("normal_location")
    d = Dataset((0.3, 1.2))
    ci = interval(full_confidence(None, m, d), 0.95)
    assert ci.lower == pytest.approx(0.75 - Z975 / math.sqrt(2), abs=1e-4)
    assert confidence_of(full_confidence(None, m, d), ci) == pytest.approx(0.95, abs=1e-6)


def test_full_confidence_variants_one_per_observation():
    m = get_model("curved_normal")
    out = full_confidence_variants(m, Dataset((0.8, 1.5, 1.1)))
    assert len(out) == 3
    assert all(np.array_equal(out[0].grid, c.grid) for c in out)


def test_triple_full_confidence_is_exact():
    m = get_model("discrete_uniform_triple")
    assert full_confidence(None, m, Dataset((3, 5))).as_dict() == {4: Fraction(1)}
    flat = full_confidence(None, m, Dataset((4, 4))).as_dict()
    assert flat == {3: Fraction(1, 3), 4: Fraction(1, 3), 5: Fraction(1, 3)}


def test_discrete_confidence_validates():
    with pytest.raises(DomainError):
        DiscreteConfidence("x", (1, 2), (Fraction(1, 2), Fraction(1, 3)))


def test_unordered_label_has_no_implied_prior():
    m = get_model("evans_2x2")
    with pytest.raises(CapabilityError):
        implied_prior(m, Dataset(((1, 2),)))


@pytest.mark.parametrize("gamma,split", [(1.2, None), (0.9, (0.0, 0.8)), (0.0, None)])
def test_interval_rejects_bad_levels(gamma, split):
    cd = marginal_density(get_model("normal_location"), 0.0)
    with pytest.raises(DomainError):
        interval(cd, gamma, split)


def test_one_sided_interval_needs_compact_support():
    cd = marginal_density(get_model("normal_location"), 0.0)
    with pytest.raises(IntervalError):
        interval(cd, 0.9, (0.0, 0.9))


@pytest.mark.parametrize("theta,exact", [(2.0, 1.0), (2.25, 0.75), (0.9, 0.1)])
def test_floor_guess_coverage(theta, exact):
    assert floor_guess_coverage(theta) == pytest.approx(exact)
