from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf import numerics as nx
from epiconf.errors import BoundaryMLEError, CapabilityError, ConfigError, DomainError
from epiconf.models import (EVANS_TABLE, Dataset, GammaShape, gamma_t, gamma_t_roots, get_model,
                            list_models)

CONTINUOUS = [
    ("normal_location", {}, 0.4, (-1.0, 0.3, 2.0)),
    ("location_family", {"f": "cauchy"}, 0.4, (-1.0, 0.3, 2.0)),
    ("location_family", {"f": "t", "df": 4.0}, -0.2, (-1.0, 0.3, 2.0)),
    ("uniform_width2", {}, 0.4, (-0.3, 0.1, 1.2)),
    ("gamma_shape", {}, -1.7, (0.6, 1.5, 4.0)),
    ("normal_mean_eq_var", {}, 2.3, (0.5, 1.2, 3.0)),
    ("curved_normal", {}, 1.1, (0.5, 1.2, 3.0)),
    ("curved_normal", {"statistic": "y"}, 1.1, (0.5, 1.2, 3.0)),
]


def test_registry_lists_every_model():
    names = list_models()
    for n in ("gamma_shape", "curved_normal", "evans_2x2", "discrete_uniform_triple"):
        assert n in names
    with pytest.raises(ConfigError):
        get_model("no_such_model")


def test_dataset_rejects_empty_and_freezes_arrays():
    with pytest.raises(DomainError):
        Dataset(())
    d = Dataset(np.array([1.0, 2.0]))
    assert d.observations == (1.0, 2.0) and d.n == 2
    assert d.subset(1).observations == (2.0,)


@pytest.mark.parametrize("name,params,t,thetas", CONTINUOUS)
def test_tail_prob_is_monotone_increasing_in_theta(name, params, t, thetas):
    m = get_model(name, **params)
    p = np.asarray(m.tail_prob(t, np.linspace(thetas[0], thetas[-1], 50)), dtype=float)
    assert np.all(np.diff(p) >= -1e-14)
    assert np.all((p >= 0) & (p <= 1))


WITH_DERIVATIVE = [c for c in CONTINUOUS if c[0] != "gamma_shape"]


def test_gamma_has_no_analytic_tail_derivative():
    assert get_model("gamma_shape").tail_density(-1.7, np.array([2.0])) is None


@pytest.mark.parametrize("name,params,t,thetas", WITH_DERIVATIVE)
def test_tail_density_matches_numerical_derivative(name, params, t, thetas):
    m = get_model(name, **params)
    th = np.array(thetas[1:2])
    analytic = m.tail_density(t, th)
    numeric = nx.five_point_derivative(lambda x: np.asarray(m.tail_prob(t, x), dtype=float), th, 1e-4)
    assert np.allclose(analytic, numeric, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("name,params,t,thetas", CONTINUOUS)
def test_quantile_inverts_tail(name, params, t, thetas):
    m = get_model(name, **params)
    for alpha in (0.1, 0.5, 0.9):
        q = m.quantile(alpha, thetas[1])
        assert float(m.tail_prob(q, thetas[1])) == pytest.approx(1 - alpha, abs=1e-8)


def test_gamma_tail_against_direct_quadrature():
    t, theta = -1.9, 2.5
    lo, hi = gamma_t_roots(t)
    exact = mpmath.quad(lambda y: mpmath.exp(theta * mpmath.log(theta) - mpmath.loggamma(theta)
                                             + (theta - 1) * mpmath.log(y) - theta * y), [lo, 1, hi])
    assert float(GammaShape().tail_prob(t, theta)) == pytest.approx(float(exact), rel=1e-10)
    assert gamma_t(np.array([lo, hi])) == pytest.approx([t, t], abs=1e-12)


@pytest.mark.parametrize("theta", [0.7, 3.0, 12.0])
def test_gamma_mle_recovers_theta_from_exact_sum(theta):
    n = 5
    sum_t = n * (float(mpmath.digamma(theta)) - math.log(theta) - 1.0)
    assert GammaShape.mle_from_sum(n, sum_t) == pytest.approx(theta, rel=1e-10)
    d = GammaShape.dataset_from_sum(n, sum_t)
    assert GammaShape().statistic(d) == pytest.approx(sum_t, rel=1e-12)


def test_gamma_mle_boundary():
    with pytest.raises(BoundaryMLEError):
        GammaShape.mle_from_sum(3, -3.0)


def test_curved_normal_tail_by_simulation():
    m = get_model("curved_normal")
    rng = np.random.default_rng(5)
    y = m.sample(1.3, 200_000, rng)
    mle = np.array([m.statistic(Dataset((v,))) for v in y[:20_000]])
    for t in (0.5, 1.2, 2.0):
        p = float(m.tail_prob(t, 1.3))
        se = math.sqrt(p * (1 - p) / mle.size)
        assert abs(np.mean(mle >= t) - p) < 4 * se


def test_normal_mean_eq_var_tail_by_simulation():
    m = get_model("normal_mean_eq_var")
    rng = np.random.default_rng(11)
    s = m.statistic_batch(m.sample(1.5, (100_000, 3), rng))
    p = float(m.tail_prob(6.0, 1.5, n=3))
    assert abs(np.mean(s >= 6.0) - p) < 4 * math.sqrt(p * (1 - p) / s.size)


def test_capability_errors():
    with pytest.raises(CapabilityError):
        get_model("gamma_shape").tail_prob(-2.0, 1.0, n=2)
    with pytest.raises(CapabilityError):
        get_model("gamma_shape").ancillary(Dataset((1.0,)))
    with pytest.raises(DomainError):
        get_model("gamma_shape").check_data(Dataset((-1.0,)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), n=st.integers(1, 6))
def test_simulate_is_reproducible(seed, n):
    for name in ("normal_location", "gamma_shape", "discrete_uniform_triple"):
        m = get_model(name)
        theta = 2 if name == "discrete_uniform_triple" else 1.5
        assert m.simulate(theta, n, seed) == m.simulate(theta, n, seed)


def test_triple_outcomes_and_conditional_tail():
    m = get_model("discrete_uniform_triple")
    out = list(m.outcomes(4, 2))
    assert len(out) == 9 and sum(p for _, p in out) == 1
    # given range 2 the mean equals theta, given range 0 it is uniform on the triple
    assert m.conditional_tail(4.0, 2, 4) == 1
    assert m.conditional_tail(4.0, 0, 4) == Fraction(2, 3)
    assert m.mle(Dataset((3, 5))) == 4
    with pytest.raises(DomainError):
        m.check_theta(1.5)


def test_uniform_shift_conditional_tail_is_an_indicator():
    m = get_model("uniform_shift")
    th = np.linspace(0.2, 1.8, 33)
    c = m.conditional_tail(1.4, 0.4, th)
    assert set(np.unique(c)) <= {0.0, 1.0}
    assert np.all(c[th > 0.45] == 1.0) and np.all(c[th < 0.35] == 0.0)


def test_uniform_width2_conditional_given_full_range_is_degenerate():
    m = get_model("uniform_width2")
    assert np.all(m.conditional_tail(0.5, 2.0, np.array([0.4, 0.6]), 2) == [0.0, 1.0])


def test_location_conditional_reduces_to_marginal_for_normal():
    m = get_model("location_family", f="normal")
    a = (0.0, 0.7, 1.1)
    base = m.conditional_tail(-0.2, a, 0.0, 3)
    # for the normal the minimum's law given a is N(mean shift, 1/3)
    mean_shift = -np.mean(a)
    assert base == pytest.approx(float(nx.normal_sf((-0.2 - mean_shift) * math.sqrt(3))), rel=1e-8)


@pytest.mark.parametrize("name,param", [("binomial", {"n": 12}), ("negative_binomial", {"y": 4})])
def test_discrete_pmfs_normalize(name, param):
    m = get_model(name, **param)
    support = np.arange(0, 13) if name == "binomial" else np.arange(4, 4000)
    assert float(np.sum(m.pmf(support, 0.3))) == pytest.approx(1.0, abs=1e-12)


def test_evans_table_structure():
    m = get_model("evans_2x2")
    for th in (1, 2):
        assert sum(EVANS_TABLE[th].values()) == 1
    # each coordinate has the same marginal law under both parameter values
    for which in (0, 1):
        marg = [{v: sum(p for c, p in EVANS_TABLE[th].items() if c[which] == v) for v in (1, 2)}
                for th in (1, 2)]
        assert marg[0] == marg[1]
    assert Fraction(sum(p for _, p in m.outcomes(2))) == 1
    with pytest.raises(DomainError):
        m.check_theta(3)
