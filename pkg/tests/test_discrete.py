from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf.coverage import NOT_RELEVANT, marginal_coverage
from epiconf.discrete import (BINOMIAL, NEGATIVE_BINOMIAL, MidPConfidence, evans_enumeration,
                              evans_mle_guess, mid_pvalue, midp_confidence_density, midp_coverage,
                              midp_coverage_experiment, write_midp_csv)
from epiconf.errors import ConfigError, DomainError
from epiconf.models import get_model


def _binom_pmf(k, n, p):
    return math.comb(n, k) * p ** k * (1 - p) ** (n - k)


def midp_binomial_oracle(y, n, p: Fraction) -> Fraction:
    """``P(Y > y) + P(Y = y) / 2`` summed exactly."""
    return sum(_binom_pmf(k, n, p) for k in range(y + 1, n + 1)) + _binom_pmf(y, n, p) / 2


def midp_nbinom_oracle(y, n, p: Fraction) -> Fraction:
    """``P(N < n) + P(N = n) / 2`` for the trial count N of the y-th success."""
    def at_most(m):  # P(N <= m) = P(Bin(m, p) >= y)
        return sum(_binom_pmf(k, m, p) for k in range(y, m + 1)) if m >= y else Fraction(0)
    return at_most(n - 1) + (at_most(n) - at_most(n - 1)) / 2


@pytest.mark.parametrize("y,n", [(0, 5), (3, 10), (7, 7), (12, 40)])
@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(3, 10), Fraction(4, 5)])
def test_binomial_midp_against_exact_sums(y, n, p):
    assert mid_pvalue(BINOMIAL, y, n, float(p)) == pytest.approx(float(midp_binomial_oracle(y, n, p)),
                                                                 rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("y,n", [(1, 1), (3, 10), (5, 30), (10, 11)])
@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)])
def test_negative_binomial_midp_against_exact_sums(y, n, p):
    assert mid_pvalue(NEGATIVE_BINOMIAL, y, n, float(p)) == pytest.approx(
        float(midp_nbinom_oracle(y, n, p)), rel=1e-12, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), data=st.data())
def test_interior_density_is_normalized_and_cdf_monotone(n, data):
    y = data.draw(st.integers(1, n - 1))
    d = midp_confidence_density(BINOMIAL, y, n)
    assert d.integral() == pytest.approx(1.0, abs=1e-6)
    c = MidPConfidence(BINOMIAL, y, n).cdf(np.linspace(0.01, 0.99, 99))
    assert np.all(np.diff(c) >= 0)


@pytest.mark.parametrize("y,n,atoms,ends", [(0, 10, (0.5, 0.0), 0), (10, 10, (0.0, 0.5), 1)])
def test_boundary_counts_carry_an_atom(y, n, atoms, ends):
    cd = MidPConfidence(BINOMIAL, y, n)
    assert cd.atoms == atoms
    lo, hi = cd.interval(0.95)
    assert (lo if ends == 0 else hi) == float(ends)
    with pytest.raises(DomainError):
        midp_confidence_density(BINOMIAL, y, n)


def test_interval_endpoints_solve_the_tail_equations():
    cd = MidPConfidence(BINOMIAL, 4, 15)
    lo, hi = cd.interval(0.9)
    assert float(cd.cdf(lo)) == pytest.approx(0.05, abs=1e-12)
    assert float(cd.cdf(hi)) == pytest.approx(0.95, abs=1e-12)


@pytest.mark.parametrize("bad", [(BINOMIAL, 5, 3), (NEGATIVE_BINOMIAL, 0, 4), (BINOMIAL, 1.5, 3)])
def test_invalid_counts(bad):
    with pytest.raises(DomainError):
        MidPConfidence(*bad)
    with pytest.raises(ConfigError):
        MidPConfidence("poisson", 1, 2)


def test_binomial_coverage_against_direct_enumeration():
    size, theta = 12, 0.37
    rep = midp_coverage(BINOMIAL, size, [theta])
    direct = 0.0
    for y in range(size + 1):
        lo, hi = MidPConfidence(BINOMIAL, y, size).interval(0.95)
        if lo <= theta <= hi:
            direct += float(_binom_pmf(y, size, Fraction(theta)))
    assert rep.estimates[0] == pytest.approx(direct, rel=1e-12)


def test_negative_binomial_coverage_by_simulation():
    size, theta = 5, 0.3
    rep = midp_coverage(NEGATIVE_BINOMIAL, size, [theta])
    rng = np.random.default_rng(2)
    trials = size + rng.negative_binomial(size, theta, 20_000)
    cover = {int(t): (lambda lo, hi: lo <= theta <= hi)(*MidPConfidence(NEGATIVE_BINOMIAL, size,
                                                                         int(t)).interval(0.95))
             for t in np.unique(trials)}
    hit = [cover[int(t)] for t in trials]
    assert abs(np.mean(hit) - rep.estimates[0]) < 4 * math.sqrt(0.05 * 0.95 / trials.size)


def test_coverage_oscillates_around_nominal(tmp_path):
    exp = midp_coverage_experiment({BINOMIAL: (10, 50)})
    assert exp.sign_changes(BINOMIAL, 10) >= 2
    assert exp.max_deviation(BINOMIAL, 50) < exp.max_deviation(BINOMIAL, 10) + 0.01
    assert abs(exp.mean_coverage(BINOMIAL, 50) - 0.95) < 0.01
    path = tmp_path / "midp.csv"
    write_midp_csv(exp, path)
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# schema=1", "family,size,theta,coverage"]
    assert len(lines) == 2 + 2 * 181


def test_two_by_four_table():
    t = evans_enumeration()
    assert t.correctness_table() == (Fraction(1, 2), Fraction(3, 4), Fraction(1, 3), Fraction(5, 6))
    assert t.total_probability_ok and t.both_ancillary and t.same_likelihood
    assert t.verdict == NOT_RELEVANT
    rep = marginal_coverage(get_model("evans_2x2"), evans_mle_guess(), [1, 2], 0.5)
    assert rep.exact_values == (t.correct[1], t.correct[2])
