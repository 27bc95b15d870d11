from __future__ import annotations

import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiconf.coverage import (INCONCLUSIVE, NEGATIVE, NOT_RELEVANT, POSITIVE, IntervalProcedure,
                              Statistic, bias_verdict, builtin_statistics, conditional_coverage,
                              default_theta_grid, marginal_coverage, pivot_coverage, relevant_scan,
                              write_coverage_csv)
from epiconf.confidence import marginal_density
from epiconf.dutchbook import triple_interval
from epiconf.errors import ConfigError
from epiconf.experiments import normal_ci_procedure, range_statistic
from epiconf.models import get_model


@pytest.fixture(scope="module")
def normal():
    return get_model("normal_location"), normal_ci_procedure(0.95, 1)


def test_triple_marginal_coverage_is_seven_ninths():
    rep = marginal_coverage(get_model("discrete_uniform_triple"), triple_interval(), [2, 7], 7 / 9, n=2)
    assert rep.exact and rep.exact_values == (Fraction(7, 9), Fraction(7, 9))


def test_triple_conditional_coverage_and_total_probability():
    rep = conditional_coverage(get_model("discrete_uniform_triple"), triple_interval(),
                               range_statistic(), [4], 7 / 9, n=2)
    assert rep.conditioning.levels == (0.0, 1.0, 2.0)
    assert list(rep.exact_conditional[0]) == [Fraction(1, 3), Fraction(1), Fraction(1)]
    probs = rep.conditioning.bin_probs[0]
    assert probs == pytest.approx([1 / 3, 4 / 9, 2 / 9])
    assert np.abs(rep.total_probability_gap()).max() < 1e-15


def test_normal_marginal_coverage_is_nominal(normal):
    model, proc = normal
    rep = marginal_coverage(model, proc, [-1.0, 0.0, 2.5], 0.95, n_sim=40_000, seed=3)
    assert np.all(np.abs(rep.estimates - 0.95) < 4 * rep.std_errors)
    assert rep.covered.sum() == round(rep.estimates.sum() * 40_000)


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_results_do_not_depend_on_worker_count(seed):
    model, proc = get_model("normal_location"), normal_ci_procedure(0.95, 2)
    stat = builtin_statistics()["range"]
    a = conditional_coverage(model, proc, stat, [0.0, 1.0], 0.95, n_sim=25_000, seed=seed, n=2,
                             workers=1)
    b = conditional_coverage(model, proc, stat, [0.0, 1.0], 0.95, n_sim=25_000, seed=seed, n=2,
                             workers=4)
    assert np.array_equal(a.covered, b.covered)
    assert np.array_equal(a.conditioning.counts, b.conditioning.counts)
    assert a.conditioning.bin_edges == b.conditioning.bin_edges


def test_conditional_mc_obeys_total_probability():
    model, proc = get_model("normal_location"), normal_ci_procedure(0.9, 3)
    rep = conditional_coverage(model, proc, builtin_statistics()["range"], [0.0, 0.7], 0.9,
                               n_sim=30_000, seed=8, n=3)
    # with integer counts the decomposition is exact up to rounding
    assert np.abs(rep.total_probability_gap()).max() < 1e-12
    assert rep.conditioning.counts.sum(axis=1).tolist() == [30_000, 30_000]


def test_discrete_statistic_needs_levels(normal):
    model, proc = normal
    with pytest.raises(ConfigError):
        conditional_coverage(model, proc, Statistic("r", lambda s: s[:, 0], True), [0.0], 0.95,
                             n_sim=10, seed=0)


@pytest.mark.parametrize("d,se,expected", [
    ([0.05, 0.06, 0.04], [0.001] * 3, POSITIVE),
    ([-0.2, -0.3, -0.25], [0.01] * 3, NEGATIVE),
    ([0.05, -0.06, 0.04], [0.001] * 3, NOT_RELEVANT),
    ([0.001, -0.002, 0.0], [0.002] * 3, NOT_RELEVANT),
    ([0.05, 0.0, 0.04], [0.2, 0.2, 0.2], INCONCLUSIVE),
    ([np.nan, np.nan], [np.nan, np.nan], INCONCLUSIVE),
    ([0.05, np.nan, 0.04], [0.001, np.nan, 0.001], POSITIVE),
])
def test_bias_verdict(d, se, expected):
    verdict, eps, _ = bias_verdict(d, se)
    assert verdict == expected
    if expected in (POSITIVE, NEGATIVE):
        assert eps == pytest.approx(np.nanmin(np.abs(d)))
    else:
        assert eps == 0.0


def test_scan_of_the_normal_interval_finds_nothing(normal):
    model, _ = normal
    proc = normal_ci_procedure(0.95, 2)
    cands = [builtin_statistics(model)[k] for k in ("range", "ancillary")]
    out = relevant_scan(model, proc, cands, [-1.0, 0.0, 1.0], 0.95, n_sim=20_000, seed=4, n=2)
    assert {r.verdict for r in out} == {NOT_RELEVANT}


def test_a_coarse_grid_lets_non_ancillary_bins_look_relevant(normal):
    # a central bin of the mean covers every grid theta when the grid skips the bin
    model, _ = normal
    proc = normal_ci_procedure(0.95, 2)
    stat = builtin_statistics()["mean"]
    coarse = relevant_scan(model, proc, [stat], [-1.0, 0.0, 1.0], 0.95, n_sim=20_000, seed=4, n=2)
    wide = relevant_scan(model, proc, [stat], np.linspace(-2, 2, 5), 0.95, n_sim=20_000, seed=4, n=2)
    assert POSITIVE in {r.verdict for r in coarse}
    assert POSITIVE not in {r.verdict for r in wide}


def test_scan_of_the_triple_finds_both_signs():
    out = relevant_scan(get_model("discrete_uniform_triple"), triple_interval(), [range_statistic()],
                        [3, 4, 5], 7 / 9, n=2)
    verdicts = {r.bin_lo: (r.verdict, r.epsilon_hat) for r in out}
    assert verdicts[0.0] == (NEGATIVE, pytest.approx(4 / 9))
    assert verdicts[1.0] == (POSITIVE, pytest.approx(2 / 9))


def test_pivot_coverage_for_a_one_sided_uniform_interval():
    proc = IntervalProcedure("one_sided", lambda s: (s[:, 0] - 0.8, s[:, 0]))
    assert pivot_coverage(proc, lambda u: 1.3 + u, 1.3) == pytest.approx(0.8, abs=1e-12)


def test_default_theta_grid_spans_the_central_mass():
    cd = marginal_density(get_model("normal_location"), 0.0)
    g = default_theta_grid(cd)
    assert g.size == 11
    assert g[0] == pytest.approx(-2.3263, abs=1e-3) and g[-1] == pytest.approx(2.3263, abs=1e-3)


def test_coverage_csv_schema(tmp_path, normal):
    model, proc = normal
    rep = conditional_coverage(model, proc, builtin_statistics()["mean"], [0.0], 0.95,
                               n_sim=2_000, seed=1, binning=3)
    path = tmp_path / "cov.csv"
    write_coverage_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=1"
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["theta", "bin_id", "bin_lo", "bin_hi", "n", "coverage", "stderr", "nominal"]
    assert len(rows) == 1 + 1 + 3
