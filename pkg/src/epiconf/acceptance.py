"""The acceptance suite: ten numbered criteria, each a pass/fail with details.

Tolerances live in :data:`TOLERANCES` and can be overridden per run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import experiments as ex
from .confidence import marginal_density
from .coverage import (NEGATIVE, NOT_RELEVANT, builtin_statistics, conditional_coverage,
                       marginal_coverage, relevant_scan)
from .discrete import (BINOMIAL, evans_coordinate, evans_mle_guess, midp_confidence_density,
                       midp_coverage_experiment)
from .dutchbook import (FullConfidencePolicy, MarginalPolicy, TWO_AGENT, default_market,
                        expected_profit, expected_profit_sd, simulate_market, trump_fixture)
from .models import get_model

TOLERANCES = {
    "runtime_1": 1.0,
    "prior_const": 1e-6,
    "coverage_z": 3.0,
    "nsim_2": 100_000,
    "runtime_2": 30.0,
    "mle": 1e-6,
    "density_gap": 0.02,
    "prior_gap": 0.02,
    "runtime_3": 60.0,
    "curved_prior": 1e-4,
    "pstar_prior": 1e-3,
    "hinkley_norm": 1e-6,
    "cc_cf": 1e-4,
    "band_lo": ex.FIG3_BAND[0],
    "band_hi": ex.FIG3_BAND[1],
    "fig3_in_band": 95,
    "runtime_5": 300.0,
    "ex6_spread": 0.05,
    "mass": 1e-6,
    "runtime_7": 10.0,
    "rounds_9": 10_000,
    "mc_z": 3.0,
    "runtime_9": 60.0,
}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    checks: dict = field(default_factory=dict)   # name -> (ok, value)
    seconds: float = 0.0

    def line(self) -> str:
        failed = [k for k, (ok, _) in self.checks.items() if not ok]
        tail = "" if self.passed else " failed=" + ",".join(failed)
        return (f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'} "
                f"{self.title} ({self.seconds:.2f}s){tail}")


def _finish(number, title, checks, t0, runtime_key=None, tol=None):
    secs = time.perf_counter() - t0
    if runtime_key is not None:
        checks["runtime"] = (secs < tol[runtime_key], secs)
    return CriterionResult(number, title, all(ok for ok, _ in checks.values()), checks, secs)


def criterion1(tol, seed):
    t0 = time.perf_counter()
    r = ex.example1()
    c = r.checks
    checks = {
        "marginal_7_9": (c["marginal"] == Fraction(7, 9), str(c["marginal"])),
        "conditional_1_1_third": ((c["conditional"][2], c["conditional"][1], c["conditional"][0])
                                  == (1, 1, Fraction(1, 3)),
                                  [str(c["conditional"][k]) for k in (2, 1, 0)]),
        "r0_relevant_negative": (c["verdicts"][0][0] == NEGATIVE, c["verdicts"][0]),
    }
    return _finish(1, "integer-shift triple exact coverage", checks, t0, "runtime_1", tol)


def criterion2(tol, seed):
    t0 = time.perf_counter()
    r = ex.example2(n_sim=int(tol["nsim_2"]), seed=seed)
    c = r.checks
    checks = {
        "prior_constant": (c["prior_max_rel_dev"] < tol["prior_const"], c["prior_max_rel_dev"]),
        "coverage_95": (c["coverage_max_z"] <= tol["coverage_z"], c["coverage_max_z"]),
        "scan_not_relevant": (c["scan_verdicts"] == [NOT_RELEVANT], c["scan_verdicts"]),
    }
    return _finish(2, "normal location", checks, t0, "runtime_2", tol)


def criterion3(tol, seed):
    t0 = time.perf_counter()
    c = ex.figure1().checks
    checks = {
        "mle_3": (abs(c["mle"] - 3.0) <= tol["mle"], c["mle"]),
        "c_full_vs_rstar": (c["density_gap"] < tol["density_gap"], c["density_gap"]),
        "priors_agree": (c["prior_gap"] < tol["prior_gap"], c["prior_gap"]),
    }
    return _finish(3, "gamma shape implied prior and r*", checks, t0, "runtime_3", tol)


def criterion4(tol, seed):
    t0 = time.perf_counter()
    c = ex.example7().checks
    checks = {
        "theta_c0_const": (c["marginal_route_theta_c0_rel_range"] < tol["curved_prior"],
                           c["marginal_route_theta_c0_rel_range"]),
        "pstar_route": (c["pstar_route_theta_c0_rel_range"] < tol["pstar_prior"],
                        c["pstar_route_theta_c0_rel_range"]),
        "hinkley_normalizes": (c["hinkley_normalization_error"] < tol["hinkley_norm"],
                               c["hinkley_normalization_error"]),
        "c_c_equals_c_f": (c["c_c_vs_c_f"] < tol["cc_cf"], c["c_c_vs_c_f"]),
    }
    return _finish(4, "curved normal implied prior 1/theta", checks, t0)


def criterion5(tol, seed):
    t0 = time.perf_counter()
    c = ex.figure3(seed=seed, band=(tol["band_lo"], tol["band_hi"])).checks
    ok_imp = 100 - c["violations_c_f_inv_theta"]
    checks = {
        "inv_theta_in_band": (ok_imp >= tol["fig3_in_band"], ok_imp),
        "const_more_violations": (c["violations_c_f_const"] > c["violations_c_f_inv_theta"],
                                  c["violations_c_f_const"]),
        "score_more_violations": (c["violations_score"] > c["violations_c_f_inv_theta"],
                                  c["violations_score"]),
        "const_larger_log_ratio": (c["median_abs_log_c_f_const"]
                                   > c["median_abs_log_c_f_inv_theta"],
                                   c["median_abs_log_c_f_const"]),
        "score_larger_log_ratio": (c["median_abs_log_score"] > c["median_abs_log_c_f_inv_theta"],
                                   c["median_abs_log_score"]),
    }
    return _finish(5, "conditional P-value reproduction", checks, t0, "runtime_5", tol)


def criterion6(tol, seed):
    t0 = time.perf_counter()
    c = ex.figure2().checks
    checks = {
        "variants_agree": (c["spread_vs_peak"] < tol["ex6_spread"], c["spread_vs_peak"]),
        "each_integrates_to_1": (all(abs(m - 1) < tol["mass"] for m in c["masses"]), c["masses"]),
    }
    return _finish(6, "N(theta, theta) data-dependent priors", checks, t0)


def criterion7(tol, seed):
    t0 = time.perf_counter()
    e = midp_coverage_experiment({BINOMIAL: (10, 100)})
    checks = {
        "n10_sign_changes": (e.sign_changes(BINOMIAL, 10) > 0, e.sign_changes(BINOMIAL, 10)),
        "n100_smaller_max_dev": (e.max_deviation(BINOMIAL, 100) < e.max_deviation(BINOMIAL, 10),
                                 (e.max_deviation(BINOMIAL, 100), e.max_deviation(BINOMIAL, 10))),
    }
    return _finish(7, "mid-P coverage fluctuation", checks, t0, "runtime_7", tol)


def criterion8(tol, seed):
    t0 = time.perf_counter()
    c = ex.example8_evans().checks
    want = (Fraction(1, 2), Fraction(3, 4), Fraction(1, 3), Fraction(5, 6))
    checks = {
        "table": (c["table"] == want, [str(v) for v in c["table"]]),
        "no_one_direction_bias": (c["verdict"] == NOT_RELEVANT, c["verdict"]),
    }
    return _finish(8, "two-by-four table enumeration", checks, t0)


def criterion9(tol, seed):
    t0 = time.perf_counter()
    model = get_model("discrete_uniform_triple")
    theta, rounds = 4, int(tol["rounds_9"])
    trump = trump_fixture()
    market = default_market(model)
    marg, full = MarginalPolicy(), FullConfidencePolicy()
    led = simulate_market(model, theta, {"marginal": marg, "full": full}, rounds, seed)
    mean = expected_profit(model, theta, marg, market)
    se = expected_profit_sd(model, theta, marg, market) * math.sqrt(rounds)
    got = led.cumulative("marginal")
    two = simulate_market(model, theta, {"marginal": MarginalPolicy()}, rounds, seed + 1,
                          mode=TWO_AGENT)
    checks = {
        "trump_0_15": (trump.cumulative("agent") == Fraction(3, 20), str(trump.cumulative("agent"))),
        "marginal_profit_vs_oracle": (abs(float(got) - float(mean) * rounds) <= tol["mc_z"] * se,
                                      (float(got), float(mean) * rounds, se)),
        "risk_free_every_round": (led.all_risk_free(), led.all_risk_free()),
        "full_confidence_zero": (led.cumulative("full") == 0, str(led.cumulative("full"))),
        "two_agent_positive_mean": (two.cumulative("marginal") > 0,
                                    float(two.cumulative("marginal"))),
        "two_agent_losing_round": (two.losing_rounds("marginal") >= 1,
                                   two.losing_rounds("marginal")),
    }
    return _finish(9, "Dutch book market", checks, t0, "runtime_9", tol)


def criterion10(tol, seed):
    t0 = time.perf_counter()
    checks = {}
    dens = []
    f1 = ex.figure1()
    dens.append(("fig1_c_full", f1.columns["theta"], f1.columns["c_full"]))
    f2 = ex.figure2()
    for k in ("c_f1", "c_f2", "c_f3"):
        dens.append((f"fig2_{k}", f2.columns["theta"], f2.columns[k]))
    e4 = ex.example4()
    dens.append(("example4", e4.columns["theta"], e4.columns["c_full"]))
    e7 = ex.example7()
    dens.append(("example7_c_c", e7.columns["theta"], e7.columns["c_conditional"]))
    nl = marginal_density(get_model("normal_location"), 0.3)
    dens.append(("normal_c_m", nl.grid, nl.values))
    md = midp_confidence_density(BINOMIAL, 3, 10)
    dens.append(("midp", md.grid, md.values))
    worst = max(abs(float(np.trapezoid(v, g)) - 1.0) for _, g, v in dens)
    checks["densities_normalize"] = (worst < tol["mass"], worst)
    mono = all(np.all(np.diff(np.cumsum(np.diff(g) * 0.5 * (v[1:] + v[:-1]))) >= 0)
               for _, g, v in dens)
    cdfs_ok = mono and bool(np.all(np.diff(nl.cdf(nl.grid)) >= 0))
    checks["cdfs_monotone"] = (cdfs_ok, cdfs_ok)

    # total probability on every coverage scan
    tri = get_model("discrete_uniform_triple")
    r1 = conditional_coverage(tri, ex.triple_interval(), ex.range_statistic(), [3, 4, 5], 7 / 9,
                              n=2)
    ev = get_model("evans_2x2")
    gaps = [float(np.max(np.abs(r1.total_probability_gap())))]
    for w in (1, 2):
        r = conditional_coverage(ev, evans_mle_guess(), evans_coordinate(w), [1, 2], 0.5)
        gaps.append(float(np.max(np.abs(r.total_probability_gap()))))
    exact_ok = max(gaps) < 1e-12
    nm = get_model("normal_location")
    proc = ex.normal_ci_procedure(0.95, 2)
    mc_ok = True
    for stat in builtin_statistics().values():
        r = conditional_coverage(nm, proc, stat, [-1.0, 0.0, 1.0], 0.95, n_sim=20_000,
                                 seed=seed, n=2)
        mc_ok &= bool(np.all(np.abs(r.total_probability_gap())
                             <= tol["mc_z"] * r.combined_std_error() + 1e-12))
    checks["total_probability"] = (exact_ok and mc_ok, (gaps, mc_ok))

    # worker-count independence
    kw = dict(n_sim=25_000, seed=seed, n=2)
    a = marginal_coverage(nm, proc, [0.0, 0.5], 0.95, workers=1, **kw)
    b = marginal_coverage(nm, proc, [0.0, 0.5], 0.95, workers=4, **kw)
    s1 = relevant_scan(nm, proc, [builtin_statistics()["range"]], [0.0, 0.5], 0.95,
                       workers=1, **kw)
    s2 = relevant_scan(nm, proc, [builtin_statistics()["range"]], [0.0, 0.5], 0.95,
                       workers=3, **kw)
    same = (np.array_equal(a.covered, b.covered)
            and all(x.table == y.table for x, y in zip(s1, s2)))
    checks["worker_independent"] = (same, same)
    return _finish(10, "property suite", checks, t0)


CRITERIA = {1: criterion1, 2: criterion2, 3: criterion3, 4: criterion4, 5: criterion5,
            6: criterion6, 7: criterion7, 8: criterion8, 9: criterion9, 10: criterion10}


def run(numbers=None, seed: int = ex.FIG3_SEED, overrides: dict | None = None):
    """Run the selected criteria (default: all) and return their results."""
    tol = dict(TOLERANCES)
    tol.update(overrides or {})
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    return [CRITERIA[k](tol, seed) for k in numbers]
