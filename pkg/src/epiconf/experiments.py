"""Named reproductions: the figure data sets and the worked examples.

Each function returns a result object holding the curves (as columns) and
the scalar checks computed from them. Nothing here plots; the CLI writes the
columns to CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .asymptotics import (HinkleyQuantileTable, gamma_summary, hinkley_density, hinkley_normalizer,
                          hinkley_normalizer_recursive, hinkley_sf, pstar_conditional_density, rstar_confidence, score_pvalue)
from .confidence import (conditional_density, confidence_of, floor_guess_coverage,
                         full_confidence, full_confidence_variants, implied_prior, interval,
                         marginal_density)
from .coverage import (IntervalProcedure, Statistic,
                       builtin_statistics, conditional_coverage, marginal_coverage,
                       pivot_coverage, relevant_scan)
from .discrete import evans_enumeration, midp_coverage_experiment
from .dutchbook import (FullConfidencePolicy, MarginalPolicy, default_market,
                        expected_profit, triple_interval)
from .models import CurvedNormal, Dataset, GammaShape, get_model

FIG1_N = 5
FIG1_SUM_T = -5.8791
FIG2_DATA = ((0.9, 1.0, 1.5), (0.1, 1.0, 5.0))
FIG3_BAND = (0.8, 1.25)
FIG3_SEED = 17


@dataclass
class Result:
    """Named columns plus scalar checks."""

    name: str
    columns: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)   # extra named column sets

    def write_csv(self, path, which: str | None = None):
        cols = self.columns if which is None else self.tables[which]
        write_columns(path, cols)


def write_columns(path, cols: dict):
    names = list(cols)
    rows = zip(*(np.asarray(cols[k]).tolist() if not isinstance(cols[k], (list, tuple))
                 else cols[k] for k in names))
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _rel_on(a, b, mask):
    return float(np.max(np.abs(a[mask] / b[mask] - 1.0)))


# ---------------------------------------------------------------------------
# gamma shape: implied prior and two confidence densities
# ---------------------------------------------------------------------------

def figure1(n: int = FIG1_N, sum_t: float = FIG1_SUM_T, prior_window=(1.0, 6.0),
            density_floor: float = 0.01) -> Result:
    """Implied prior of the gamma shape and c_f against the r*-based c_m.

    The exact-route prior uses one observation with ``t = sum_t / n``; the
    r* route divides the r* confidence density by the full likelihood.
    """
    model = GammaShape()
    data = GammaShape.dataset_from_sum(n, sum_t)
    prior = implied_prior(model, data.subset(0))
    cf = full_confidence(prior, model, data)
    grid = cf.grid
    summ = gamma_summary(n, sum_t)
    cr = rstar_confidence(summ, grid)
    th_hat = summ.theta_hat

    ll = GammaShape.loglik_from_sum(grid, n, sum_t)
    ll_hat = float(GammaShape.loglik_from_sum(th_hat, n, sum_t))
    lik = np.exp(ll - ll_hat)
    lik_norm = lik / np.trapezoid(lik, grid)

    dens_f, dens_r = cf.values, cr.values
    mask = (dens_f > density_floor * dens_f.max()) & (dens_r > 0)
    density_gap = _rel_on(dens_r, dens_f, mask)

    prior_exact = prior.relative(grid, th_hat)
    with np.errstate(divide="ignore", invalid="ignore"):
        prior_r = dens_r / lik
    prior_r = prior_r / np.interp(th_hat, grid, prior_r)
    win = (grid >= prior_window[0]) & (grid <= prior_window[1])
    prior_gap = _rel_on(prior_r, prior_exact, win)

    res = Result("fig1")
    res.tables["prior"] = {"theta": grid[win], "prior_exact": prior_exact[win],
                           "prior_rstar": prior_r[win]}
    res.tables["density"] = {"theta": grid, "c_full": dens_f, "c_rstar": dens_r,
                             "likelihood": lik_norm}
    res.columns = res.tables["density"]
    res.checks = {"mle": th_hat, "info": summ.info, "density_gap": density_gap,
                  "prior_gap": prior_gap, "prior_data_dependent": prior.data_dependent,
                  "c_full_mode": cf.mode()}
    return res


# ---------------------------------------------------------------------------
# N(theta, theta): data-dependent priors
# ---------------------------------------------------------------------------

def figure2(y=FIG2_DATA[0]) -> Result:
    """The ``c_fi`` variants seeded by each observation, plus ``c_m`` from sum y^2."""
    model = get_model("normal_mean_eq_var")
    data = Dataset(tuple(float(v) for v in y))
    variants = full_confidence_variants(model, data)
    grid = variants[0].grid
    cm = marginal_density(model, float(np.sum(np.square(data.array()))), n=data.n, grid=grid)
    vals = np.array([v.values for v in variants])
    peak = vals.max()
    spread = float(np.max(vals.max(axis=0) - vals.min(axis=0)) / peak)
    masses = [float(np.trapezoid(v.values, v.grid)) for v in variants]
    cm_gap = float(np.max(np.abs(vals.mean(axis=0) - cm.values)) / peak)
    cols = {"theta": grid}
    for i, v in enumerate(variants):
        cols[f"c_f{i + 1}"] = v.values
    cols["c_m"] = cm.values
    prior = implied_prior(model, data.subset(0))
    return Result("fig2", cols, {"spread_vs_peak": spread, "masses": masses,
                                 "c_m_gap_vs_peak": cm_gap,
                                 "prior_data_dependent": prior.data_dependent})


# ---------------------------------------------------------------------------
# N(theta, theta^2): conditional P-values
# ---------------------------------------------------------------------------

def curved_full_cdf(theta0: float, s1: float, s2: float, n: int, prior_power: float) -> float:
    """``C_f(theta < theta0)`` for ``c0 = theta^-prior_power`` by quadrature.

    With ``v = 1/theta`` the integrand is ``v^(n+p-2) exp(-s2 v^2/2 + s1 v)``.
    """
    k = n + prior_power - 2.0
    if k <= -1:
        raise ValueError("curved_full_cdf: improper near theta = infinity")
    mode = (s1 + math.sqrt(s1 * s1 + 4 * s2 * max(k, 0.0))) / (2 * s2)
    mode = max(mode, 1e-12)

    def logf(v):
        return k * math.log(v) - 0.5 * s2 * v * v + s1 * v if v > 0 else -math.inf

    shift = logf(mode)
    f = lambda v: math.exp(logf(v) - shift)  # noqa: E731
    scale = 1.0 / math.sqrt(s2)
    hi = mode + 40 * scale
    v0 = 1.0 / theta0
    total = nx.integrate(f, 0.0, mode, rel_tol=1e-12) + nx.integrate(f, mode, hi, rel_tol=1e-12)
    if v0 >= hi:
        return 0.0
    if v0 < mode:
        part = nx.integrate(f, v0, mode, rel_tol=1e-12) + nx.integrate(f, mode, hi, rel_tol=1e-12)
    else:
        part = nx.integrate(f, v0, hi, rel_tol=1e-12)
    return part / total


def figure3(n: int = 5, theta: float = 1.2, n_datasets: int = 100, seed: int = FIG3_SEED,
            theta0: float = 1.0, band=FIG3_BAND) -> Result:
    """Ratios of three P-value-like quantities to the exact conditional P-value at ``theta0``.

    Datasets are drawn in sequence from ``default_rng(seed)``.
    """
    model = CurvedNormal()
    rng = np.random.default_rng(seed)
    rows = {k: [] for k in ("dataset", "a", "t", "exact", "c_f_inv_theta", "c_f_const", "score")}
    for k in range(n_datasets):
        y = model.sample(theta, n, rng)
        d = Dataset(tuple(float(v) for v in y))
        s1, s2, _ = model.sums(d)
        t = math.sqrt(s2)
        a = s1 / t
        rows["dataset"].append(k)
        rows["a"].append(a)
        rows["t"].append(t)
        rows["exact"].append(float(hinkley_sf(t / theta0, a, n)))
        rows["c_f_inv_theta"].append(curved_full_cdf(theta0, s1, s2, n, 1.0))
        rows["c_f_const"].append(curved_full_cdf(theta0, s1, s2, n, 0.0))
        try:
            rows["score"].append(score_pvalue(model, theta0, d))
        except ValueError:
            rows["score"].append(math.nan)
    exact = np.array(rows["exact"])
    checks = {"band": tuple(band)}
    for key in ("c_f_inv_theta", "c_f_const", "score"):
        r = np.array(rows[key]) / exact
        rows[f"ratio_{key}"] = r.tolist()
        bad = ~np.isfinite(r) | (r < band[0]) | (r > band[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.abs(np.log(r))
        checks[f"violations_{key}"] = int(bad.sum())
        checks[f"median_abs_log_{key}"] = float(np.median(np.where(np.isfinite(lr), lr, np.inf)))
    return Result("fig3", rows, checks)


def figureA2(n: int = 3, seed: int = FIG3_SEED, theta: float = 1.0,
             grid=None) -> Result:
    """Approximate ``c_fi`` from each ``theta_hat(y_i)`` against ``c_f`` and ``c_m``.

    ``c_fi propto c_mi(theta; theta_hat_i) L(theta; y_(-i))``; ``c_f propto L / theta``;
    ``c_m propto prod_i p_theta(theta_hat_i) / theta``. Data are ``N(theta, theta^2)``
    draws.
    """
    model = CurvedNormal()
    rng = np.random.default_rng(seed)
    y = model.sample(theta, n, rng)
    d = Dataset(tuple(float(v) for v in y))
    if grid is None:
        grid = np.linspace(0.02, 6.0, 3000)
    grid = np.asarray(grid, dtype=float)

    def norm(logv):
        v = np.exp(logv - np.max(logv))
        return v / np.trapezoid(v, grid)

    ll_all = model.loglik_grid(grid, d)
    cols = {"theta": grid, "c_f": norm(ll_all - np.log(grid))}
    hats = [float(model.statistic(d.subset(i))) for i in range(n)]
    for i in range(n):
        rest = Dataset(tuple(v for j, v in enumerate(d.observations) if j != i))
        lrest = model.loglik_grid(grid, rest) if rest.n else np.zeros_like(grid)
        with np.errstate(divide="ignore"):
            lcm = np.log(model.tail_density(hats[i], grid))
        cols[f"c_f{i + 1}"] = norm(lcm + lrest)
    lm = sum(model.t_loglik(h, grid) for h in hats) - np.log(grid)
    cols["c_m"] = norm(lm)
    gaps = [float(np.max(np.abs(cols[f"c_f{i + 1}"] - cols["c_f"])) / cols["c_f"].max())
            for i in range(n)]
    cm_gap = float(np.max(np.abs(cols["c_m"] - cols["c_f"])) / cols["c_f"].max())

    # implied prior from theta_hat_1 versus the ratio to the full-data likelihood of y_1
    tab = {"y1": [], "theta": [], "log_c0m1": [], "log_q1": []}
    th = np.linspace(0.2, 5.0, 49)
    for y1 in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
        h = float(model.statistic(Dataset((y1,))))
        with np.errstate(divide="ignore"):
            lc = np.log(model.tail_density(h, th))
        lc0 = lc - model.t_loglik(h, th)
        lq = lc - model.loglik_grid(th, Dataset((y1,)))
        i0 = np.argmin(np.abs(th - 1.0))
        tab["y1"] += [y1] * th.size
        tab["theta"] += th.tolist()
        tab["log_c0m1"] += (lc0 - lc0[i0]).tolist()
        tab["log_q1"] += (lq - lq[i0]).tolist()
    lc0 = np.array(tab["log_c0m1"])
    prior_gap = float(np.max(np.abs(lc0 + np.log(np.array(tab["theta"])))))
    res = Result("figA2", cols, {"c_fi_gap_vs_peak": gaps, "c_m_gap_vs_peak": cm_gap,
                                 "data": d.observations, "log_prior_vs_inv_theta": prior_gap})
    res.tables["density"] = cols
    res.tables["prior"] = tab
    return res


def figureA3(sizes=None, gamma: float = 0.95) -> Result:
    exp = midp_coverage_experiment(sizes, gamma)
    cols = {"family": [], "size": [], "theta": [], "coverage": []}
    checks = {}
    for (fam, size), rep in exp.reports.items():
        cols["family"] += [fam] * rep.theta_grid.size
        cols["size"] += [size] * rep.theta_grid.size
        cols["theta"] += rep.theta_grid.tolist()
        cols["coverage"] += rep.estimates.tolist()
        checks[f"{fam}_{size}"] = {"max_dev": exp.max_deviation(fam, size),
                                   "sign_changes": exp.sign_changes(fam, size),
                                   "mean": exp.mean_coverage(fam, size)}
    res = Result("figA3", cols, checks)
    res.tables["experiment"] = exp
    return res


# ---------------------------------------------------------------------------
# worked examples
# ---------------------------------------------------------------------------

def range_statistic() -> Statistic:
    return Statistic("range", lambda s: np.ptp(np.asarray(s, dtype=float), axis=1), discrete=True)


def example1(theta: int = 4, n_rounds: int = 0, seed: int = FIG3_SEED) -> Result:
    """Integer-shift triple with ``n = 2`` and the interval ``[y_(1), y_(2)]``."""
    model = get_model("discrete_uniform_triple")
    proc = triple_interval()
    stat = range_statistic()
    rep = conditional_coverage(model, proc, stat, [theta], 7 / 9, n=2)
    marg = rep.exact_values[0]
    levels = rep.conditioning.levels
    cond = {int(lv): rep.exact_conditional[0, k] for k, lv in enumerate(levels)}
    scan = relevant_scan(model, proc, [stat], [theta - 1, theta, theta + 1], float(marg), n=2)
    verdicts = {int(r.bin_lo): (r.verdict, r.epsilon_hat) for r in scan}
    market = default_market(model)
    profit = expected_profit(model, theta, MarginalPolicy(), market)
    full = expected_profit(model, theta, FullConfidencePolicy(), market)
    cols = {"condition": ["marginal"] + [f"R={r}" for r in sorted(cond, reverse=True)],
            "coverage": [str(marg)] + [str(cond[r]) for r in sorted(cond, reverse=True)]}
    return Result("example1", cols, {"marginal": marg, "conditional": cond,
                                     "verdicts": verdicts,
                                     "expected_profit_per_round": profit,
                                     "full_confidence_expected_profit": full})


def normal_ci_procedure(gamma: float = 0.95, n: int = 1) -> IntervalProcedure:
    """Interval from the confidence distribution of the mean, computed once and shifted."""
    model = get_model("normal_location")
    cd = marginal_density(model, 0.0, n=n)
    ci = interval(cd, gamma)
    return IntervalProcedure("normal_cm", lambda s: (np.mean(s, axis=1) + ci.lower,
                                                     np.mean(s, axis=1) + ci.upper))


def example2(gamma: float = 0.95, n_sim: int = 100_000, seed: int = FIG3_SEED, n: int = 1,
             scan_sim: int = 20_000, scan_n: int = 2, workers: int = 1) -> Result:
    model = get_model("normal_location")
    prior = implied_prior(model, Dataset((0.3,)))
    grid = prior.density.grid
    lv = prior.log_evaluate(grid)
    const = float(np.max(np.abs(np.exp(lv - lv[grid.size // 2]) - 1.0)))
    proc = normal_ci_procedure(gamma, n)
    thetas = np.linspace(-2.0, 2.0, 5)
    cov = marginal_coverage(model, proc, thetas, gamma, n_sim=n_sim, seed=seed, n=n,
                            workers=workers)
    cands = list(builtin_statistics().values())
    scan_proc = proc if scan_n == n else normal_ci_procedure(gamma, scan_n)
    scan = relevant_scan(model, scan_proc, cands, thetas, gamma, n_sim=scan_sim, seed=seed + 1,
                         n=scan_n, workers=workers)
    z = np.abs(cov.estimates - gamma) / cov.std_errors
    return Result("example2", {"theta": thetas, "coverage": cov.estimates,
                               "stderr": cov.std_errors},
                  {"prior_max_rel_dev": const, "prior_data_dependent": prior.data_dependent,
                   "coverage_max_z": float(z.max()),
                   "scan_verdicts": sorted({r.verdict for r in scan}),
                   "n_scan_bins": len(scan)})


def example3(y: float = 1.9, gamma: float = 0.9, theta: float = 1.6) -> Result:
    model = get_model("uniform_shift")
    cd = marginal_density(model, y)
    ci = interval(cd, gamma, (0.0, gamma))
    whole = confidence_of(cd, (y - 1.0, y))
    proc = IntervalProcedure("one_sided", lambda s: (s[:, 0] - gamma, s[:, 0]))
    piv = pivot_coverage(proc, lambda u: theta + u, theta)
    data = Dataset((y,))
    return Result("example3", {"quantity": ["ci_lower", "ci_upper", "conf_whole", "pivot_cov",
                                            "floor_guess"],
                               "value": [ci.lower, ci.upper, whole, piv,
                                         floor_guess_coverage(theta)]},
                  {"interval": (ci.lower, ci.upper), "confidence_whole": whole,
                   "pivot_coverage": piv, "floor_guess_coverage": floor_guess_coverage(theta),
                   "ancillary": model.ancillary(data)})


def example4(y=(0.2, 0.9, 1.1)) -> Result:
    model = get_model("uniform_width2")
    d = Dataset(tuple(y))
    prior = implied_prior(model, d.subset(0))
    cf = full_confidence(prior, model, d)
    a = model.ancillary(d)
    inside = (cf.grid > cf.grid[0]) & (cf.grid < cf.grid[-1])
    dev = float(np.max(np.abs(cf.values[inside] * (2 - a) - 1.0)))
    return Result("example4", {"theta": cf.grid, "c_full": cf.values},
                  {"range": a, "support": (float(cf.grid[0]), float(cf.grid[-1])),
                   "max_rel_dev_from_flat": dev})


def example5(n: int = FIG1_N, sum_t: float = FIG1_SUM_T) -> Result:
    res = figure1(n, sum_t)
    res.name = "example5"
    return res


def example6(y=FIG2_DATA[0]) -> Result:
    res = figure2(y)
    res.name = "example6"
    return res


def example7(y=(1.3, 0.4, 2.2, 0.9, 1.6)) -> Result:
    """Curved normal: implied prior by three routes and the exact conditional law."""
    model = CurvedNormal()
    d = Dataset(tuple(y))
    s1, s2, n = model.sums(d)
    a, t = s1 / math.sqrt(s2), math.sqrt(s2)
    th_hat = model.mle(d)

    prior_m = implied_prior(model, d.subset(0))
    th = np.linspace(0.2, 5.0, 200)
    v = prior_m(th) * th
    marginal_route = float(np.ptp(v) / np.mean(v))

    cc = conditional_density(model, d)
    cf = full_confidence(None, model, d, grid=cc.grid)
    lp = model.loglik_grid(cc.grid, d) - np.log(cc.grid)
    cf_inv = np.exp(lp - lp.max())
    cf_inv /= np.trapezoid(cf_inv, cc.grid)
    mask = cf_inv > 1e-3 * cf_inv.max()
    cc_vs_cf = _rel_on(cc.values, cf_inv, mask)

    # p* route: c_c / L over theta, times theta, constant
    ps = pstar_conditional_density(th, th_hat, a, n)
    lik = np.exp(model.loglik_grid(th, d) - model.log_likelihood(th_hat, d))
    pv = ps / lik * th
    pstar_route = float(np.ptp(pv) / np.mean(pv))

    mass = nx.integrate(lambda w: float(hinkley_density(w, a, n)), 0.0, np.inf)
    norm_err = max(abs(mass - 1.0),
                   abs(hinkley_normalizer(a, n) / hinkley_normalizer_recursive(a, n) - 1.0))
    limit = float(get_model("curved_normal", statistic="y").tail_prob(1.0, 1e6))
    return Result("example7", {"theta": cc.grid, "c_conditional": cc.values, "c_full": cf_inv},
                  {"marginal_route_theta_c0_rel_range": marginal_route,
                   "pstar_route_theta_c0_rel_range": pstar_route,
                   "hinkley_normalization_error": norm_err,
                   "c_c_vs_c_f": cc_vs_cf, "a": a, "t": t, "mle": th_hat,
                   "y1_limit_at_1e6": limit, "flat_prior_mode": cf.mode()})


def curved_cf_procedure(n: int, gamma: float = 0.95, size: int = 61) -> IntervalProcedure:
    """Equi-tailed ``c_f`` interval for the curved normal, ``[t / w_hi, t / w_lo]``.

    With ``c0 = 1/theta`` the full confidence equals the exact conditional
    one, so its quantiles are those of ``w | a`` mapped through ``theta = t / w``.
    """
    g1, g2 = (1 - gamma) / 2, (1 + gamma) / 2
    table = HinkleyQuantileTable.build(n, (g1, g2), size=size)

    def bounds(s):
        s = np.asarray(s, dtype=float)
        t = np.sqrt((s ** 2).sum(axis=1))
        a = s.sum(axis=1) / t
        q = table(a)
        return t / q[:, 1], t / q[:, 0]

    return IntervalProcedure("curved_cf", bounds)


def curved_ancillary() -> Statistic:
    return Statistic("ancillary", lambda s: np.asarray(s).sum(axis=1)
                     / np.sqrt((np.asarray(s) ** 2).sum(axis=1)))


def example8_evans() -> Result:
    t = evans_enumeration()
    cols = {"conditioning": ["Y1=1", "Y1=1", "Y2=1", "Y2=1"], "theta": [1, 2, 1, 2],
            "p_correct": [str(v) for v in t.correctness_table()]}
    return Result("evans", cols, {"table": t.correctness_table(), "verdict": t.verdict,
                                  "total_probability_ok": t.total_probability_ok,
                                  "both_ancillary": t.both_ancillary,
                                  "same_likelihood": t.same_likelihood})


EXPERIMENTS = {
    "fig1": figure1, "fig2": figure2, "fig3": figure3, "figA2": figureA2, "figA3": figureA3,
    "example1": example1, "example2": example2, "example3": example3, "example4": example4,
    "example5": example5, "example6": example6, "example7": example7,
}
