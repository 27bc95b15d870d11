"""Marginal, conditional and full confidence distributions.

The marginal confidence distribution of a statistic ``T`` is the right-side
P-value function ``C_m(theta; t) = P_theta(T >= t)``, read as a distribution
function in ``theta``. Dividing its density by the likelihood of ``t`` gives an
implied prior ``c0``; multiplying ``c0`` by the likelihood of the whole sample
gives the full confidence density ``c_f``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import numerics as nx
from .errors import CapabilityError, DomainError, IntegrabilityError, IntervalError
from .models import (DISCRETE_PARAMETER, EXACT_CONDITIONAL, Dataset, DiscreteUniformTriple,
                     ParametricModel)
from .models.base import check_size

DATA_DEPENDENCE_TOL = 1e-5
N_PROBES = 3
PROBE_SEED = 20240601


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfidenceDistribution:
    """A confidence density on a grid together with its distribution function.

    ``bounded`` marks distributions whose grid spans the exact compact support;
    only those can return the grid ends as 0 and 1 quantiles.
    """

    kind: str
    density: nx.GridDensity
    cdf: nx.GridCDF
    source: dict = field(default_factory=dict)
    bounded: bool = False

    @classmethod
    def from_density(cls, kind, density: nx.GridDensity, source=None, bounded=False):
        if not density.normalized:
            density = density.normalize()
        return cls(kind, density, nx.cdf_from_density(density), dict(source or {}), bounded)

    @property
    def grid(self) -> np.ndarray:
        return self.density.grid

    @property
    def values(self) -> np.ndarray:
        return self.density.values

    def quantile(self, p: float) -> float:
        if p <= 0.0 or p >= 1.0:
            if not self.bounded:
                raise IntervalError(f"quantile {p} needs a compact support; the grid of this "
                                    f"{self.kind} confidence is a tail truncation")
            return float(self.grid[0] if p <= 0.0 else self.grid[-1])
        return nx.quantile_from_cdf(self.cdf, p)

    def mode(self) -> float:
        return float(self.grid[int(np.argmax(self.values))])

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.values, self.grid))

    def __call__(self, theta):
        return self.density(theta)


@dataclass(frozen=True)
class DiscreteConfidence:
    """Exact confidence over a finite set of parameter values."""

    kind: str
    values: tuple
    probs: tuple
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.probs) != 1:
            raise DomainError("DiscreteConfidence: probabilities must sum to one")

    def as_dict(self) -> dict:
        return dict(zip(self.values, self.probs))

    def confidence_of(self, members) -> Fraction:
        members = set(members)
        return sum((p for v, p in zip(self.values, self.probs) if v in members), Fraction(0))


@dataclass(frozen=True)
class ImpliedPrior:
    """``c0(theta)``, stored unnormalized because it can be improper.

    ``log_evaluate`` returns ``log c0`` at arbitrary theta (``-inf`` or NaN
    where undefined); ``density`` is the tabulation on the grid it was derived
    on, scaled to have maximum one.
    """

    log_evaluate: Callable[[np.ndarray], np.ndarray]
    density: nx.GridDensity
    data_dependent: bool
    source: dict = field(default_factory=dict)

    def __call__(self, theta):
        return np.exp(self.log_evaluate(np.asarray(theta, dtype=float)))

    def on_grid(self, grid) -> np.ndarray:
        return self(grid)

    def relative(self, theta, reference: float) -> np.ndarray:
        """``c0(theta) / c0(reference)``."""
        lv = self.log_evaluate(np.asarray(theta, dtype=float))
        lr = float(self.log_evaluate(np.array([reference]))[0])
        return np.exp(lv - lr)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    split: tuple

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise IntervalError("ConfidenceInterval: bounds must be finite")
        if not self.lower < self.upper:
            raise IntervalError(f"ConfidenceInterval: need lower < upper, got "
                                f"({self.lower}, {self.upper})")

    def covers(self, theta) -> bool:
        return self.lower <= theta <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


# ---------------------------------------------------------------------------
# grids and differentiation
# ---------------------------------------------------------------------------

def _log(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.where(x > 0, x, 0.0))


def derivative_in_theta(F: Callable, theta: np.ndarray, h: float, lower: float = -math.inf):
    """Five-point central difference of ``F`` at each theta.

    Points closer than ``2h`` to an open lower boundary fall back to the
    second-order forward difference.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    central = theta - 2 * h > lower
    if central.any():
        out[central] = nx.five_point_derivative(F, theta[central], h)
    if (~central).any():
        x = theta[~central]
        out[~central] = (-3 * F(x) + 4 * F(x + h) - F(x + 2 * h)) / (2 * h)
    return out


def _step(theta: np.ndarray) -> float:
    if theta.size > 1:
        return float(np.min(np.diff(np.sort(theta))))
    return 1e-4 * max(1.0, abs(float(theta[0])))


def _solve_in_space(fun, p, lower, upper, start):
    """``theta`` with ``fun(theta) = p`` for an increasing ``fun`` on ``(lower, upper)``."""
    g = lambda th: float(fun(th)) - p  # noqa: E731
    positive = math.isfinite(lower) and lower == 0.0
    if positive:
        # search on the log scale for a positive parameter
        lo = hi = max(start, 1e-12)
        while g(lo) > 0 and lo > 1e-300:
            lo /= 2.0
        while g(hi) < 0 and hi < 1e300:
            hi *= 2.0
    else:
        lo, hi, step = start - 1.0, start + 1.0, 1.0
        while g(lo) > 0:
            step *= 2.0
            lo = max(start - step, lower + 1e-12) if math.isfinite(lower) else start - step
            if math.isfinite(lower) and lo <= lower + 1e-12 and g(lo) > 0:
                break
        step = 1.0
        while g(hi) < 0:
            step *= 2.0
            hi = min(start + step, upper - 1e-12) if math.isfinite(upper) else start + step
            if math.isfinite(upper) and hi >= upper - 1e-12:
                break
    return nx.find_root(g, lo, hi, tol=1e-12)


def _locate(cdf_fun, model, start):
    """Median and a spread for an increasing cdf in theta."""
    med = _solve_in_space(cdf_fun, 0.5, model.lower, model.upper, start)
    q_lo = _solve_in_space(cdf_fun, 0.1587, model.lower, model.upper, med)
    q_hi = _solve_in_space(cdf_fun, 0.8413, model.lower, model.upper, med)
    return med, max(0.5 * (q_hi - q_lo), 1e-8)


def _density_on_adaptive_grid(log_density, center, scale, model, n_points):
    grid = nx.adaptive_grid(log_density, center, scale, model.lower, model.upper,
                            n_points=n_points)
    return grid


# ---------------------------------------------------------------------------
# marginal confidence
# ---------------------------------------------------------------------------

def marginal_cdf(model: ParametricModel, t: float, theta, n: int = 1):
    """``C_m(theta; t) = P_theta(T >= t)``."""
    check_size(model, n)
    return model.tail_prob(t, theta, n)


def _marginal_derivative(model, t, n):
    def dens(theta):
        theta = np.asarray(theta, dtype=float)
        analytic = model.tail_density(t, theta, n)
        if analytic is not None:
            return np.asarray(analytic, dtype=float)
        h = _step(theta)
        return derivative_in_theta(lambda x: np.asarray(model.tail_prob(t, x, n), dtype=float),
                                   theta, h, model.lower)
    return dens


def marginal_density(model: ParametricModel, t: float, n: int = 1, grid=None,
                     n_points: int = nx.DEFAULT_GRID_POINTS) -> ConfidenceDistribution:
    """``c_m(theta; t) = dC_m/dtheta``, normalized on a grid.

    The analytic derivative is used where the model codes one, otherwise a
    five-point central difference with step equal to the grid spacing.
    ``source["raw_mass"]`` keeps the integral before normalization.
    """
    check_size(model, n)
    dens = _marginal_derivative(model, t, n)
    bounded = False
    if grid is None:
        support = model.likelihood_support(Dataset((t,))) if n == 1 else None
        if support is not None:
            grid = np.linspace(support[0], support[1], n_points)
            bounded = True
        else:
            start = float(t) if model.lower != 0.0 else max(abs(float(t)), 1e-3)
            med, scale = _locate(lambda th: marginal_cdf(model, t, th, n), model, start)
            grid = _density_on_adaptive_grid(lambda g: _log(np.clip(dens(g), 0, None)), med,
                                             scale, model, n_points)
    grid = np.asarray(grid, dtype=float)
    values = np.clip(dens(grid), 0.0, None)
    raw = nx.GridDensity(grid, values)
    return ConfidenceDistribution.from_density(
        "marginal", raw, {"model": model.describe(), "statistic": float(t), "n": n,
                          "raw_mass": raw.integral()}, bounded)


# ---------------------------------------------------------------------------
# conditional confidence
# ---------------------------------------------------------------------------

def conditional_cdf(model: ParametricModel, t: float, a, theta, n: int):
    """``C_c(theta; t | a) = P_theta(T >= t | A = a)`` from the exact conditional law."""
    model.require(EXACT_CONDITIONAL, "the exact conditional law")
    return model.conditional_tail(t, a, theta, n)


def conditional_density(model: ParametricModel, data, grid=None,
                        n_points: int = nx.DEFAULT_GRID_POINTS) -> ConfidenceDistribution:
    """Conditional confidence density given the model's ancillary at ``data``."""
    model.require(EXACT_CONDITIONAL, "the exact conditional law")
    if model.has(DISCRETE_PARAMETER):
        raise CapabilityError(f"{model.name}: discrete parameter, use exact tables")
    data = model.check_data(data)
    t = model.conditional_statistic(data)
    a = model.ancillary(data)
    n = data.n
    analytic = getattr(model, "conditional_tail_density", None)

    def dens(theta):
        theta = np.asarray(theta, dtype=float)
        if analytic is not None:
            return np.asarray(analytic(t, a, theta, n), dtype=float)
        return derivative_in_theta(
            lambda x: np.asarray(model.conditional_tail(t, a, x, n), dtype=float),
            theta, _step(theta), model.lower)

    bounded = False
    if grid is None:
        support = model.likelihood_support(data)
        if support is not None:
            grid, bounded = np.linspace(support[0], support[1], n_points), True
        else:
            center, scale = model.grid_hint(data)
            grid = _density_on_adaptive_grid(lambda g: _log(np.clip(dens(g), 0, None)), center,
                                             scale, model, n_points)
    grid = np.asarray(grid, dtype=float)
    raw = nx.GridDensity(grid, np.clip(dens(grid), 0.0, None))
    return ConfidenceDistribution.from_density(
        "conditional", raw, {"model": model.describe(), "statistic": t, "ancillary": a, "n": n,
                             "raw_mass": raw.integral()}, bounded)


# ---------------------------------------------------------------------------
# implied prior and full confidence
# ---------------------------------------------------------------------------

def _ratio(c, logl):
    """``log(c / L)``: NaN where ``L = 0 < c`` (undefined), ``-inf`` where ``c = 0``."""
    with np.errstate(invalid="ignore"):
        out = np.where(np.isfinite(logl), _log(c) - logl, -np.inf)
    return np.where((c > 0) & ~np.isfinite(logl), np.nan, out)


def _marginal_log_prior(model, t, n):
    dens = _marginal_derivative(model, t, n)

    def log_c0(theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        c = dens(theta)
        logl = np.asarray(model.t_loglik(t, theta, n), dtype=float)
        return _ratio(c, logl)
    return log_c0


def _conditional_log_prior(model, data):
    t = model.conditional_statistic(data)
    a = model.ancillary(data)
    n = data.n
    analytic = getattr(model, "conditional_tail_density", None)

    def log_c0(theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if analytic is not None:
            c = np.asarray(analytic(t, a, theta, n), dtype=float)
        else:
            c = derivative_in_theta(
                lambda x: np.asarray(model.conditional_tail(t, a, x, n), dtype=float),
                theta, _step(theta), model.lower)
        logl = model.loglik_grid(theta, data)
        return _ratio(c, logl)
    return log_c0


def _spread(a, b, mask):
    d = a[mask] - b[mask]
    return float(d.max() - d.min()) if d.size else 0.0


def implied_prior(model: ParametricModel, datum, ancillary: bool = False, grid=None,
                  tol: float = DATA_DEPENDENCE_TOL) -> ImpliedPrior:
    """``c0 = c / L`` at the datum.

    With ``ancillary=False`` the marginal confidence of ``T(datum)`` is divided by
    the likelihood of ``T``. With ``ancillary=True`` the conditional confidence
    given the model's ancillary is divided by the full likelihood of the datum.
    The prior is flagged data-dependent when ``log c0`` computed from a few
    probe datasets, drawn from the model at the datum's MLE with a fixed seed,
    differs from the datum's version by more than a theta-free constant.
    """
    datum = model.check_data(datum)
    if isinstance(model, DiscreteUniformTriple):
        # integer location family: the implied prior is flat
        flat = lambda th: np.zeros(np.shape(np.atleast_1d(th)))  # noqa: E731
        vals = model.parameter_values(datum)
        grid = np.arange(vals[0] - 1, vals[-1] + 2, dtype=float)
        return ImpliedPrior(flat, nx.GridDensity(grid, np.ones_like(grid)), False,
                            {"route": "integer location"})
    if model.has(DISCRETE_PARAMETER):
        raise CapabilityError(f"{model.name}: parameter is an unordered label, "
                              "no P-value and hence no implied prior")

    def build(d):
        if ancillary:
            return _conditional_log_prior(model, d), conditional_density(model, d)
        t = model.statistic(d)
        return _marginal_log_prior(model, t, d.n), marginal_density(model, t, d.n)

    log_c0, cd = build(datum)
    g = cd.grid if grid is None else np.asarray(grid, dtype=float)
    lv = log_c0(g)
    ok = np.isfinite(lv)
    if not ok.any():
        raise IntegrabilityError("implied_prior: likelihood vanishes on the whole grid")
    if np.isnan(lv).any():
        warnings.warn(f"implied_prior: {int(np.isnan(lv).sum())} grid points excluded where "
                      "the likelihood is zero", RuntimeWarning, stacklevel=2)
    tab = np.where(ok, np.exp(np.where(ok, lv, 0.0) - lv[ok].max()), 0.0)
    density = nx.GridDensity(g, tab)

    # data dependence probe
    core = ok & (np.interp(g, cd.grid, cd.values) > 1e-3 * cd.values.max())
    dependent = False
    theta_hat = model.mle(datum)
    for k in range(N_PROBES):
        try:
            probe = model.simulate(theta_hat, datum.n, PROBE_SEED + k)
            if ancillary:
                plog = _conditional_log_prior(model, probe)
            else:
                plog = _marginal_log_prior(model, model.statistic(probe), probe.n)
            pv = plog(g)
        except Exception:  # degenerate probe sample
            continue
        mask = core & np.isfinite(pv)
        if mask.sum() < 5:
            continue
        if _spread(pv, lv, mask) > tol:
            dependent = True
            break
    return ImpliedPrior(log_c0, density, dependent,
                        {"model": model.describe(), "datum": datum.observations,
                         "route": "conditional" if ancillary else "marginal"})


def _full_grid(model, data, log_post, n_points):
    support = model.likelihood_support(data)
    if support is not None:
        return np.linspace(support[0], support[1], n_points), True
    center, scale = model.grid_hint(data)
    return nx.adaptive_grid(log_post, center, scale, model.lower, model.upper,
                            n_points=n_points), False


def full_confidence(prior: ImpliedPrior | None, model: ParametricModel, y, grid=None,
                    n_points: int = nx.DEFAULT_GRID_POINTS):
    """``c_f(theta) propto c0(theta) L(theta; y)``, normalized.

    ``prior=None`` means a flat prior. For a discrete parameter the result is
    an exact :class:`DiscreteConfidence` table.
    """
    y = model.check_data(y)
    if model.has(DISCRETE_PARAMETER):
        return _discrete_full(prior, model, y)

    def log_post(theta):
        theta = np.asarray(theta, dtype=float)
        ll = model.loglik_grid(theta, y)
        lp = np.zeros_like(theta) if prior is None else np.asarray(prior.log_evaluate(theta))
        bad = ~np.isfinite(lp) & np.isfinite(ll)
        if bad.any():
            lp = np.where(bad, -np.inf, lp)
        return ll + lp

    bounded = False
    if grid is None:
        grid, bounded = _full_grid(model, y, log_post, n_points)
    grid = np.asarray(grid, dtype=float)
    lv = log_post(grid)
    if np.isnan(lv).any():
        lv = np.where(np.isnan(lv), -np.inf, lv)
    if not np.isfinite(lv).any():
        raise IntegrabilityError("full_confidence: c0 * L vanishes on the grid")
    dens = nx.GridDensity.from_log(grid, lv)
    peak = dens.values.max()
    if not bounded and max(dens.values[0], dens.values[-1]) > 1e-6 * peak:
        raise IntegrabilityError("full_confidence: c0 * L does not decay at the grid ends; "
                                 "the product may not be integrable")
    return ConfidenceDistribution.from_density(
        "full", dens, {"model": model.describe(), "n": y.n,
                       "prior": None if prior is None else prior.source}, bounded)


def _discrete_full(prior, model, y) -> DiscreteConfidence:
    if not hasattr(model, "exact_likelihood"):
        raise CapabilityError(f"{model.name}: no exact likelihood table")
    if prior is None and not isinstance(model, DiscreteUniformTriple):
        raise CapabilityError(f"{model.name}: no implied prior exists for an unordered label")
    values = [v for v in model.parameter_values(y)]
    weights = [model.exact_likelihood(v, y) for v in values]
    keep = [(v, w) for v, w in zip(values, weights) if w > 0]
    total = sum(w for _, w in keep)
    return DiscreteConfidence("full", tuple(v for v, _ in keep),
                              tuple(w / total for _, w in keep),
                              {"model": model.describe(), "n": y.n})


def full_confidence_variants(model: ParametricModel, y, grid=None):
    """``c_fi`` for every choice of the observation seeding the implied prior."""
    y = model.check_data(y)
    out = []
    first = None
    for i in range(y.n):
        prior = implied_prior(model, y.subset(i))
        cd = full_confidence(prior, model, y, grid=first)
        if first is None:
            first = cd.grid
        out.append(cd)
    return out


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------

def default_split(gamma: float) -> tuple[float, float]:
    return (1.0 - gamma) / 2.0, (1.0 + gamma) / 2.0


def interval(cd: ConfidenceDistribution, gamma: float, split=None) -> ConfidenceInterval:
    """Interval with confidence mass ``gamma``: ``(Q(1 - g2), Q(1 - g1))``.

    ``split = (g1, g2)`` with ``g2 - g1 = gamma``; the default is equi-tailed.
    ``split = (0, gamma)`` gives the one-sided interval reaching the upper end.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"interval: gamma must lie in (0, 1), got {gamma}")
    g1, g2 = default_split(gamma) if split is None else split
    if abs((g2 - g1) - gamma) > 1e-12 or g1 < 0 or g2 > 1:
        raise DomainError(f"interval: split {split} incompatible with gamma={gamma}")
    return ConfidenceInterval(cd.quantile(1.0 - g2), cd.quantile(1.0 - g1), gamma, (g1, g2))


def confidence_of(cd: ConfidenceDistribution, ci: ConfidenceInterval | tuple) -> float:
    """Confidence mass of the interval under the tabulated density."""
    lo, hi = (ci.lower, ci.upper) if isinstance(ci, ConfidenceInterval) else ci
    return float(cd.cdf(hi) - cd.cdf(lo))


def floor_guess_coverage(theta: float) -> float:
    """Probability that ``floor(Y) = floor(theta)`` for ``Y ~ U[theta, theta + 1]``."""
    return 1.0 - (theta - math.floor(theta))
