"""Exponential-family examples: gamma shape, N(theta, theta) and N(theta, theta^2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _special

from .. import numerics as nx
from ..errors import BoundaryMLEError, CapabilityError, DomainError
from .base import (ANALYTIC_DENSITY, ANCILLARY, EXACT_CONDITIONAL, SUFFICIENT_T, T_LAW,
                   Dataset, ParametricModel, as_dataset)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0      # k+
GOLDEN_INV = (math.sqrt(5.0) - 1.0) / 2.0  # k-, equal to 1/k+


def _root_bracket(g, lo, hi, grow=2.0, max_iter=200):
    """Expand ``hi`` geometrically until ``g`` changes sign on ``[lo, hi]``."""
    glo = g(lo)
    for _ in range(max_iter):
        if np.sign(g(hi)) != np.sign(glo):
            return lo, hi
        hi *= grow
    raise BoundaryMLEError("no sign change found while bracketing")


# ---------------------------------------------------------------------------
# gamma with mean one
# ---------------------------------------------------------------------------

def gamma_t(y):
    """Sufficient per-observation statistic ``t(y) = log y - y``."""
    y = np.asarray(y, dtype=float)
    return np.log(y) - y


def gamma_log_partition(theta):
    """``A(theta) = log Gamma(theta) - theta log theta``."""
    theta = np.asarray(theta, dtype=float)
    return _special.gammaln(theta) - theta * np.log(theta)


def gamma_t_roots(t: float) -> tuple[float, float]:
    """The two solutions ``y_lo < 1 < y_hi`` of ``log y - y = t`` for ``t < -1``."""
    if not t < -1.0:
        raise DomainError(f"gamma_t_roots: need t < -1, got {t}")
    # work on u = log y, where u - exp(u) = t
    g = lambda u: u - math.exp(u) - t  # noqa: E731
    u_lo = nx.find_root(g, t, 0.0, tol=1e-14)
    u_hi = nx.find_root(g, 0.0, math.log(1.0 - t) + 1.0, tol=1e-14)
    return math.exp(u_lo), math.exp(u_hi)


@dataclass(frozen=True, repr=False)
class GammaShape(ParametricModel):
    """Gamma with shape ``theta`` and rate ``theta`` (mean one).

    ``sum t(y_i)`` is sufficient. For a single observation ``T = t(y_1)`` has an
    exact tail through the regularized incomplete gamma function.
    """

    name: str = "gamma_shape"
    lower: float = 0.0
    capabilities: frozenset = frozenset({SUFFICIENT_T, T_LAW})

    def in_support(self, data):
        y = data.array()
        return bool(np.all(np.isfinite(y)) and np.all(y > 0))

    def logpdf(self, y, theta):
        y = np.asarray(y, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return theta * gamma_t(y) - np.log(y) - gamma_log_partition(theta)

    @staticmethod
    def loglik_from_sum(theta, n: int, sum_t: float):
        """Log-likelihood through the sufficient statistic (theta-free terms dropped)."""
        return np.asarray(theta, dtype=float) * sum_t - n * gamma_log_partition(theta)

    @staticmethod
    def mle_from_sum(n: int, sum_t: float) -> float:
        """Root of ``n psi(theta) - n log theta - n = sum t``."""
        if not sum_t < -n:
            raise BoundaryMLEError(f"gamma_shape: need sum t < -n for an interior MLE "
                                   f"(got sum t={sum_t}, n={n})")
        g = lambda th: n * (_special.digamma(th) - math.log(th) - 1.0) - sum_t  # noqa: E731
        lo = 1e-8
        lo, hi = _root_bracket(g, lo, 1.0)
        return nx.find_root(g, lo, hi, tol=1e-14)

    def mle(self, data):
        data = self.check_data(data)
        return self.mle_from_sum(data.n, float(np.sum(gamma_t(data.array()))))

    @staticmethod
    def info(theta_hat: float, n: int) -> float:
        return n * (float(_special.polygamma(1, theta_hat)) - 1.0 / theta_hat)

    @classmethod
    def dataset_from_sum(cls, n: int, sum_t: float) -> Dataset:
        """A sample of size ``n`` with the given ``sum t``: ``n`` copies of the root above one."""
        _, y_hi = gamma_t_roots(sum_t / n)
        return Dataset(tuple([y_hi] * n))

    def grid_hint(self, data):
        data = as_dataset(data)
        th = self.mle(data)
        return th, 1.0 / math.sqrt(self.info(th, data.n))

    def sample(self, theta, size, rng):
        return rng.gamma(theta, 1.0 / theta, size)

    def statistic(self, data):
        return float(np.sum(gamma_t(as_dataset(data).array())))

    def statistic_batch(self, samples):
        return gamma_t(samples).sum(axis=-1)

    def t_law_sizes(self):
        return (1,)

    def tail_prob(self, t, theta, n=1):
        if n != 1:
            raise CapabilityError("gamma_shape: exact law of T coded for n = 1 only")
        theta = np.asarray(theta, dtype=float)
        if t >= -1.0:
            return np.zeros_like(theta)
        y_lo, y_hi = gamma_t_roots(t)
        return _special.gammainc(theta, theta * y_hi) - _special.gammainc(theta, theta * y_lo)

    def t_loglik(self, t, theta, n=1):
        return self.loglik_from_sum(theta, n, t)

    def quantile(self, alpha, theta, n=1):
        if not 0.0 < alpha < 1.0:
            raise DomainError("quantile: alpha must lie in (0, 1)")
        # P(T <= q) = 1 - tail(q) is increasing in q on (-inf, -1)
        g = lambda q: 1.0 - float(self.tail_prob(q, theta)) - alpha  # noqa: E731
        lo = -2.0
        while g(lo) > 0:
            lo *= 2.0
        return nx.find_root(g, lo, -1.0 - 1e-15, tol=1e-13)


# ---------------------------------------------------------------------------
# N(theta, theta)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, repr=False)
class NormalMeanEqVar(ParametricModel):
    """``y_i ~ N(theta, theta)`` for ``theta > 0``; ``T = sum y_i^2`` is sufficient."""

    name: str = "normal_mean_eq_var"
    lower: float = 0.0
    capabilities: frozenset = frozenset({SUFFICIENT_T, T_LAW, ANALYTIC_DENSITY})

    def logpdf(self, y, theta):
        theta = np.asarray(theta, dtype=float)
        return nx.normal_logpdf((np.asarray(y) - theta) / np.sqrt(theta)) - 0.5 * np.log(theta)

    def mle(self, data):
        data = self.check_data(data)
        s2 = float(np.sum(data.array() ** 2))
        if s2 == 0:
            raise BoundaryMLEError("normal_mean_eq_var: all observations zero, MLE at 0")
        return 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * s2 / data.n))

    def grid_hint(self, data):
        data = as_dataset(data)
        th = self.mle(data)
        return th, 1.0 / math.sqrt(data.n * (1.0 / th + 0.5 / th ** 2))

    def sample(self, theta, size, rng):
        return theta + math.sqrt(theta) * rng.standard_normal(size)

    def statistic(self, data):
        return float(np.sum(as_dataset(data).array() ** 2))

    def statistic_batch(self, samples):
        return np.sum(samples ** 2, axis=-1)

    def tail_prob(self, t, theta, n=1):
        arr = np.asarray(theta, dtype=float)
        flat = np.array([float(nx.noncentral_chisq_sf(t / th, n, n * th)) for th in arr.ravel()])
        return flat.reshape(arr.shape) if arr.ndim else float(flat[0])

    def tail_density(self, t, theta, n=1):
        if n != 1:
            return None
        s = math.sqrt(t)
        theta = np.asarray(theta, dtype=float)
        rt = np.sqrt(theta)
        u = (s - theta) / rt
        v = (-s - theta) / rt
        return (0.5 * nx.normal_pdf(u) * (s / (theta * rt) + 1.0 / rt)
                + 0.5 * nx.normal_pdf(v) * (s / (theta * rt) - 1.0 / rt))

    def t_loglik(self, t, theta, n=1):
        arr = np.asarray(theta, dtype=float)
        flat = np.array([float(nx.noncentral_chisq_logpdf(t / th, n, n * th)) - math.log(th)
                         for th in arr.ravel()])
        return flat.reshape(arr.shape) if arr.ndim else float(flat[0])

    def quantile(self, alpha, theta, n=1):
        if not 0.0 < alpha < 1.0:
            raise DomainError("quantile: alpha must lie in (0, 1)")
        g = lambda x: float(nx.noncentral_chisq_cdf(x, n, n * theta)) - alpha  # noqa: E731
        hi = max(1.0, 2.0 * (n + n * theta))
        while g(hi) < 0:
            hi *= 2.0
        return theta * nx.find_root(g, 0.0, hi, tol=1e-13)


# ---------------------------------------------------------------------------
# N(theta, theta^2)
# ---------------------------------------------------------------------------

def curved_mle(s1: float, s2: float, n: int) -> float:
    return (-s1 + math.sqrt(s1 * s1 + 4.0 * n * s2)) / (2.0 * n)


def curved_b(a: float, n: int) -> float:
    """``b = a^2 + a sqrt(a^2 + 4n)`` in the (MLE, ancillary) parametrization."""
    return a * a + a * math.sqrt(a * a + 4.0 * n)


@dataclass(frozen=True, repr=False)
class CurvedNormal(ParametricModel):
    """``y_i ~ N(theta, theta^2)`` for ``theta > 0``.

    ``statistic`` selects the single-observation statistic behind the marginal
    confidence: ``"mle"`` uses the MLE from ``y_1``, ``"y"`` uses ``y_1`` itself
    (which does not give a proper confidence distribution). The ancillary is
    ``a = sum y / sqrt(sum y^2)`` and the conditional statistic ``sqrt(sum y^2)``.
    """

    statistic_kind: str = "mle"
    name: str = "curved_normal"
    lower: float = 0.0
    capabilities: frozenset = frozenset({T_LAW, ANCILLARY, EXACT_CONDITIONAL, ANALYTIC_DENSITY})

    def __post_init__(self):
        if self.statistic_kind not in ("mle", "y"):
            raise DomainError(f"curved_normal: statistic must be 'mle' or 'y', "
                              f"got {self.statistic_kind!r}")

    def params(self):
        return {"statistic": self.statistic_kind}

    def logpdf(self, y, theta):
        theta = np.asarray(theta, dtype=float)
        return nx.normal_logpdf((np.asarray(y) - theta) / theta) - np.log(theta)

    def sums(self, data) -> tuple[float, float, int]:
        y = as_dataset(data).array()
        return float(y.sum()), float((y ** 2).sum()), y.size

    def mle(self, data):
        data = self.check_data(data)
        s1, s2, n = self.sums(data)
        if s2 == 0:
            raise BoundaryMLEError("curved_normal: all observations zero")
        return curved_mle(s1, s2, n)

    def info_at_mle(self, data) -> float:
        s1, s2, n = self.sums(data)
        th = curved_mle(s1, s2, n)
        return (curved_b(s1 / math.sqrt(s2), n) + 4 * n) / (2 * th * th)

    def score(self, theta, data) -> float:
        s1, s2, n = self.sums(data)
        return -n / theta + s2 / theta ** 3 - s1 / theta ** 2

    def observed_info(self, theta, data) -> float:
        s1, s2, n = self.sums(data)
        return -n / theta ** 2 + 3 * s2 / theta ** 4 - 2 * s1 / theta ** 3

    def grid_hint(self, data):
        th = self.mle(data)
        return th, 1.0 / math.sqrt(self.info_at_mle(data))

    def sample(self, theta, size, rng):
        return theta + theta * rng.standard_normal(size)

    def statistic(self, data):
        data = as_dataset(data)
        y1 = float(data.array()[0]) if data.n == 1 else None
        if y1 is None:
            return self.mle(data)
        if self.statistic_kind == "y":
            return y1
        return curved_mle(y1, y1 * y1, 1)

    def t_law_sizes(self):
        return (1,)

    def tail_prob(self, t, theta, n=1):
        if n != 1:
            raise CapabilityError("curved_normal: marginal law of T coded for n = 1 only")
        theta = np.asarray(theta, dtype=float)
        if self.statistic_kind == "y":
            return nx.normal_sf(t / theta - 1.0)
        r = t / theta
        return nx.normal_sf(GOLDEN * r - 1.0) + nx.normal_cdf(-GOLDEN_INV * r - 1.0)

    def tail_density(self, t, theta, n=1):
        if n != 1:
            return None
        theta = np.asarray(theta, dtype=float)
        if self.statistic_kind == "y":
            return nx.normal_pdf(t / theta - 1.0) * t / theta ** 2
        r = t / theta
        return (nx.normal_pdf(GOLDEN * r - 1.0) * GOLDEN
                + nx.normal_pdf(-GOLDEN_INV * r - 1.0) * GOLDEN_INV) * t / theta ** 2

    def t_loglik(self, t, theta, n=1):
        """Log density of the single-observation statistic at ``t``."""
        theta = np.asarray(theta, dtype=float)
        if self.statistic_kind == "y":
            return self.logpdf(t, theta)
        r = t / theta
        dens = (nx.normal_pdf(GOLDEN * r - 1.0) * GOLDEN
                + nx.normal_pdf(-GOLDEN_INV * r - 1.0) * GOLDEN_INV) / theta
        with np.errstate(divide="ignore"):
            return np.log(dens)

    def quantile(self, alpha, theta, n=1):
        if n != 1:
            raise CapabilityError("curved_normal: quantile coded for n = 1 only")
        if self.statistic_kind == "y":
            return float(theta * (1.0 + nx.normal_quantile(alpha)))
        g = lambda q: 1.0 - float(self.tail_prob(q, 1.0)) - alpha  # noqa: E731
        hi = 1.0
        while g(hi) < 0:
            hi *= 2.0
        return theta * nx.find_root(g, 0.0, hi, tol=1e-13)

    def ancillary(self, data):
        s1, s2, _ = self.sums(data)
        return s1 / math.sqrt(s2)

    def conditional_statistic(self, data):
        _, s2, _ = self.sums(data)
        return math.sqrt(s2)

    def conditional_tail(self, t, a, theta, n):
        from ..asymptotics import hinkley_conditional_pvalue
        return hinkley_conditional_pvalue(theta, t, a, n)

    def conditional_tail_density(self, t, a, theta, n):
        from ..asymptotics import hinkley_conditional_density
        return hinkley_conditional_density(theta, t, a, n)
