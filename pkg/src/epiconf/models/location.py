"""Location families and the two uniform examples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as _stats

from .. import numerics as nx
from ..errors import CapabilityError, DomainError
from .base import (ANALYTIC_DENSITY, ANCILLARY, EXACT_CONDITIONAL, SUFFICIENT_T, T_LAW,
                   ParametricModel, as_dataset)


@dataclass(frozen=True, repr=False)
class NormalLocation(ParametricModel):
    """``y_i ~ N(theta, 1)`` with ``T = mean(y)``."""

    name: str = "normal_location"
    capabilities: frozenset = frozenset({SUFFICIENT_T, T_LAW, ANCILLARY, EXACT_CONDITIONAL,
                                         ANALYTIC_DENSITY})

    def logpdf(self, y, theta):
        return nx.normal_logpdf(np.asarray(y) - theta)

    def mle(self, data) -> float:
        return float(np.mean(self.check_data(data).array()))

    def grid_hint(self, data):
        data = as_dataset(data)
        return float(np.mean(data.array())), 1.0 / math.sqrt(data.n)

    def sample(self, theta, size, rng):
        return theta + rng.standard_normal(size)

    def statistic(self, data) -> float:
        return float(np.mean(as_dataset(data).array()))

    def statistic_batch(self, samples):
        return np.mean(samples, axis=-1)

    def tail_prob(self, t, theta, n=1):
        return nx.normal_sf((t - np.asarray(theta, dtype=float)) * math.sqrt(n))

    def tail_density(self, t, theta, n=1):
        s = math.sqrt(n)
        return s * nx.normal_pdf((t - np.asarray(theta, dtype=float)) * s)

    def quantile(self, alpha, theta, n=1):
        return float(theta + nx.normal_quantile(alpha) / math.sqrt(n))

    def t_loglik(self, t, theta, n=1):
        return nx.normal_logpdf((t - np.asarray(theta, dtype=float)) * math.sqrt(n))

    def ancillary(self, data):
        y = as_dataset(data).array()
        return tuple(np.round(y - y.mean(), 15).tolist())

    def conditional_tail(self, t, a, theta, n):
        # the mean is independent of the residual configuration
        return self.tail_prob(t, theta, n)


_LOCATION_DENSITIES = {
    "normal": _stats.norm,
    "cauchy": _stats.cauchy,
    "logistic": _stats.logistic,
    "laplace": _stats.laplace,
}


@dataclass(frozen=True, repr=False)
class LocationFamily(ParametricModel):
    """``y_i ~ f(y - theta)`` for a known density ``f``.

    ``f`` is either a name in ``normal, cauchy, logistic, laplace, t`` or a
    callable log-density; ``cdf`` and ``scale_hint`` can accompany a callable.
    ``T`` is the single observation for ``n = 1``; for larger samples the exact
    conditional law of the MLE given the residual configuration is used.
    """

    f: str | Callable = "cauchy"
    df: float = 3.0
    cdf: Callable | None = None
    scale_hint: float = 1.0
    name: str = "location_family"
    capabilities: frozenset = frozenset({T_LAW, ANCILLARY, EXACT_CONDITIONAL, ANALYTIC_DENSITY})
    _logf: Callable = field(init=False, compare=False, default=None)
    _cdf: Callable = field(init=False, compare=False, default=None)

    def __post_init__(self):
        if callable(self.f):
            logf, cdf = self.f, self.cdf
        elif self.f == "t":
            dist = _stats.t(self.df)
            logf, cdf = dist.logpdf, dist.cdf
        elif self.f in _LOCATION_DENSITIES:
            dist = _LOCATION_DENSITIES[self.f]
            logf, cdf = dist.logpdf, dist.cdf
        else:
            raise DomainError(f"location_family: unknown density {self.f!r}")
        object.__setattr__(self, "_logf", logf)
        object.__setattr__(self, "_cdf", cdf)

    def params(self):
        return {"f": self.f if isinstance(self.f, str) else "custom"}

    def logpdf(self, y, theta):
        return self._logf(np.asarray(y) - theta)

    def grid_hint(self, data):
        y = as_dataset(data).array()
        return float(np.median(y)), self.scale_hint * max(1.0, float(np.ptp(y)))

    def sample(self, theta, size, rng):
        if callable(self.f):
            raise CapabilityError("location_family: cannot sample a user-supplied density")
        dist = _stats.t(self.df) if self.f == "t" else _LOCATION_DENSITIES[self.f]
        return theta + dist.rvs(size=size, random_state=rng)

    def statistic(self, data) -> float:
        data = as_dataset(data)
        return float(data.array()[0]) if data.n == 1 else self.mle(data)

    def t_law_sizes(self):
        return (1,)

    def tail_prob(self, t, theta, n=1):
        if n != 1:
            raise CapabilityError("location_family: marginal law of T coded for n = 1 only")
        if self._cdf is None:
            raise CapabilityError("location_family: no cdf supplied for the density")
        return 1.0 - self._cdf(t - np.asarray(theta, dtype=float))

    def tail_density(self, t, theta, n=1):
        if n != 1:
            return None
        return np.exp(self._logf(t - np.asarray(theta, dtype=float)))

    def quantile(self, alpha, theta, n=1):
        if self._cdf is None or n != 1:
            raise CapabilityError("location_family: quantile needs a cdf and n = 1")
        s = self.scale_hint
        lo, hi = -s, s
        while self._cdf(lo) > alpha:
            lo *= 2
        while self._cdf(hi) < alpha:
            hi *= 2
        return float(theta + nx.find_root(lambda u: self._cdf(u) - alpha, lo, hi))

    def ancillary(self, data):
        y = np.sort(as_dataset(data).array())
        return tuple((y - y[0]).tolist())

    def conditional_statistic(self, data):
        return float(np.min(as_dataset(data).array()))

    def conditional_tail(self, t, a, theta, n):
        """``P_theta(Y_(1) >= t | a)`` given the order-statistic differences ``a``.

        Writing ``y_(i) = u + a_i``, the minimum ``u`` has conditional density
        proportional to ``prod f(u + a_i - theta)``. Its normalizer is left
        implicit by the theory and found here by quadrature.
        """
        a = np.asarray(a, dtype=float)
        v0 = -float(np.median(a))
        ref = float(np.sum(self._logf(v0 + a)))

        def g(v):
            return math.exp(float(np.sum(self._logf(v + a))) - ref)

        def upper_mass(lo):
            if lo >= v0:
                return nx.integrate(g, lo, np.inf, rel_tol=1e-10)
            return (nx.integrate(g, lo, v0, rel_tol=1e-10)
                    + nx.integrate(g, v0, np.inf, rel_tol=1e-10))

        total = (nx.integrate(g, -np.inf, v0, rel_tol=1e-10)
                 + nx.integrate(g, v0, np.inf, rel_tol=1e-10))
        thetas = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.array([upper_mass(t - th) / total for th in thetas])
        return out if np.ndim(theta) else float(out[0])


@dataclass(frozen=True, repr=False)
class UniformShift(ParametricModel):
    """``y ~ U[theta, theta + 1]``."""

    name: str = "uniform_shift"
    capabilities: frozenset = frozenset({T_LAW, ANCILLARY, EXACT_CONDITIONAL, ANALYTIC_DENSITY})

    def logpdf(self, y, theta):
        y = np.asarray(y, dtype=float)
        inside = (y >= theta) & (y <= theta + 1)
        return np.where(inside, 0.0, -np.inf)

    def likelihood_support(self, data):
        y = as_dataset(data).array()
        lo, hi = float(y.max() - 1.0), float(y.min())
        if lo > hi:
            raise DomainError("uniform_shift: sample range exceeds 1")
        return lo, hi

    def mle(self, data):
        lo, hi = self.likelihood_support(data)
        return 0.5 * (lo + hi)

    def grid_hint(self, data):
        lo, hi = self.likelihood_support(data)
        return 0.5 * (lo + hi), max(hi - lo, 1e-6)

    def sample(self, theta, size, rng):
        return theta + rng.random(size)

    def statistic(self, data):
        y = as_dataset(data).array()
        return float(y[0]) if y.size == 1 else float(y.min())

    def t_law_sizes(self):
        return (1,)

    def tail_prob(self, t, theta, n=1):
        if n != 1:
            raise CapabilityError("uniform_shift: law of T coded for n = 1")
        return np.clip(np.asarray(theta, dtype=float) + 1.0 - t, 0.0, 1.0)

    def tail_density(self, t, theta, n=1):
        th = np.asarray(theta, dtype=float)
        return np.where((th >= t - 1.0) & (th <= t), 1.0, 0.0)

    def quantile(self, alpha, theta, n=1):
        return float(theta + alpha)

    def ancillary(self, data):
        """Fractional part of the observation (n = 1)."""
        y = as_dataset(data).array()
        if y.size != 1:
            raise CapabilityError("uniform_shift: the fractional-part ancillary is for n = 1")
        return float(y[0] - math.floor(y[0]))

    def conditional_tail(self, t, a, theta, n=1):
        """Given ``<y> = a`` the observation is a deterministic function of theta.

        ``y(theta)`` is the unique point of ``[theta, theta + 1)`` with fractional
        part ``a``, so ``P_theta(Y >= t | a)`` is the indicator ``theta > t - 1``.
        """
        th = np.asarray(theta, dtype=float)
        y_theta = np.floor(th) + a + np.where(a < th - np.floor(th), 1.0, 0.0)
        return np.where(y_theta >= t - 1e-12, 1.0, 0.0)

    @staticmethod
    def floor_guess(y: float) -> int:
        return math.floor(y)


@dataclass(frozen=True, repr=False)
class UniformWidth2(ParametricModel):
    """``y_i ~ U[theta - 1, theta + 1]`` with the sample range as ancillary."""

    name: str = "uniform_width2"
    capabilities: frozenset = frozenset({T_LAW, ANCILLARY, EXACT_CONDITIONAL, ANALYTIC_DENSITY})

    def logpdf(self, y, theta):
        y = np.asarray(y, dtype=float)
        inside = (y >= theta - 1) & (y <= theta + 1)
        return np.where(inside, -math.log(2.0), -np.inf)

    def likelihood_support(self, data):
        y = as_dataset(data).array()
        lo, hi = float(y.max() - 1.0), float(y.min() + 1.0)
        if lo > hi:
            raise DomainError("uniform_width2: sample range exceeds 2")
        return lo, hi

    def mle(self, data):
        lo, hi = self.likelihood_support(data)
        return 0.5 * (lo + hi)

    def grid_hint(self, data):
        lo, hi = self.likelihood_support(data)
        return 0.5 * (lo + hi), max(hi - lo, 1e-6)

    def sample(self, theta, size, rng):
        return theta - 1.0 + 2.0 * rng.random(size)

    def statistic(self, data):
        y = as_dataset(data).array()
        return float(y[0]) if y.size == 1 else 0.5 * float(y.min() + y.max())

    def statistic_batch(self, samples):
        return 0.5 * (samples.min(axis=-1) + samples.max(axis=-1))

    def t_law_sizes(self):
        return (1,)

    def tail_prob(self, t, theta, n=1):
        if n != 1:
            raise CapabilityError("uniform_width2: law of T coded for n = 1")
        return np.clip((np.asarray(theta, dtype=float) + 1.0 - t) / 2.0, 0.0, 1.0)

    def tail_density(self, t, theta, n=1):
        th = np.asarray(theta, dtype=float)
        return np.where((th >= t - 1.0) & (th <= t + 1.0), 0.5, 0.0)

    def quantile(self, alpha, theta, n=1):
        return float(theta - 1.0 + 2.0 * alpha)

    def ancillary(self, data):
        y = as_dataset(data).array()
        return float(y.max() - y.min())

    def conditional_statistic(self, data):
        y = as_dataset(data).array()
        return 0.5 * float(y.min() + y.max())

    def conditional_tail(self, t, a, theta, n):
        """Given range ``a`` the midrange is uniform on ``[theta - 1 + a/2, theta + 1 - a/2]``."""
        half = 1.0 - a / 2.0
        th = np.asarray(theta, dtype=float)
        if half <= 0:
            return np.where(th >= t, 1.0, 0.0)
        return np.clip((th + half - t) / (2 * half), 0.0, 1.0)
