"""Models with discrete data: the integer-shift triple, binomial, negative binomial
and the two-by-four table with two parameter values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import special as _special

from ..errors import BoundaryMLEError, CapabilityError, DomainError
from .base import (ANCILLARY, DISCRETE_DATA, DISCRETE_PARAMETER, EXACT_CONDITIONAL,
                   Dataset, ParametricModel, as_dataset)


@dataclass(frozen=True, repr=False)
class DiscreteUniformTriple(ParametricModel):
    """``y_i`` uniform on ``{theta - 1, theta, theta + 1}`` for integer ``theta``."""

    name: str = "discrete_uniform_triple"
    capabilities: frozenset = frozenset({ANCILLARY, EXACT_CONDITIONAL, DISCRETE_DATA,
                                         DISCRETE_PARAMETER})

    def check_theta(self, theta):
        th = np.asarray(theta, dtype=float)
        if np.any(th != np.round(th)):
            raise DomainError(f"{self.name}: theta must be an integer")
        return th

    def in_support(self, data):
        y = data.array()
        return bool(np.all(y == np.round(y)))

    def pmf(self, y, theta) -> Fraction:
        return Fraction(1, 3) if abs(int(y) - int(theta)) <= 1 else Fraction(0)

    def logpdf(self, y, theta):
        d = np.abs(np.asarray(y, dtype=float) - np.asarray(theta, dtype=float))
        return np.where(d <= 1, -math.log(3.0), -np.inf)

    def parameter_values(self, data) -> list[int]:
        """The integers with non-zero likelihood."""
        y = as_dataset(data).array().astype(int)
        return list(range(int(y.max()) - 1, int(y.min()) + 2))

    def exact_likelihood(self, theta, data) -> Fraction:
        out = Fraction(1)
        for y in as_dataset(data).observations:
            out *= self.pmf(y, theta)
        return out

    def mle(self, data):
        """The likelihood is flat on its support; return the mean moved into it.

        Halves are resolved downward.
        """
        data = self.check_data(data)
        support = self.parameter_values(data)
        if not support:
            raise BoundaryMLEError(f"{self.name}: empty likelihood support")
        ybar = Fraction(sum(int(v) for v in data.observations), data.n)
        return min(support, key=lambda th: (abs(th - ybar), th))

    def grid_hint(self, data):
        s = self.parameter_values(data)
        return 0.5 * (s[0] + s[-1]), 1.0

    def sample(self, theta, size, rng):
        return int(theta) + rng.integers(-1, 2, size)

    def simulate(self, theta, n, seed):
        d = super().simulate(theta, n, seed)
        return Dataset(tuple(int(v) for v in d.observations))

    def ancillary(self, data):
        """Sample range ``y_(n) - y_(1)``."""
        y = [int(v) for v in as_dataset(data).observations]
        return max(y) - min(y)

    def statistic(self, data):
        return float(np.mean(as_dataset(data).array()))

    def conditional_tail(self, t, a, theta, n=2):
        """``P_theta(mean >= t | range = a)`` by enumeration of the 3^n samples."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = []
        for v in th:
            num = den = Fraction(0)
            for d, p in self.outcomes(int(v), n):
                if self.ancillary(d) == a:
                    den += p
                    if Fraction(sum(d.observations), n) >= Fraction(t).limit_denominator(10**6):
                        num += p
            out.append(num / den if den else Fraction(0))
        return out if np.ndim(theta) else out[0]

    def outcomes(self, theta: int, n: int = 2):
        """Every sample of size ``n`` at ``theta`` with its exact probability."""
        theta = int(theta)
        p = Fraction(1, 3) ** n
        for ys in product((theta - 1, theta, theta + 1), repeat=n):
            yield Dataset(ys), p


@dataclass(frozen=True, repr=False)
class Binomial(ParametricModel):
    """``Y ~ Bin(n, theta)``; an observation is the success count."""

    n: int = 10
    name: str = "binomial"
    lower: float = 0.0
    upper: float = 1.0
    capabilities: frozenset = frozenset({DISCRETE_DATA})

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("binomial: n must be a positive integer")

    def params(self):
        return {"n": self.n}

    def in_support(self, data):
        y = data.array()
        return bool(np.all((y == np.round(y)) & (y >= 0) & (y <= self.n)))

    def logpdf(self, y, theta):
        y = np.asarray(y, dtype=float)
        theta = np.asarray(theta, dtype=float)
        logc = _special.gammaln(self.n + 1) - _special.gammaln(y + 1) - _special.gammaln(self.n - y + 1)
        return logc + _special.xlogy(y, theta) + _special.xlog1py(self.n - y, -theta)

    def pmf(self, y, theta):
        return np.exp(self.logpdf(y, theta))

    def mle(self, data):
        y = self.check_data(data).array()
        return float(y.sum() / (self.n * y.size))

    def grid_hint(self, data):
        p = min(max(self.mle(data), 0.5 / self.n), 1 - 0.5 / self.n)
        return p, math.sqrt(p * (1 - p) / self.n)

    def sample(self, theta, size, rng):
        return rng.binomial(self.n, theta, size)

    def statistic(self, data):
        return float(as_dataset(data).array()[0])

    def quantile(self, alpha, theta, n=1):
        raise CapabilityError("binomial: q_alpha(theta) requires a continuous statistic")


@dataclass(frozen=True, repr=False)
class NegativeBinomial(ParametricModel):
    """Number of trials needed for ``y`` successes; an observation is that count."""

    y: int = 10
    name: str = "negative_binomial"
    lower: float = 0.0
    upper: float = 1.0
    capabilities: frozenset = frozenset({DISCRETE_DATA})

    def __post_init__(self):
        if int(self.y) != self.y or self.y < 1:
            raise DomainError("negative_binomial: y must be a positive integer")

    def params(self):
        return {"y": self.y}

    def in_support(self, data):
        n = data.array()
        return bool(np.all((n == np.round(n)) & (n >= self.y)))

    def logpdf(self, n, theta):
        n = np.asarray(n, dtype=float)
        theta = np.asarray(theta, dtype=float)
        y = self.y
        logc = _special.gammaln(n) - _special.gammaln(y) - _special.gammaln(n - y + 1)
        return logc + _special.xlogy(y, theta) + _special.xlog1py(n - y, -theta)

    def pmf(self, n, theta):
        return np.exp(self.logpdf(n, theta))

    def mle(self, data):
        n = self.check_data(data).array()
        return float(self.y * n.size / n.sum())

    def grid_hint(self, data):
        p = min(self.mle(data), 1 - 0.5 / self.y)
        return p, p * math.sqrt((1 - p) / self.y) + 1e-3

    def sample(self, theta, size, rng):
        return self.y + rng.negative_binomial(self.y, theta, size)

    def statistic(self, data):
        return float(as_dataset(data).array()[0])

    def quantile(self, alpha, theta, n=1):
        raise CapabilityError("negative_binomial: q_alpha(theta) requires a continuous statistic")


EVANS_TABLE = {
    1: {(1, 1): Fraction(1, 6), (1, 2): Fraction(1, 6), (2, 1): Fraction(2, 6), (2, 2): Fraction(2, 6)},
    2: {(1, 1): Fraction(1, 12), (1, 2): Fraction(3, 12), (2, 1): Fraction(5, 12), (2, 2): Fraction(3, 12)},
}


@dataclass(frozen=True, repr=False)
class Evans2x2(ParametricModel):
    """A pair ``(y1, y2)`` in ``{1, 2}^2`` with parameter ``theta`` in ``{1, 2}``.

    Both coordinates are ancillary, and each one alone recovers the full
    likelihood when conditioned on.
    """

    name: str = "evans_2x2"
    capabilities: frozenset = frozenset({ANCILLARY, EXACT_CONDITIONAL, DISCRETE_DATA,
                                         DISCRETE_PARAMETER})

    thetas = (1, 2)
    cells = ((1, 1), (1, 2), (2, 1), (2, 2))

    def check_theta(self, theta):
        if theta not in self.thetas:
            raise DomainError(f"{self.name}: theta must be 1 or 2")
        return theta

    def in_support(self, data):
        return all(tuple(o) in self.cells for o in data.observations)

    def pmf(self, cell, theta) -> Fraction:
        self.check_theta(theta)
        return EVANS_TABLE[theta][tuple(int(v) for v in cell)]

    def logpdf(self, y, theta):
        return math.log(self.pmf(y, theta))

    def log_likelihood(self, theta, data):
        data = self.check_data(data)
        return float(sum(self.logpdf(o, theta) for o in data.observations))

    def exact_likelihood(self, theta, data) -> Fraction:
        data = self.check_data(data)
        out = Fraction(1)
        for o in data.observations:
            out *= self.pmf(o, theta)
        return out

    def parameter_values(self, data=None):
        return list(self.thetas)

    def mle(self, data):
        data = self.check_data(data)
        return max(self.thetas, key=lambda th: (self.exact_likelihood(th, data), -th))

    def grid_hint(self, data):
        return 1.5, 1.0

    def sample(self, theta, size, rng):
        self.check_theta(theta)
        probs = np.array([float(EVANS_TABLE[theta][c]) for c in self.cells])
        idx = rng.choice(len(self.cells), size=size, p=probs)
        return np.array(self.cells)[idx]

    def simulate(self, theta, n, seed):
        rng = np.random.default_rng(seed)
        return Dataset(tuple(tuple(int(v) for v in c) for c in self.sample(theta, n, rng)))

    def ancillary(self, data, which: int = 1):
        """Coordinate ``which`` (1 or 2) of the single observation."""
        cell = as_dataset(data).observations[0]
        return int(cell[which - 1])

    def outcomes(self, theta: int):
        for c in self.cells:
            yield Dataset((c,)), EVANS_TABLE[theta][c]
