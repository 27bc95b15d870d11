"""Common interface for parametric families."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import optimize as _optimize

from ..errors import BoundaryMLEError, CapabilityError, DomainError

# capability flags
SUFFICIENT_T = "has_sufficient_T"
T_LAW = "has_T_law"
ANCILLARY = "has_ancillary"
EXACT_CONDITIONAL = "has_exact_conditional"
DISCRETE_DATA = "discrete_data"
DISCRETE_PARAMETER = "discrete_parameter"
ANALYTIC_DENSITY = "has_analytic_c_m"


@dataclass(frozen=True)
class Dataset:
    """An ordered sample ``y = (y_1, ..., y_n)``."""

    observations: tuple

    def __post_init__(self):
        obs = self.observations
        if isinstance(obs, np.ndarray):
            obs = obs.tolist()
        obs = tuple(tuple(o) if isinstance(o, (list, tuple, np.ndarray)) else o for o in obs)
        if len(obs) < 1:
            raise DomainError("Dataset: need at least one observation")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return len(self.observations)

    def array(self) -> np.ndarray:
        return np.asarray(self.observations, dtype=float)

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "Dataset":
        if isinstance(idx, int):
            idx = [idx]
        return Dataset(tuple(self.observations[i] for i in idx))


def as_dataset(y) -> Dataset:
    if isinstance(y, Dataset):
        return y
    if np.isscalar(y):
        return Dataset((y,))
    return Dataset(tuple(y))


class ParametricModel:
    """A family ``p_theta(y)`` with an optional statistic ``T`` of known law.

    Subclasses override whichever of the optional methods their structure
    supports and list the matching flags in ``capabilities``. Everything is
    vectorized over ``theta`` where that is cheap.
    """

    name: str = "model"
    lower: float = -math.inf
    upper: float = math.inf
    capabilities: frozenset = frozenset()

    # -- helpers -----------------------------------------------------------

    def has(self, flag: str) -> bool:
        return flag in self.capabilities

    def require(self, flag: str, what: str):
        if flag not in self.capabilities:
            raise CapabilityError(f"{self.name}: {what} is not available for this model")

    def check_theta(self, theta):
        th = np.asarray(theta, dtype=float)
        if np.any(np.isnan(th)) or np.any(th <= self.lower) or np.any(th >= self.upper):
            raise DomainError(f"{self.name}: theta must lie in ({self.lower}, {self.upper})")
        return th

    def check_data(self, data: Dataset) -> Dataset:
        data = as_dataset(data)
        if not self.in_support(data):
            raise DomainError(f"{self.name}: observation outside sample space")
        return data

    def in_support(self, data: Dataset) -> bool:
        return bool(np.all(np.isfinite(data.array())))

    def params(self) -> dict[str, Any]:
        return {}

    def describe(self) -> str:
        p = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}({p})"

    # -- likelihood ----------------------------------------------------------

    def logpdf(self, y, theta):
        """Per-observation log density, broadcasting ``y`` against ``theta``."""
        raise NotImplementedError

    def log_likelihood(self, theta, data) -> float:
        data = self.check_data(data)
        self.check_theta(theta)
        return float(np.sum(self.logpdf(data.array(), float(theta))))

    def loglik_grid(self, grid, data) -> np.ndarray:
        """Log-likelihood evaluated at every point of ``grid``."""
        data = self.check_data(data)
        grid = np.asarray(grid, dtype=float)
        y = data.array()
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = self.logpdf(y[None, :], grid[:, None]).sum(axis=1)
        return np.where(np.isnan(vals), -np.inf, vals)

    def mle(self, data) -> float:
        """Maximize the log-likelihood numerically (bounded Brent after a grid scan)."""
        data = self.check_data(data)
        center, scale = self.grid_hint(data)
        lo = max(center - 30 * scale, self.lower + 1e-12 * max(1.0, abs(self.lower)))
        hi = min(center + 30 * scale, self.upper - 1e-12 * max(1.0, abs(self.upper)))
        grid = np.linspace(lo, hi, 4001)
        ll = self.loglik_grid(grid, data)
        i = int(np.argmax(ll))
        if i == 0 or i == len(grid) - 1:
            raise BoundaryMLEError(f"{self.name}: log-likelihood maximized at the search "
                                   f"boundary theta={grid[i]:.6g}")
        res = _optimize.minimize_scalar(lambda t: -self.log_likelihood(t, data),
                                        bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                        options={"xatol": 1e-12})
        return float(res.x)

    def grid_hint(self, data) -> tuple[float, float]:
        """A center and scale for the likelihood in theta, used to build grids."""
        raise NotImplementedError

    def likelihood_support(self, data):
        """Exact compact support of the likelihood, or ``None`` if unbounded."""
        return None

    # -- simulation ------------------------------------------------------------

    def sample(self, theta: float, size, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def simulate(self, theta: float, n: int, seed: int) -> Dataset:
        """``n`` independent draws, reproducible for fixed ``(theta, n, seed)``."""
        if n < 1:
            raise DomainError("simulate: n must be >= 1")
        self.check_theta(theta)
        rng = np.random.default_rng(seed)
        return Dataset(tuple(self.sample(theta, n, rng).tolist()))

    # -- statistic T and its law ---------------------------------------------

    def statistic(self, data) -> float:
        """The statistic ``T(y)`` whose right tail defines the marginal confidence."""
        raise CapabilityError(f"{self.name}: no statistic T defined")

    def statistic_batch(self, samples: np.ndarray) -> np.ndarray:
        return np.array([self.statistic(Dataset(tuple(s))) for s in samples])

    def tail_prob(self, t: float, theta, n: int = 1):
        """``P_theta(T >= t)`` for a sample of size ``n``."""
        raise CapabilityError(f"{self.name}: the law of T is not available")

    def tail_density(self, t: float, theta, n: int = 1):
        """Analytic ``d/dtheta P_theta(T >= t)``; ``None`` when not coded."""
        return None

    def t_loglik(self, t: float, theta, n: int = 1):
        """Log density of ``T`` at ``t`` up to theta-free terms: ``log L(theta; t)``."""
        if n != 1:
            raise CapabilityError(f"{self.name}: likelihood of T coded for n = 1 only")
        return self.logpdf(t, theta)

    def t_law_sizes(self) -> tuple | None:
        """Sample sizes for which ``tail_prob`` is exact (``None`` means all)."""
        return None

    def quantile(self, alpha: float, theta: float, n: int = 1) -> float:
        """``q_alpha(theta)`` with ``P_theta(T <= q) = alpha``."""
        raise CapabilityError(f"{self.name}: quantile q_alpha(theta) not available")

    # -- ancillaries and conditional laws ------------------------------------

    def ancillary(self, data):
        raise CapabilityError(f"{self.name}: no ancillary statistic")

    def conditional_tail(self, t: float, a, theta, n: int):
        """``P_theta(T >= t | A = a)`` from the exact conditional law."""
        raise CapabilityError(f"{self.name}: no exact conditional law")

    def conditional_statistic(self, data) -> float:
        """The statistic used together with the ancillary (defaults to T)."""
        return self.statistic(data)

    def __repr__(self) -> str:
        return self.describe()


def check_size(model: ParametricModel, n: int):
    sizes = model.t_law_sizes()
    if sizes is not None and n not in sizes:
        raise CapabilityError(f"{model.name}: the law of T is only coded for n in {sizes}")
