"""Higher-order likelihood approximations and exact conditional laws.

* ``r*`` P-values from the signed likelihood root and the Wald statistic.
* The exact conditional density of ``w = sqrt(sum y^2) / theta`` given the
  ancillary ``a = sum y / sqrt(sum y^2)`` in the ``N(theta, theta^2)`` model.
* The ``p*`` approximation to the conditional density of the MLE.
* The one-sided score test with observed information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import numerics as nx
from .confidence import ConfidenceDistribution
from .errors import CapabilityError, DomainError
from .models import CurvedNormal, GammaShape, ParametricModel, curved_b

RSTAR_SWITCH = 1e-4
RSTAR_MASK = 1e-3
HINKLEY_TAIL = 12.0


# ---------------------------------------------------------------------------
# r*
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LikelihoodSummary:
    """MLE, likelihood-ratio statistic and observed information at the MLE."""

    theta_hat: float
    w: Callable[[np.ndarray], np.ndarray]
    info: float
    n: int

    def __post_init__(self):
        if not self.info > 0:
            raise DomainError(f"LikelihoodSummary: observed information must be > 0, got {self.info}")

    @classmethod
    def from_model(cls, model: ParametricModel, data) -> "LikelihoodSummary":
        """Generic summary with observed information by a five-point second difference."""
        data = model.check_data(data)
        th = model.mle(data)
        l_hat = model.log_likelihood(th, data)
        h = 1e-3 * max(abs(th), 1e-3)
        ll = lambda x: model.log_likelihood(x, data)  # noqa: E731
        d2 = (-ll(th + 2 * h) + 16 * ll(th + h) - 30 * l_hat + 16 * ll(th - h) - ll(th - 2 * h)) / (12 * h * h)

        def w(theta):
            return 2.0 * (l_hat - model.loglik_grid(np.atleast_1d(theta), data))
        return cls(th, w, -d2, data.n)


def gamma_loglik(theta, n: int, sum_t: float):
    """``theta * sum t - n log Gamma(theta) + n theta log theta``."""
    return GammaShape.loglik_from_sum(theta, n, sum_t)


def gamma_w(theta, theta_hat: float, n: int, sum_t: float):
    """Likelihood-ratio statistic ``2 {l(theta_hat) - l(theta)}`` in the gamma model."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or theta_hat <= 0:
        raise DomainError("gamma_w: theta and theta_hat must be > 0")
    return 2.0 * (gamma_loglik(theta_hat, n, sum_t) - gamma_loglik(theta, n, sum_t))


def gamma_info(theta_hat: float, n: int) -> float:
    """Observed information ``n {psi'(theta_hat) - 1/theta_hat}``."""
    if theta_hat <= 0:
        raise DomainError("gamma_info: theta_hat must be > 0")
    return GammaShape.info(theta_hat, n)


def gamma_summary(n: int, sum_t: float) -> LikelihoodSummary:
    th = GammaShape.mle_from_sum(n, sum_t)
    return LikelihoodSummary(th, lambda theta: gamma_w(theta, th, n, sum_t), gamma_info(th, n), n)


def rstar(summary: LikelihoodSummary, theta):
    """``(r*, flagged)``; ``flagged`` marks points where ``|r| < 1e-4`` and ``r* = r``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    w = np.maximum(np.asarray(summary.w(theta), dtype=float), 0.0)
    diff = summary.theta_hat - theta
    r = np.sign(diff) * np.sqrt(w)
    z = math.sqrt(summary.info) * diff
    flagged = np.abs(r) < RSTAR_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.log(z / r) / r
    rs = np.where(flagged, r, r + np.where(np.isfinite(corr), corr, 0.0))
    return rs, flagged


def rstar_pvalue(summary: LikelihoodSummary, theta):
    """Right-side P-value ``P(Z > r*)``; increasing in theta like a distribution function."""
    rs, _ = rstar(summary, theta)
    p = nx.normal_sf(rs)
    return p if np.ndim(theta) else float(p[0])


def rstar_confidence(summary: LikelihoodSummary, grid) -> ConfidenceDistribution:
    """Confidence density from differentiating the ``r*`` P-value over ``grid``.

    Values with ``|r| < 1e-3`` are replaced by interpolation before
    differencing, so the removable singularity at the MLE does not leak into
    the density.
    """
    grid = np.asarray(grid, dtype=float)
    rs, _ = rstar(summary, grid)
    w = np.maximum(np.asarray(summary.w(grid), dtype=float), 0.0)
    near = np.sqrt(w) < RSTAR_MASK
    p = nx.normal_sf(rs)
    if near.any() and (~near).sum() >= 2:
        p = np.where(near, np.interp(grid, grid[~near], p[~near]), p)
    dens = np.clip(np.gradient(p, grid, edge_order=2), 0.0, None)
    return ConfidenceDistribution.from_density(
        "marginal", nx.GridDensity(grid, dens),
        {"route": "rstar", "theta_hat": summary.theta_hat, "n": summary.n})


# ---------------------------------------------------------------------------
# exact conditional law for N(theta, theta^2)
# ---------------------------------------------------------------------------

def _hinkley_mode(a: float, n: int) -> float:
    if n == 1:
        return max(a, 0.0)
    return 0.5 * (a + math.sqrt(a * a + 4.0 * (n - 1)))


def _hinkley_log_kernel(x, a: float, n: int):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return (n - 1) * np.log(x) - 0.5 * (x - a) ** 2 if n > 1 else -0.5 * (x - a) ** 2


@lru_cache(maxsize=4096)
def _hinkley_setup(a: float, n: int):
    """Mode, log-kernel at the mode, upper limit and scaled normalizer."""
    m = _hinkley_mode(a, n)
    ref = float(_hinkley_log_kernel(max(m, 1e-300), a, n))
    upper = max(a, m) + HINKLEY_TAIL
    f = lambda x: math.exp(float(_hinkley_log_kernel(x, a, n)) - ref) if x > 0 else 0.0  # noqa: E731
    pts = [m] if 0.0 < m < upper else None
    total = nx.integrate(f, 0.0, upper, rel_tol=1e-12, points=pts)
    return m, ref, upper, total, f


def hinkley_normalizer(a: float, n: int) -> float:
    """``I_{n-1}(a) = int_0^inf x^{n-1} exp{-(x - a)^2 / 2} dx``."""
    _, ref, _, total, _ = _hinkley_setup(float(a), int(n))
    return total * math.exp(ref)


def hinkley_normalizer_recursive(a: float, n: int) -> float:
    """``I_{n-1}(a)`` from ``I_k = a I_{k-1} + (k-1) I_{k-2}``.

    Starts from ``I_0 = sqrt(2 pi) Phi(a)`` and ``I_1 = a I_0 + exp(-a^2/2)``.
    Loses relative accuracy for strongly negative ``a``.
    """
    if n < 1:
        raise DomainError("hinkley_normalizer_recursive: n must be >= 1")
    i0 = math.sqrt(2 * math.pi) * float(nx.normal_cdf(a))
    if n == 1:
        return i0
    i1 = a * i0 + math.exp(-0.5 * a * a)
    prev, cur = i0, i1
    for k in range(2, n):
        prev, cur = cur, a * cur + (k - 1) * prev
    return cur


def hinkley_density(w, a: float, n: int):
    """``p(w | a) = w^{n-1} exp{-(w - a)^2 / 2} / I_{n-1}(a)`` for ``w >= 0``."""
    if n < 1:
        raise DomainError("hinkley_density: n must be >= 1")
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise DomainError("hinkley_density: w must be >= 0")
    _, ref, _, total, _ = _hinkley_setup(float(a), int(n))
    with np.errstate(over="ignore"):
        out = np.exp(_hinkley_log_kernel(w, a, n) - ref) / total
    out = np.where(w > 0, out, 0.0 if n > 1 else out)
    return out if out.ndim else float(out)


def hinkley_cdf(w, a: float, n: int):
    """``F_a(w)``, by quadrature over consecutive sorted points."""
    m, ref, upper, total, f = _hinkley_setup(float(a), int(n))
    w = np.asarray(w, dtype=float)
    flat = np.clip(w.ravel(), 0.0, None)
    order = np.argsort(flat)
    out = np.empty_like(flat)
    acc, prev = 0.0, 0.0
    for idx in order:
        x = min(flat[idx], upper)
        if x > prev:
            pts = [m] if prev < m < x else None
            acc += nx.integrate(f, prev, x, rel_tol=1e-12, abs_tol=1e-15 * total, points=pts)
            prev = x
        out[idx] = min(acc / total, 1.0)
    out = out.reshape(w.shape)
    return out if out.ndim else float(out)


def hinkley_sf(w, a: float, n: int):
    """``1 - F_a(w)`` computed directly from the upper tail for accuracy."""
    m, ref, upper, total, f = _hinkley_setup(float(a), int(n))
    w = np.asarray(w, dtype=float)
    flat = np.clip(w.ravel(), 0.0, None)
    out = np.empty_like(flat)
    for i, x in enumerate(flat):
        if x >= upper + HINKLEY_TAIL:
            out[i] = 0.0
            continue
        hi = max(upper, x + HINKLEY_TAIL)
        pts = [m] if x < m < hi else None
        out[i] = min(nx.integrate(f, x, hi, rel_tol=1e-12, abs_tol=1e-300, points=pts) / total, 1.0)
    out = out.reshape(w.shape)
    return out if out.ndim else float(out)


def hinkley_conditional_pvalue(theta, t: float, a: float, n: int):
    """``P_theta(T >= t | a) = 1 - F_a(t / theta)`` with ``T = sqrt(sum y^2)``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError("hinkley_conditional_pvalue: theta must be > 0")
    return hinkley_sf(t / theta, a, n)


def hinkley_conditional_density(theta, t: float, a: float, n: int):
    """``c_c(theta; t | a) = p(t / theta | a) t / theta^2``."""
    theta = np.asarray(theta, dtype=float)
    return hinkley_density(t / theta, a, n) * t / theta ** 2


def hinkley_quantile(p: float, a: float, n: int) -> float:
    """``w`` with ``F_a(w) = p``."""
    if not 0.0 < p < 1.0:
        raise DomainError("hinkley_quantile: p must lie in (0, 1)")
    m, _, upper, _, _ = _hinkley_setup(float(a), int(n))
    return nx.find_root(lambda x: hinkley_cdf(x, a, n) - p, 0.0, upper, tol=1e-12)


@dataclass(frozen=True)
class HinkleyQuantileTable:
    """Quantiles of ``w | a`` on a grid of ``a``, read by cubic interpolation.

    Used to form conditional intervals for many simulated datasets quickly.
    """

    n: int
    probs: tuple
    a_grid: np.ndarray
    table: np.ndarray

    @classmethod
    def build(cls, n: int, probs, a_lo: float = None, a_hi: float = None, size: int = 121):
        bound = math.sqrt(n)  # |a| <= sqrt(n) by Cauchy-Schwarz
        a_lo = -bound if a_lo is None else a_lo
        a_hi = bound if a_hi is None else a_hi
        a_grid = np.linspace(a_lo, a_hi, size)
        table = np.array([[hinkley_quantile(p, float(a), n) for p in probs] for a in a_grid])
        return cls(n, tuple(probs), a_grid, table)

    def __call__(self, a):
        from scipy.interpolate import CubicSpline
        spline = CubicSpline(self.a_grid, self.table, axis=0)
        return spline(np.clip(a, self.a_grid[0], self.a_grid[-1]))


# ---------------------------------------------------------------------------
# p* for N(theta, theta^2)
# ---------------------------------------------------------------------------

def _require_curved(model):
    if not isinstance(model, CurvedNormal):
        raise CapabilityError(f"{getattr(model, 'name', model)}: p* is coded for curved_normal, "
                              "the model with an explicit (MLE, ancillary) parametrization")


def pstar_log_ratio(theta, theta_hat, a: float, n: int):
    """``log L(theta) / L(theta_hat)`` in the (MLE, ancillary) parametrization."""
    b = curved_b(a, n)
    u = np.asarray(theta_hat, dtype=float) / np.asarray(theta, dtype=float)
    return n * np.log(u) - 0.25 * (b + 2 * n) * (u * u - 1.0) + 0.5 * b * (u - 1.0)


def bn_conditional_density(model, theta, theta_hat, a: float, n: int | None = None):
    """Unnormalized ``p*(theta_hat | a) = |I(theta_hat)|^{1/2} L(theta) / L(theta_hat)``."""
    _require_curved(model)
    if n is None:
        raise DomainError("bn_conditional_density: sample size n is required")
    theta_hat = np.asarray(theta_hat, dtype=float)
    b = curved_b(a, n)
    info = (b + 4 * n) / (2.0 * theta_hat ** 2)
    return np.sqrt(info) * np.exp(pstar_log_ratio(theta, theta_hat, a, n))


@lru_cache(maxsize=1024)
def _pstar_u_norm(a: float, n: int) -> float:
    """Normalizer of the pivotal density ``p*(u | a)``, ``u = theta_hat / theta``."""
    f = lambda u: float(bn_conditional_density(CurvedNormal(), 1.0, u, a, n))  # noqa: E731
    return nx.integrate(f, 0.0, 1.0, rel_tol=1e-12) + nx.integrate(f, 1.0, np.inf, rel_tol=1e-12)


def pstar_pivot_density(u, a: float, n: int):
    """Normalized ``p*(u | a)``, free of theta."""
    u = np.asarray(u, dtype=float)
    return bn_conditional_density(CurvedNormal(), 1.0, u, a, n) / _pstar_u_norm(float(a), int(n))


def pstar_conditional_density(theta, theta_hat: float, a: float, n: int):
    """``c_c(theta; theta_hat | a) = p*(theta_hat / theta | a) theta_hat / theta^2``."""
    theta = np.asarray(theta, dtype=float)
    return pstar_pivot_density(theta_hat / theta, a, n) * theta_hat / theta ** 2


def pstar_conditional_pvalue(theta, theta_hat: float, a: float, n: int):
    """``1 - F*_a(theta_hat / theta)``."""
    f = lambda u: float(pstar_pivot_density(u, a, n))  # noqa: E731
    out = [nx.integrate(f, theta_hat / th, np.inf, rel_tol=1e-10)
           for th in np.atleast_1d(np.asarray(theta, dtype=float))]
    return np.array(out) if np.ndim(theta) else out[0]


# ---------------------------------------------------------------------------
# score test
# ---------------------------------------------------------------------------

def score_pvalue(model: ParametricModel, theta0: float, y) -> float:
    """One-sided ``1 - Phi(U(theta0) / sqrt(I_obs(theta0)))``."""
    y = model.check_data(y)
    if hasattr(model, "score") and hasattr(model, "observed_info"):
        u = model.score(theta0, y)
        info = model.observed_info(theta0, y)
    else:
        h = 1e-4 * max(abs(theta0), 1.0)
        ll = lambda x: model.log_likelihood(x, y)  # noqa: E731
        u = (ll(theta0 - 2 * h) - 8 * ll(theta0 - h) + 8 * ll(theta0 + h) - ll(theta0 + 2 * h)) / (12 * h)
        info = -(-ll(theta0 + 2 * h) + 16 * ll(theta0 + h) - 30 * ll(theta0)
                 + 16 * ll(theta0 - h) - ll(theta0 - 2 * h)) / (12 * h * h)
    if not info > 0:
        raise DomainError(f"score_pvalue: observed information {info} at theta0={theta0} "
                          "is not positive")
    return float(nx.normal_sf(u / math.sqrt(info)))
