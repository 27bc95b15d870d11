"""Numerical kernels: quadrature, root finding, special functions and grid densities.

Everything here is pure. Functions accept scalars or numpy arrays where that
makes sense and never touch module-level mutable state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special

from .errors import BracketError, DomainError, QuadratureError

DEFAULT_REL_TOL = 1e-8
DEFAULT_ROOT_TOL = 1e-10
DEFAULT_GRID_POINTS = 2001
DEFAULT_TAIL_RATIO = 1e-8
NORMALIZATION_TOL = 1e-6


# ---------------------------------------------------------------------------
# quadrature and roots
# ---------------------------------------------------------------------------

def integrate(f: Callable[[float], float], a: float, b: float,
              rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = 0.0,
              points=None, limit: int = 200) -> float:
    """Adaptive quadrature of ``f`` over ``[a, b]``.

    Infinite limits are allowed. ``points`` lists interior break points
    (kinks, peaks) that help the subdivision. Raises
    :class:`QuadratureError` carrying the best estimate when the requested
    relative tolerance is not met.
    """
    if not a < b:
        raise DomainError(f"integrate: need a < b, got a={a}, b={b}")
    kwargs = dict(epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1)
    if points is not None and np.isfinite(a) and np.isfinite(b):
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = _integrate.quad(f, a, b, **kwargs)
    value, err, info = out[0], out[1], out[2]
    ier = out[3] if len(out) > 3 else 0
    if not np.isfinite(value):
        raise QuadratureError("integrate: non-finite integral", value, err)
    if ier not in (0,) and err > max(abs_tol, rel_tol * abs(value)):
        raise QuadratureError(
            f"integrate: no convergence after {info.get('last', limit)} subdivisions "
            f"(estimate {value!r}, error {err:.2e})", value, err)
    return float(value)


def find_root(g: Callable[[float], float], lo: float, hi: float,
              tol: float = DEFAULT_ROOT_TOL) -> float:
    """Root of ``g`` inside the bracket ``[lo, hi]`` (Brent's method).

    Brent's method falls back to bisection whenever interpolation misbehaves,
    so convergence is guaranteed once the bracket has a sign change.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return float(lo)
    if ghi == 0:
        return float(hi)
    if not (np.isfinite(glo) and np.isfinite(ghi)) or np.sign(glo) == np.sign(ghi):
        raise BracketError(f"find_root: no sign change on [{lo}, {hi}] "
                           f"(g(lo)={glo!r}, g(hi)={ghi!r})")
    return float(_optimize.brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                                  maxiter=500))


def five_point_derivative(f: Callable, x, h):
    """Central five-point difference, fourth-order accurate."""
    x = np.asarray(x, dtype=float)
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def _require(cond, name, msg):
    if not np.all(cond):
        raise DomainError(f"{name}: {msg}")


def log_gamma(x):
    _require(np.asarray(x) > 0, "log_gamma", "x must be > 0")
    return _special.gammaln(x)


def digamma(x):
    _require(np.asarray(x) > 0, "digamma", "x must be > 0")
    return _special.digamma(x)


def trigamma(x):
    _require(np.asarray(x) > 0, "trigamma", "x must be > 0")
    return _special.polygamma(1, x)


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function I_x(a, b)."""
    x = np.asarray(x, dtype=float)
    _require((x >= 0) & (x <= 1), "reg_inc_beta", "x must lie in [0, 1]")
    _require((np.asarray(a) > 0) & (np.asarray(b) > 0), "reg_inc_beta", "a, b must be > 0")
    return _special.betainc(a, b, x)


def normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2 * math.pi)


def normal_logpdf(x):
    return -0.5 * np.square(x) - 0.5 * math.log(2 * math.pi)


def normal_cdf(x):
    return _special.ndtr(x)


def normal_sf(x):
    return _special.ndtr(-np.asarray(x, dtype=float))


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    _require((p > 0) & (p < 1), "normal_quantile", "p must lie in (0, 1)")
    return _special.ndtri(p)


def chisq_cdf(x, df):
    x = np.asarray(x, dtype=float)
    _require(x >= 0, "chisq_cdf", "x must be >= 0")
    _require(np.asarray(df) > 0, "chisq_cdf", "df must be > 0")
    return _special.gammainc(np.asarray(df) / 2.0, x / 2.0)


def _poisson_terms(nc: float):
    """Index range and log Poisson(nc/2) weights covering all but ~1e-17 of the mass."""
    half = nc / 2.0
    spread = 12.0 * math.sqrt(half) + 30.0
    j_lo = max(0, int(half - spread))
    j_hi = int(half + spread) + 1
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    if half == 0:
        logw = np.where(j == 0, 0.0, -np.inf)
    else:
        logw = -half + j * math.log(half) - _special.gammaln(j + 1)
    return j, logw


def _check_ncx2(x, df, nc, name):
    _require(np.asarray(x) >= 0, name, "x must be >= 0")
    _require(df > 0, name, "df must be > 0")
    _require(nc >= 0, name, "noncentrality must be >= 0")


def noncentral_chisq_cdf(x, df: float, nc: float):
    """Noncentral chi-square CDF as a Poisson mixture of central chi-square CDFs."""
    _check_ncx2(x, df, nc, "noncentral_chisq_cdf")
    x = np.asarray(x, dtype=float)
    j, logw = _poisson_terms(nc)
    terms = np.exp(logw) * _special.gammainc(df / 2.0 + j, x[..., None] / 2.0)
    return terms.sum(axis=-1)


def noncentral_chisq_sf(x, df: float, nc: float):
    """Upper tail of the noncentral chi-square, summed directly for relative accuracy."""
    _check_ncx2(x, df, nc, "noncentral_chisq_sf")
    x = np.asarray(x, dtype=float)
    j, logw = _poisson_terms(nc)
    terms = np.exp(logw) * _special.gammaincc(df / 2.0 + j, x[..., None] / 2.0)
    return terms.sum(axis=-1)


def noncentral_chisq_logpdf(x, df: float, nc: float):
    _check_ncx2(x, df, nc, "noncentral_chisq_logpdf")
    x = np.asarray(x, dtype=float)
    j, logw = _poisson_terms(nc)
    k = df / 2.0 + j
    with np.errstate(divide="ignore"):
        logc = ((k - 1) * np.log(x[..., None]) - x[..., None] / 2.0
                - k * math.log(2.0) - _special.gammaln(k))
    return _special.logsumexp(logw + logc, axis=-1)


_SPECIAL = {
    "log_gamma": log_gamma,
    "digamma": digamma,
    "trigamma": trigamma,
    "reg_inc_beta": reg_inc_beta,
    "normal_cdf": normal_cdf,
    "normal_pdf": normal_pdf,
    "normal_quantile": normal_quantile,
    "chisq_cdf": chisq_cdf,
    "noncentral_chisq_cdf": noncentral_chisq_cdf,
    "noncentral_chisq_sf": noncentral_chisq_sf,
}


def special(name: str, *args):
    """Evaluate a special function by name, e.g. ``special("digamma", 1.0)``."""
    try:
        fn = _SPECIAL[name]
    except KeyError:
        raise DomainError(f"special: unknown function {name!r}; "
                          f"known: {sorted(_SPECIAL)}") from None
    return fn(*args)


# ---------------------------------------------------------------------------
# grid densities
# ---------------------------------------------------------------------------

def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridCDF:
    """A monotone function tabulated on a grid, read by linear interpolation."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "values", _frozen(self.values))

    def __call__(self, theta):
        return np.interp(theta, self.grid, self.values, left=0.0, right=1.0)

    def quantile(self, p: float) -> float:
        return quantile_from_cdf(self, p)


@dataclass(frozen=True)
class GridDensity:
    """Non-negative function of the parameter tabulated on an increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        grid = _frozen(self.grid)
        values = _frozen(self.values)
        if grid.ndim != 1 or grid.size < 2:
            raise DomainError("GridDensity: grid needs at least two points")
        if values.shape != grid.shape:
            raise DomainError("GridDensity: grid and values differ in shape")
        if not np.all(np.diff(grid) > 0):
            raise DomainError("GridDensity: grid must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("GridDensity: values must be finite and non-negative")
        if self.normalized:
            total = _trapezoid(values, grid)
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"GridDensity: flagged normalized but integrates to {total}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_log(cls, grid, log_values) -> "GridDensity":
        """Build a normalized density from unnormalized log values."""
        log_values = np.asarray(log_values, dtype=float)
        finite = np.isfinite(log_values)
        if not finite.any():
            raise DomainError("GridDensity.from_log: density vanishes on the whole grid")
        shifted = np.where(finite, np.exp(log_values - log_values[finite].max()), 0.0)
        return cls(grid, shifted).normalize()

    def integral(self) -> float:
        return _trapezoid(self.values, self.grid)

    def normalize(self) -> "GridDensity":
        total = self.integral()
        if not total > 0 or not np.isfinite(total):
            raise DomainError(f"GridDensity.normalize: integral is {total}")
        return GridDensity(self.grid, self.values / total, normalized=True)

    def cdf(self) -> GridCDF:
        return cdf_from_density(self)

    def __call__(self, theta):
        return np.interp(theta, self.grid, self.values, left=0.0, right=0.0)

    @property
    def spacing(self) -> float:
        return float(np.min(np.diff(self.grid)))


def _trapezoid(y, x) -> float:
    return float(np.trapezoid(y, x))


def cdf_from_density(d: GridDensity) -> GridCDF:
    """Cumulative trapezoid of a normalized density, pinned to 1 at the right end."""
    if not d.normalized:
        raise DomainError("cdf_from_density: density must be normalized")
    F = _integrate.cumulative_trapezoid(d.values, d.grid, initial=0.0)
    F = np.maximum.accumulate(F / F[-1])
    F[-1] = 1.0
    return GridCDF(d.grid, F)


def quantile_from_cdf(F: GridCDF, p: float) -> float:
    """Smallest grid-interpolated theta with F(theta) = p."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile_from_cdf: p must lie in (0, 1), got {p}")
    values, grid = F.values, F.grid
    i = int(np.searchsorted(values, p, side="left"))
    i = min(max(i, 1), len(values) - 1)
    f0, f1 = values[i - 1], values[i]
    if f1 == f0:
        return float(grid[i])
    return float(grid[i - 1] + (p - f0) / (f1 - f0) * (grid[i] - grid[i - 1]))


def adaptive_grid(log_density: Callable[[np.ndarray], np.ndarray], center: float,
                  scale: float, lower: float = -np.inf, upper: float = np.inf,
                  n_points: int = DEFAULT_GRID_POINTS,
                  tail_ratio: float = DEFAULT_TAIL_RATIO,
                  max_doublings: int = 60) -> np.ndarray:
    """Grid around ``center`` wide enough that the density tails drop below
    ``tail_ratio`` times the maximum.

    Each side is widened independently by doubling, and stops early at a
    parameter-space boundary. Light tails give ``n_points`` equally spaced
    values. When a side reaches beyond ``CORE_HALF_WIDTH`` scales (heavy tails)
    the grid keeps an equally spaced core and spaces that tail geometrically
    in distance from the center, so the mode stays resolved.
    """
    if not scale > 0 or not np.isfinite(scale):
        raise DomainError(f"adaptive_grid: bad scale {scale}")
    cut = math.log(tail_ratio)
    # keep strictly inside open parameter boundaries
    eps_lo = 1e-9 * max(scale, abs(lower)) if np.isfinite(lower) else 0.0
    eps_hi = 1e-9 * max(scale, abs(upper)) if np.isfinite(upper) else 0.0
    lo_edge, hi_edge = lower + eps_lo, upper - eps_hi
    core = np.linspace(max(center - 4 * scale, lo_edge), min(center + 4 * scale, hi_edge), 801)
    with np.errstate(all="ignore"):
        lc = np.asarray(log_density(core), dtype=float)
    peak = lc[np.isfinite(lc)].max() if np.isfinite(lc).any() else -np.inf
    left = right = 4.0 * scale
    for _ in range(max_doublings):
        lo = max(center - left, lo_edge)
        hi = min(center + right, hi_edge)
        probe = np.linspace(lo, hi, 801)
        with np.errstate(all="ignore"):
            lv = np.asarray(log_density(probe), dtype=float)
        finite = np.isfinite(lv)
        if not finite.any() and not np.isfinite(peak):
            raise DomainError("adaptive_grid: density vanishes on the probe grid")
        top = max(peak, lv[finite].max()) if finite.any() else peak
        lv = np.where(finite, lv, -np.inf)
        left_ok = lo <= lo_edge or lv[0] - top < cut
        right_ok = hi >= hi_edge or lv[-1] - top < cut
        if left_ok and right_ok:
            return _core_and_tails(lo, hi, center, scale, n_points)
        if not left_ok:
            left *= 2.0
        if not right_ok:
            right *= 2.0
    raise DomainError("adaptive_grid: tails did not decay; density may be improper")


CORE_HALF_WIDTH = 20.0


def _core_and_tails(lo, hi, center, scale, n_points):
    w = CORE_HALF_WIDTH * scale
    heavy_left, heavy_right = center - lo > w, hi - center > w
    if not (heavy_left or heavy_right):
        return np.linspace(lo, hi, n_points)
    c_lo = center - w if heavy_left else lo
    c_hi = center + w if heavy_right else hi
    n_tail = n_points // 4
    n_core = n_points - n_tail * (heavy_left + heavy_right)
    parts = [np.linspace(c_lo, c_hi, n_core)]
    if heavy_left:
        d = np.geomspace(center - c_lo, center - lo, n_tail + 1)[1:]
        parts.insert(0, (center - d)[::-1])
    if heavy_right:
        d = np.geomspace(c_hi - center, hi - center, n_tail + 1)[1:]
        parts.append(center + d)
    return np.concatenate(parts)
