"""Marginal and conditional coverage, and the relevant-subset scanner.

Monte Carlo work is split into fixed-size chunks. Chunk ``j`` at grid index
``i`` draws from ``numpy.random.default_rng([seed, i, j])``, so the integer
counts, and hence every report, are identical for any number of workers.
Samples whose sample space at fixed theta is finite are enumerated exactly.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .models import Dataset, ParametricModel

CHUNK = 10_000
DEFAULT_BINS = 10
MARGIN_FLOOR = 0.01
MARGIN_Z = 3.0
MAX_MARGIN = 0.1
PILOT_SIZE = 100_000
PILOT_INDEX = 2**31 - 1

POSITIVE = "relevant_positive"
NEGATIVE = "relevant_negative"
NOT_RELEVANT = "not_relevant"
INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# procedures and statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalProcedure:
    """Maps a batch of samples ``(reps, n)`` to interval bounds ``(lo, hi)``.

    The interval is closed: theta is covered when ``lo <= theta <= hi``.
    """

    name: str
    bounds: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    def covers(self, samples: np.ndarray, theta) -> np.ndarray:
        lo, hi = self.bounds(samples)
        return (np.asarray(lo) <= theta) & (theta <= np.asarray(hi))


@dataclass(frozen=True)
class PointGuess:
    """A guess of a discrete parameter; "covers" means the guess is right."""

    name: str
    guess: Callable[[np.ndarray], np.ndarray]

    def covers(self, samples: np.ndarray, theta) -> np.ndarray:
        return np.asarray(self.guess(samples)) == theta


@dataclass(frozen=True)
class Statistic:
    """A candidate conditioning statistic ``R(y)`` evaluated on a sample batch."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    discrete: bool = False


def _flat(samples):
    samples = np.asarray(samples, dtype=float)
    return samples if samples.ndim == 2 else samples.reshape(samples.shape[0], -1)


def builtin_statistics(model: ParametricModel | None = None) -> dict[str, Statistic]:
    """Range, min, max, mean, fractional part of the first value, and the model ancillary."""
    stats = {
        "range": Statistic("range", lambda s: np.ptp(_flat(s), axis=1)),
        "min": Statistic("min", lambda s: _flat(s).min(axis=1)),
        "max": Statistic("max", lambda s: _flat(s).max(axis=1)),
        "mean": Statistic("mean", lambda s: _flat(s).mean(axis=1)),
        "frac": Statistic("frac", lambda s: _flat(s)[:, 0] - np.floor(_flat(s)[:, 0])),
    }
    if model is not None and model.has("has_ancillary"):
        def anc(s, model=model):
            out = [model.ancillary(Dataset(tuple(row))) for row in _flat(s)]
            return np.array([o if np.isscalar(o) else float(np.ptp(o)) for o in out])
        stats["ancillary"] = Statistic("ancillary", anc)
    return stats


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Conditioning:
    """Per-(theta, bin) results of a conditional coverage run."""

    statistic: str
    bin_edges: tuple | None        # continuous statistics
    levels: tuple | None           # discrete statistics
    counts: np.ndarray             # (theta, bin) sample sizes (MC) or probabilities (exact)
    estimates: np.ndarray          # (theta, bin) conditional coverage, NaN for empty bins
    std_errors: np.ndarray
    bin_probs: np.ndarray          # (theta, bin) P(bin)

    @property
    def n_bins(self) -> int:
        return self.estimates.shape[1]

    def bin_range(self, k: int) -> tuple:
        if self.levels is not None:
            return self.levels[k], self.levels[k]
        return self.bin_edges[k], self.bin_edges[k + 1]


@dataclass(frozen=True)
class CoverageReport:
    theta_grid: np.ndarray
    nominal: float
    estimates: np.ndarray
    std_errors: np.ndarray
    n_sim: int
    seed: int | None
    exact: bool = False
    covered: np.ndarray | None = None
    conditioning: Conditioning | None = None
    procedure: str = ""
    exact_values: tuple | None = None   # Fractions, when enumerated

    def total_probability_gap(self) -> np.ndarray:
        """``sum_bins P(bin) cov(bin) - marginal`` per theta."""
        if self.conditioning is None:
            raise DomainError("total_probability_gap: report has no conditioning")
        c = self.conditioning
        est = np.where(np.isnan(c.estimates), 0.0, c.estimates)
        return (c.bin_probs * est).sum(axis=1) - self.estimates

    def combined_std_error(self) -> np.ndarray:
        """Standard error of ``sum_bins P(bin) cov(bin)``, for the total-probability check."""
        if self.conditioning is None:
            return self.std_errors
        c = self.conditioning
        se = np.where(np.isnan(c.std_errors), 0.0, c.std_errors)
        return np.sqrt(((c.bin_probs * se) ** 2).sum(axis=1) + self.std_errors ** 2)


@dataclass(frozen=True)
class RelevantSubsetReport:
    candidate: str
    bin_id: int
    bin_lo: float
    bin_hi: float
    verdict: str
    epsilon_hat: float
    max_abs_deviation: float
    table: tuple = field(default_factory=tuple)   # (theta, n, coverage, stderr, deviation)


# ---------------------------------------------------------------------------
# Monte Carlo core
# ---------------------------------------------------------------------------

def _chunks(n_sim: int):
    full, rest = divmod(n_sim, CHUNK)
    sizes = [CHUNK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _sample(model, theta, size, n, rng):
    return np.asarray(model.sample(theta, (size, n), rng))


def _run_cells(fn, cells, workers: int):
    if workers <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, cells))


def _exact_outcomes(model, theta, n):
    if not hasattr(model, "outcomes"):
        return None
    try:
        return list(model.outcomes(theta, n))
    except TypeError:
        return list(model.outcomes(theta))


def _enumerable(model, n):
    return hasattr(model, "outcomes")


def _batch(d: Dataset) -> np.ndarray:
    return np.asarray([d.observations], dtype=float)


def marginal_coverage(model: ParametricModel, procedure, theta_grid, gamma: float,
                      n_sim: int = 10_000, seed: int = 0, n: int = 1, exact: bool | None = None,
                      workers: int = 1) -> CoverageReport:
    """Fraction of samples whose interval covers theta, at each grid theta.

    ``exact=None`` enumerates when the model lists its outcomes.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if exact is None:
        exact = _enumerable(model, n)
    if exact:
        vals = []
        for th in theta_grid:
            outs = _exact_outcomes(model, int(th) if float(th).is_integer() else th, n)
            if outs is None:
                raise ConfigError(f"{model.name}: no exact enumeration available")
            vals.append(sum((p for d, p in outs if bool(procedure.covers(_batch(d), th)[0])),
                            Fraction(0)))
        est = np.array([float(v) for v in vals])
        return CoverageReport(theta_grid, gamma, est, np.zeros_like(est), 0, None, True,
                              procedure=procedure.name, exact_values=tuple(vals))

    cells = [(i, j, m) for i in range(theta_grid.size) for j, m in _chunks(n_sim)]

    def run(cell):
        i, j, m = cell
        rng = np.random.default_rng([seed, i, j])
        s = _sample(model, theta_grid[i], m, n, rng)
        return i, int(np.count_nonzero(procedure.covers(s, theta_grid[i])))

    covered = np.zeros(theta_grid.size, dtype=np.int64)
    for i, c in _run_cells(run, cells, workers):
        covered[i] += c
    est = covered / n_sim
    se = np.sqrt(est * (1 - est) / n_sim)
    return CoverageReport(theta_grid, gamma, est, se, n_sim, seed, False, covered,
                          procedure=procedure.name)


def _edges_for(model, stat, theta_ref, n, bins, seed):
    rng = np.random.default_rng([seed, PILOT_INDEX, 0])
    s = _sample(model, theta_ref, PILOT_SIZE, n, rng)
    r = np.asarray(stat.fn(s), dtype=float)
    edges = np.unique(np.quantile(r, np.linspace(0, 1, bins + 1)))
    if edges.size < 2:
        edges = np.array([edges[0], edges[0]])
    edges[0], edges[-1] = -np.inf, np.inf
    return tuple(float(e) for e in edges)


def conditional_coverage(model: ParametricModel, procedure, statistic: Statistic, theta_grid,
                         gamma: float, n_sim: int = 10_000, seed: int = 0, n: int = 1,
                         binning=None, exact: bool | None = None, levels=None,
                         theta_ref: float | None = None, workers: int = 1) -> CoverageReport:
    """Coverage given bins of ``statistic``.

    Discrete statistics use their exact levels. Continuous statistics use
    ``binning`` quantile bins (default 10), with edges taken from the
    statistic's distribution at ``theta_ref`` (default: the middle grid
    value), or explicit edges when ``binning`` is a sequence.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if exact is None:
        exact = _enumerable(model, n)
    if exact:
        return _conditional_exact(model, procedure, statistic, theta_grid, gamma, n)

    if statistic.discrete:
        if levels is None:
            raise ConfigError(f"statistic {statistic.name!r}: discrete levels must be supplied")
        levels = tuple(levels)
        edges = None
        n_bins = len(levels)
    else:
        if binning is None or isinstance(binning, int):
            ref = float(theta_grid[theta_grid.size // 2]) if theta_ref is None else theta_ref
            edges = _edges_for(model, statistic, ref, n, binning or DEFAULT_BINS, seed)
        else:
            edges = tuple(float(e) for e in binning)
        n_bins = len(edges) - 1

    cells = [(i, j, m) for i in range(theta_grid.size) for j, m in _chunks(n_sim)]

    def run(cell):
        i, j, m = cell
        rng = np.random.default_rng([seed, i, j])
        s = _sample(model, theta_grid[i], m, n, rng)
        cov = np.asarray(procedure.covers(s, theta_grid[i]), dtype=bool)
        r = np.asarray(statistic.fn(s), dtype=float)
        if edges is None:
            k = np.full(r.shape, -1)
            for b, lev in enumerate(levels):
                k[r == lev] = b
        else:
            k = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, n_bins - 1)
        tot = np.bincount(k[k >= 0], minlength=n_bins)
        hit = np.bincount(k[(k >= 0) & cov], minlength=n_bins)
        return i, tot, hit, int(cov.sum())

    tot = np.zeros((theta_grid.size, n_bins), dtype=np.int64)
    hit = np.zeros_like(tot)
    covered = np.zeros(theta_grid.size, dtype=np.int64)
    for i, t, h, c in _run_cells(run, cells, workers):
        tot[i] += t
        hit[i] += h
        covered[i] += c
    with np.errstate(invalid="ignore", divide="ignore"):
        est_b = np.where(tot > 0, hit / np.maximum(tot, 1), np.nan)
        se_b = np.where(tot > 0, np.sqrt(est_b * (1 - est_b) / np.maximum(tot, 1)), np.nan)
    est = covered / n_sim
    se = np.sqrt(est * (1 - est) / n_sim)
    cond = Conditioning(statistic.name, edges, levels, tot, est_b, se_b, tot / n_sim)
    return CoverageReport(theta_grid, gamma, est, se, n_sim, seed, False, covered, cond,
                          procedure=procedure.name)


def _conditional_exact(model, procedure, statistic, theta_grid, gamma, n):
    per_theta = []
    all_levels = set()
    for th in theta_grid:
        outs = _exact_outcomes(model, int(th) if float(th).is_integer() else th, n)
        if outs is None:
            raise ConfigError(f"{model.name}: no exact enumeration available")
        rows = []
        for d, p in outs:
            b = _batch(d)
            r = float(np.asarray(statistic.fn(b))[0])
            rows.append((r, p, bool(procedure.covers(b, th)[0])))
            all_levels.add(r)
        per_theta.append(rows)
    levels = tuple(sorted(all_levels))
    shape = (theta_grid.size, len(levels))
    prob = np.empty(shape, dtype=object)
    hit = np.empty(shape, dtype=object)
    prob.fill(Fraction(0))
    hit.fill(Fraction(0))
    marg = []
    for i, rows in enumerate(per_theta):
        m = Fraction(0)
        for r, p, c in rows:
            k = levels.index(r)
            prob[i, k] += p
            if c:
                hit[i, k] += p
                m += p
        marg.append(m)
    exact_cond = np.empty(shape, dtype=object)
    for idx in np.ndindex(shape):
        exact_cond[idx] = hit[idx] / prob[idx] if prob[idx] else None
    est_b = np.array([[float(v) if v is not None else np.nan for v in row] for row in exact_cond])
    probs = np.array([[float(v) for v in row] for row in prob])
    cond = Conditioning(statistic.name, None, levels, probs, est_b,
                        np.where(np.isnan(est_b), np.nan, 0.0), probs)
    est = np.array([float(v) for v in marg])
    report = CoverageReport(theta_grid, gamma, est, np.zeros_like(est), 0, None, True,
                            conditioning=cond, procedure=procedure.name, exact_values=tuple(marg))
    object.__setattr__(report, "exact_conditional", exact_cond)
    return report


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

def bias_verdict(deviation, std_error, margin_floor: float = MARGIN_FLOOR,
                 z: float = MARGIN_Z, max_margin: float = MAX_MARGIN) -> tuple[str, float, float]:
    """Verdict for a bias that must keep one sign over the whole theta grid.

    A theta counts as significantly biased when ``|d| > max(floor, z * se)``.
    Entries with NaN deviation (empty bins) are ignored. The bin is relevant
    when every remaining theta is significant in the same direction. It is
    inconclusive when no theta has data or the typical margin exceeds
    ``max_margin`` (too few samples to resolve a bias), and not relevant
    otherwise. Returns ``(verdict, epsilon_hat, max_abs_deviation)``;
    ``epsilon_hat`` is the smallest absolute deviation over theta for a
    relevant verdict and 0 otherwise.
    """
    d = np.asarray(deviation, dtype=float)
    se = np.nan_to_num(np.asarray(std_error, dtype=float), nan=0.0)
    keep = ~np.isnan(d)
    if not keep.any():
        return INCONCLUSIVE, 0.0, 0.0
    d, se = d[keep], se[keep]
    margin = np.maximum(margin_floor, z * se)
    pos, neg = d > margin, d < -margin
    max_abs = float(np.max(np.abs(d)))
    if pos.all():
        return POSITIVE, float(d.min()), max_abs
    if neg.all():
        return NEGATIVE, float(-d.max()), max_abs
    if np.median(margin) > max_margin:
        return INCONCLUSIVE, 0.0, max_abs
    return NOT_RELEVANT, 0.0, max_abs


def relevant_scan(model: ParametricModel, procedure, candidates: Sequence[Statistic] | None,
                  theta_grid, gamma: float, n_sim: int = 10_000, seed: int = 0, n: int = 1,
                  margin_floor: float = MARGIN_FLOOR, z: float = MARGIN_Z, binning=None,
                  levels: dict | None = None, workers: int = 1,
                  exact: bool | None = None) -> list[RelevantSubsetReport]:
    """Scan every bin of every candidate for a one-signed bias over ``theta_grid``.

    The deviation is conditional coverage minus the nominal ``gamma``. A bin is
    relevant only when the bias keeps its sign at every grid theta with margin
    above ``max(margin_floor, z * std err)``.
    """
    if candidates is None:
        candidates = list(builtin_statistics(model).values())
    out = []
    for stat in candidates:
        lev = None if levels is None else levels.get(stat.name)
        rep = conditional_coverage(model, procedure, stat, theta_grid, gamma, n_sim, seed, n,
                                   binning=binning, exact=exact, levels=lev, workers=workers)
        out.extend(scan_report(rep, margin_floor, z))
    return out


def scan_report(rep: CoverageReport, margin_floor: float = MARGIN_FLOOR,
                z: float = MARGIN_Z) -> list[RelevantSubsetReport]:
    c = rep.conditioning
    out = []
    for k in range(c.n_bins):
        d = c.estimates[:, k] - rep.nominal
        verdict, eps, mx = bias_verdict(d, c.std_errors[:, k], margin_floor, z)
        lo, hi = c.bin_range(k)
        table = tuple((float(th), float(c.counts[i, k]), float(c.estimates[i, k]),
                       float(c.std_errors[i, k]), float(d[i]))
                      for i, th in enumerate(rep.theta_grid))
        out.append(RelevantSubsetReport(c.statistic, k, float(lo), float(hi), verdict, eps, mx,
                                        table))
    return out


def default_theta_grid(cd, points: int = 11, mass: float = 0.98) -> np.ndarray:
    """``points`` values spanning the central ``mass`` of a reference confidence distribution."""
    lo = cd.quantile((1 - mass) / 2)
    hi = cd.quantile((1 + mass) / 2)
    return np.linspace(lo, hi, points)


# ---------------------------------------------------------------------------
# pivot quadrature for single uniform observations
# ---------------------------------------------------------------------------

def pivot_coverage(procedure, to_sample: Callable[[np.ndarray], np.ndarray], theta: float,
                   scan_points: int = 4097, tol: float = 1e-14) -> float:
    """Coverage by integrating the covering indicator over a uniform pivot ``u``.

    ``to_sample(u)`` maps pivots in ``[0, 1]`` to single observations. The
    indicator changes are located on a scan and refined by bisection, so the
    measure of the covering set is exact up to ``tol`` per change point.
    """
    def ind(u):
        return np.asarray(procedure.covers(to_sample(np.atleast_1d(u))[:, None], theta), dtype=bool)

    u = np.linspace(0.0, 1.0, scan_points)
    c = ind(u)
    points = [0.0]
    for k in np.nonzero(c[1:] != c[:-1])[0]:
        a, b = u[k], u[k + 1]
        ca = c[k]
        while b - a > tol:
            mid = 0.5 * (a + b)
            if ind(mid)[0] == ca:
                a = mid
            else:
                b = mid
        points.append(0.5 * (a + b))
    points.append(1.0)
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        if b > a and ind(0.5 * (a + b))[0]:
            total += b - a
    return total


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

COVERAGE_COLUMNS = ["theta", "bin_id", "bin_lo", "bin_hi", "n", "coverage", "stderr", "nominal"]


def coverage_rows(rep: CoverageReport):
    n_all = rep.n_sim if not rep.exact else 1
    for i, th in enumerate(rep.theta_grid):
        yield [th, "all", "", "", n_all, rep.estimates[i], rep.std_errors[i], rep.nominal]
    c = rep.conditioning
    if c is None:
        return
    for i, th in enumerate(rep.theta_grid):
        for k in range(c.n_bins):
            lo, hi = c.bin_range(k)
            yield [th, k, lo, hi, c.counts[i, k], c.estimates[i, k], c.std_errors[i, k],
                   rep.nominal]


def write_coverage_csv(rep: CoverageReport, path, header_comment: str = "# schema=1"):
    with open(path, "w", newline="") as fh:
        fh.write(header_comment + "\n")
        w = csv.writer(fh)
        w.writerow(COVERAGE_COLUMNS)
        for row in coverage_rows(rep):
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return repr(float(v))
    return str(v)
