"""Mid-P confidence for binomial and negative-binomial data, exact coverage of
the mid-P intervals, and the exact tables of the two-by-four example.

Notation: ``y`` successes in ``n`` trials. For the binomial family ``n`` is
fixed and ``y`` observed; for the negative binomial ``y`` is fixed and the
number of trials ``n`` observed. In both cases the mid-P confidence
distribution is increasing in the success probability ``theta``:

* binomial: ``C = P(Y > y) + P(Y = y)/2 = (I(y, n-y+1) + I(y+1, n-y)) / 2``
* negative binomial: ``C = P(N < n) + P(N = n)/2 = (I(y, n-y+1) + I(y, n-y)) / 2``

where ``I(a, b)`` is the regularized incomplete beta function at ``theta``.
Terms whose beta index is zero are replaced by their limits: ``I(0, b) = 1``
and ``I(a, 0) = 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats as _stats

from . import numerics as nx
from .coverage import NOT_RELEVANT, CoverageReport, bias_verdict
from .errors import ConfigError, DomainError
from .models.lattice import EVANS_TABLE, Evans2x2

BINOMIAL = "binomial"
NEGATIVE_BINOMIAL = "negative_binomial"
FAMILIES = (BINOMIAL, NEGATIVE_BINOMIAL)
NB_TRUNCATION = 1e-10
CELL_TOL = 1e-11
DEFAULT_THETA_GRID = np.round(np.linspace(0.05, 0.95, 181), 10)


@dataclass(frozen=True)
class MidPConfidence:
    """Mid-P confidence distribution for an observed ``(y, n)``."""

    family: str
    y: int
    n: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; use one of {FAMILIES}")
        if not (int(self.y) == self.y and int(self.n) == self.n):
            raise DomainError("y and n must be integers")
        if self.family == BINOMIAL and not 0 <= self.y <= self.n:
            raise DomainError(f"binomial: need 0 <= y <= n, got y={self.y}, n={self.n}")
        if self.family == NEGATIVE_BINOMIAL and not 1 <= self.y <= self.n:
            raise DomainError(f"negative binomial: need 1 <= y <= n, got y={self.y}, n={self.n}")

    @property
    def terms(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Beta indices ``(a, b)`` of the two incomplete-beta terms."""
        y, n = self.y, self.n
        if self.family == BINOMIAL:
            return (y, n - y + 1), (y + 1, n - y)
        return (y, n - y + 1), (y, n - y)

    @property
    def formula(self) -> str:
        (a1, b1), (a2, b2) = self.terms
        return f"0.5*I(theta;{a1},{b1}) + 0.5*I(theta;{a2},{b2})"

    @property
    def atoms(self) -> tuple[float, float]:
        """Confidence mass sitting at ``theta = 0`` and ``theta = 1``."""
        lo = sum(0.5 for a, _ in self.terms if a == 0)
        hi = sum(0.5 for _, b in self.terms if b == 0)
        return lo, hi

    def cdf(self, theta):
        th = np.asarray(theta, dtype=float)
        if np.any((th <= 0) | (th >= 1)):
            raise DomainError("mid-P confidence: theta must lie in (0, 1)")
        return 0.5 * sum(_inc_beta(th, a, b) for a, b in self.terms)

    def density(self, theta):
        th = np.asarray(theta, dtype=float)
        return 0.5 * sum(_stats.beta.pdf(th, a, b) for a, b in self.terms if a > 0 and b > 0)

    def mean(self) -> float:
        """Mean of the continuous part, weighted by its mass."""
        return 0.5 * sum(a / (a + b) for a, b in self.terms if a > 0 and b > 0) \
            + self.atoms[1]

    def interval(self, gamma: float = 0.95, split=None) -> tuple[float, float]:
        """Solve ``C(theta) = 1 - gamma2`` and ``C(theta) = 1 - gamma1``.

        The default split is equi-tailed. A level that the distribution jumps
        over at a boundary atom gives that boundary as the endpoint.
        """
        if not 0 < gamma < 1:
            raise DomainError("gamma must lie in (0, 1)")
        g1, g2 = split if split is not None else ((1 - gamma) / 2, (1 + gamma) / 2)
        return self._solve(1 - g2), self._solve(1 - g1)

    def _solve(self, p: float) -> float:
        lo_atom, hi_atom = self.atoms
        if p <= lo_atom:
            return 0.0
        if p >= 1 - hi_atom:
            return 1.0
        return nx.find_root(lambda t: float(self.cdf(t)) - p, 1e-300, 1 - 1e-16, tol=1e-14)


def _inc_beta(theta, a, b):
    if a == 0:
        return np.ones_like(theta)
    if b == 0:
        return np.zeros_like(theta)
    return nx.reg_inc_beta(theta, a, b)


def mid_pvalue(family: str, y: int, n: int, theta):
    """Mid-P confidence ``C(theta)`` for ``y`` successes among ``n`` trials."""
    return MidPConfidence(family, y, n).cdf(theta)


def midp_confidence_density(family: str, y: int, n: int, points: int = 4001) -> nx.GridDensity:
    """The two-term beta-mixture density on a grid over ``(0, 1)``.

    Boundary counts put half the confidence on an atom at 0 or 1, so there is
    no proper density; ``DomainError`` is raised for them.
    """
    cd = MidPConfidence(family, y, n)
    if any(cd.atoms):
        raise DomainError(f"{family}: y={y}, n={n} puts confidence mass on a boundary atom")
    # Beta-quantile-aligned grid: dense where the mass is, geometric in the tails.
    u = np.linspace(0.0, 1.0, points)[1:-1]
    tail = np.geomspace(1e-14, u[0], 200)
    u = np.concatenate([tail, u, 1.0 - tail])
    (a1, b1), (a2, b2) = cd.terms
    grid = np.unique(np.concatenate([_stats.beta.ppf(u, a1, b1), _stats.beta.ppf(u, a2, b2),
                                     np.linspace(0, 1, points)]))
    # bisect cells whose trapezoid mass disagrees with the exact cdf increment
    for _ in range(8):
        inner = grid[(grid > 0) & (grid < 1)]
        v = cd.density(inner)
        bad = np.abs(np.diff(inner) * (v[1:] + v[:-1]) / 2 - np.diff(cd.cdf(inner))) > CELL_TOL
        if not bad.any():
            break
        grid = np.union1d(grid, (inner[:-1][bad] + inner[1:][bad]) / 2)
    values = cd.density(grid)
    values = np.where(np.isfinite(values), values, 0.0)
    out = nx.GridDensity(grid, values, normalized=False)
    err = abs(out.integral() - 1.0)
    if err > nx.NORMALIZATION_TOL:
        raise DomainError(f"mid-P density mass off by {err:.2e}")
    return out


# ---------------------------------------------------------------------------
# exact coverage of the equi-tailed mid-P intervals
# ---------------------------------------------------------------------------

def _interval_table(family, size, outcomes, gamma):
    out = {}
    for v in outcomes:
        y, n = (int(v), size) if family == BINOMIAL else (size, int(v))
        out[int(v)] = MidPConfidence(family, y, n).interval(gamma)
    return out


def midp_coverage(family: str, size: int, theta_grid=DEFAULT_THETA_GRID,
                  gamma: float = 0.95) -> CoverageReport:
    """Exact coverage of the ``gamma`` mid-P interval at each ``theta``.

    Binomial outcomes ``0..size`` are summed exactly. Negative-binomial trial
    counts are summed up to cumulative mass ``1 - 1e-10`` at each theta.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if family == BINOMIAL:
        ys = np.arange(size + 1)
        table = _interval_table(family, size, ys, gamma)
        lo = np.array([table[v][0] for v in ys])
        hi = np.array([table[v][1] for v in ys])
        cov = [float(np.sum(_stats.binom.pmf(ys, size, th) * ((lo <= th) & (th <= hi))))
               for th in theta_grid]
    elif family == NEGATIVE_BINOMIAL:
        # scipy's nbinom counts failures; trials = failures + size.
        top = int(max(_stats.nbinom.ppf(1 - NB_TRUNCATION, size, th) for th in theta_grid)) + size
        ns = np.arange(size, top + 1)
        table = _interval_table(family, size, ns, gamma)
        lo = np.array([table[v][0] for v in ns])
        hi = np.array([table[v][1] for v in ns])
        cov = []
        for th in theta_grid:
            cut = int(_stats.nbinom.ppf(1 - NB_TRUNCATION, size, th)) + size
            keep = ns <= cut
            p = _stats.nbinom.pmf(ns[keep] - size, size, th)
            cov.append(float(np.sum(p * ((lo[keep] <= th) & (th <= hi[keep])))))
    else:
        raise ConfigError(f"unknown family {family!r}")
    est = np.array(cov)
    return CoverageReport(theta_grid, gamma, est, np.zeros_like(est), 0, None, True,
                          procedure=f"midp_{family}_{size}")


@dataclass(frozen=True)
class MidPExperiment:
    reports: dict          # (family, size) -> CoverageReport

    def max_deviation(self, family, size) -> float:
        r = self.reports[(family, size)]
        return float(np.max(np.abs(r.estimates - r.nominal)))

    def sign_changes(self, family, size) -> int:
        r = self.reports[(family, size)]
        s = np.sign(r.estimates - r.nominal)
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def mean_coverage(self, family, size) -> float:
        return float(np.mean(self.reports[(family, size)].estimates))


def midp_coverage_experiment(sizes=None, gamma: float = 0.95,
                             theta_grid=DEFAULT_THETA_GRID) -> MidPExperiment:
    """Exact coverage curves for each ``(family, size)``; default sizes 10, 50, 100."""
    if sizes is None:
        sizes = {BINOMIAL: (10, 50, 100), NEGATIVE_BINOMIAL: (10, 50, 100)}
    reports = {}
    for fam, ss in sizes.items():
        for s in ss:
            reports[(fam, int(s))] = midp_coverage(fam, int(s), theta_grid, gamma)
    return MidPExperiment(reports)


def write_midp_csv(exp: MidPExperiment, path):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.writer(fh)
        w.writerow(["family", "size", "theta", "coverage"])
        for (fam, size), rep in exp.reports.items():
            for th, c in zip(rep.theta_grid, rep.estimates):
                w.writerow([fam, size, repr(float(th)), repr(float(c))])


# ---------------------------------------------------------------------------
# the two-by-four table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvansTables:
    likelihood: dict        # cell -> {theta: Fraction}
    mle: dict               # cell -> theta
    marginal_y1: dict       # theta -> P(Y1 = 1)
    marginal_y2: dict
    correct: dict           # theta -> P(mle == theta)
    conditional: dict       # (which, k, theta) -> P(mle == theta | Y_which = k)
    likelihood_given: dict  # (which, cell) -> {theta: P(cell | Y_which) }
    total_probability_ok: bool
    both_ancillary: bool
    same_likelihood: bool
    verdict: str

    def correctness_table(self):
        """``(P1(.|Y1=1), P2(.|Y1=1), P1(.|Y2=1), P2(.|Y2=1))``."""
        return tuple(self.conditional[(w, 1, th)] for w in (1, 2) for th in (1, 2))


def evans_enumeration() -> EvansTables:
    m = Evans2x2()
    thetas, cells = m.thetas, m.cells
    lik = {c: {th: EVANS_TABLE[th][c] for th in thetas} for c in cells}
    mle = {c: m.mle(((c),)) for c in cells}

    def marg(which, k, th):
        return sum((EVANS_TABLE[th][c] for c in cells if c[which - 1] == k), Fraction(0))

    m1 = {th: marg(1, 1, th) for th in thetas}
    m2 = {th: marg(2, 1, th) for th in thetas}
    correct = {th: sum((EVANS_TABLE[th][c] for c in cells if mle[c] == th), Fraction(0))
               for th in thetas}
    cond, lik_given = {}, {}
    for which in (1, 2):
        for k in (1, 2):
            for th in thetas:
                num = sum((EVANS_TABLE[th][c] for c in cells
                           if c[which - 1] == k and mle[c] == th), Fraction(0))
                cond[(which, k, th)] = num / marg(which, k, th)
        for c in cells:
            lik_given[(which, c)] = {th: EVANS_TABLE[th][c] / marg(which, c[which - 1], th)
                                     for th in thetas}

    total_ok = all(
        sum(marg(w, k, th) * cond[(w, k, th)] for k in (1, 2)) == correct[th]
        for w in (1, 2) for th in thetas)
    both_anc = all(marg(w, 1, 1) == marg(w, 1, 2) for w in (1, 2))
    # Conditioning on an ancillary rescales by a theta-free factor, so the
    # likelihood ratio is unchanged.
    same_lik = all(
        lik_given[(w, c)][1] * lik[c][2] == lik_given[(w, c)][2] * lik[c][1]
        for w in (1, 2) for c in cells)

    # One-directional bias between the two conditionings, per level k.
    verdicts = []
    for k in (1, 2):
        d = [float(cond[(1, k, th)] - cond[(2, k, th)]) for th in thetas]
        verdicts.append(bias_verdict(d, [0.0] * len(d))[0])
    verdict = NOT_RELEVANT if all(v == NOT_RELEVANT for v in verdicts) else ";".join(verdicts)
    return EvansTables(lik, mle, m1, m2, correct, cond, lik_given, total_ok, both_anc,
                       same_lik, verdict)


def evans_mle_guess():
    """Point guess ``theta_hat`` for the two-by-four table, on samples ``(reps, 1, 2)``."""
    from .coverage import PointGuess

    m = Evans2x2()

    def guess(samples):
        cells = np.asarray(samples).reshape(len(samples), -1, 2)[:, 0]
        return np.array([m.mle(((int(a), int(b)),)) for a, b in cells])

    return PointGuess("mle", guess)


def evans_coordinate(which: int):
    """Conditioning statistic ``Y_which`` of the single observed pair."""
    from .coverage import Statistic

    return Statistic(f"y{which}", lambda s: np.asarray(s).reshape(len(s), -1, 2)[:, 0, which - 1],
                     discrete=True)
