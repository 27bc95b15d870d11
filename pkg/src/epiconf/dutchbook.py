"""A betting market on the event "theta lies in the interval".

Each round an interval is computed from fresh data. Every agent quotes a
price for a ticket paying 1 when the interval covers the true theta. The
market quotes the coverage probability given the finest implemented
conditioning. An arbitrageur trades a unit stake at the agent's price and
offsets it at the market price; the resulting profit does not depend on the
outcome. All prices are exact ``Fraction`` values so that the risk-free and
zero-profit properties can be asserted with ``==``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .confidence import DiscreteConfidence, confidence_of, full_confidence
from .coverage import IntervalProcedure, Statistic
from .errors import CapabilityError, ConfigError, DomainError
from .models import Dataset, DiscreteUniformTriple, Evans2x2, ParametricModel

BUY = "buy_from_agent"
SELL = "sell_to_agent"
NO_TRADE = "no_trade"
MARKET = "market"
TWO_AGENT = "two_agent"


def as_price(x) -> Fraction:
    """Exact price; floats go through their shortest repr so 0.1 becomes 1/10."""
    if isinstance(x, Fraction):
        p = x
    elif isinstance(x, int):
        p = Fraction(x)
    else:
        p = Fraction(repr(float(x)))
    if not 0 <= p <= 1:
        raise DomainError(f"price must lie in [0, 1], got {p}")
    return p


# ---------------------------------------------------------------------------
# pricing policies
# ---------------------------------------------------------------------------

def _outcomes(model, theta, n):
    if not hasattr(model, "outcomes"):
        raise CapabilityError(f"{model.name}: exact prices need an enumerable sample space")
    try:
        return list(model.outcomes(theta, n))
    except TypeError:
        return list(model.outcomes(theta))


def _covers(procedure, d: Dataset, theta) -> bool:
    return bool(procedure.covers(np.asarray([d.observations], dtype=float), theta)[0])


@dataclass
class MarginalPolicy:
    """Quote the unconditional coverage, or a fixed ``price`` when given."""

    price: object = None
    name: str = "marginal"
    _cache: dict = field(default_factory=dict, repr=False)

    def info(self, data):
        return "all"

    def quote(self, model, data, theta, procedure) -> Fraction:
        if self.price is not None:
            return as_price(self.price)
        key = (theta, data.n)
        if key not in self._cache:
            self._cache[key] = sum((p for d, p in _outcomes(model, theta, data.n)
                                    if _covers(procedure, d, theta)), Fraction(0))
        return self._cache[key]


@dataclass
class ConditionalPolicy:
    """Quote the coverage given the observed value of ``statistic``."""

    statistic: Statistic
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.name:
            self.name = f"conditional_on({self.statistic.name})"

    def _r(self, d: Dataset):
        return float(np.asarray(self.statistic.fn(np.asarray([d.observations], dtype=float)))[0])

    def info(self, data):
        return self._r(data)

    def quote(self, model, data, theta, procedure) -> Fraction:
        r = self._r(data)
        key = (theta, data.n, r)
        if key not in self._cache:
            num = den = Fraction(0)
            for d, p in _outcomes(model, theta, data.n):
                if self._r(d) == r:
                    den += p
                    if _covers(procedure, d, theta):
                        num += p
            if den == 0:
                raise DomainError(f"{self.name}: observed value {r} has probability zero")
            self._cache[key] = num / den
        return self._cache[key]


@dataclass
class FullConfidencePolicy:
    """Quote the full-confidence mass of the interval computed from the data."""

    prior: object = None
    name: str = "full_confidence"

    def info(self, data):
        return "data"

    def quote(self, model, data, theta, procedure) -> Fraction:
        cd = full_confidence(self.prior, model, data)
        lo, hi = procedure.bounds(np.asarray([data.observations], dtype=float))
        lo, hi = float(np.asarray(lo)[0]), float(np.asarray(hi)[0])
        if isinstance(cd, DiscreteConfidence):
            return cd.confidence_of(v for v in cd.values if lo <= v <= hi)
        return as_price(min(1.0, max(0.0, confidence_of(cd, (lo, hi)))))


def market_price(model: ParametricModel, y, theta_true, info_policy, procedure) -> Fraction:
    """Price of the covering event under ``info_policy``."""
    return info_policy.quote(model, model.check_data(y), theta_true, procedure)


def default_market(model: ParametricModel, procedure=None):
    """The finest conditioning implemented for ``model``.

    With two competing maximal ancillaries there is no unambiguous price and
    ``None`` is returned; the market then refuses to quote.
    """
    if isinstance(model, Evans2x2):
        return None
    if isinstance(model, DiscreteUniformTriple):
        return ConditionalPolicy(Statistic("range", lambda s: np.ptp(np.asarray(s), axis=1), True),
                                 name="market")
    raise CapabilityError(f"{model.name}: no exact market price is implemented")


def triple_interval() -> IntervalProcedure:
    """``[y_(1), y_(n)]`` for the integer-shift triple."""
    return IntervalProcedure("range_interval", lambda s: (np.min(s, axis=1), np.max(s, axis=1)))


# ---------------------------------------------------------------------------
# trades
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trade:
    agent_price: Fraction
    market_price: Fraction
    direction: str
    profit: Fraction

    def net(self, outcome: bool) -> Fraction:
        """Arbitrageur's net when the event resolves to ``outcome``."""
        e = Fraction(int(outcome))
        if self.direction == BUY:      # hold agent's ticket, owe the market's
            return (e - self.agent_price) + (self.market_price - e)
        if self.direction == SELL:
            return (self.agent_price - e) + (e - self.market_price)
        return Fraction(0)


def arbitrage(agent_price, market_price) -> Trade:
    """Buy from the agent and sell to the market, or the reverse."""
    a, m = as_price(agent_price), as_price(market_price)
    if a < m:
        return Trade(a, m, BUY, m - a)
    if a > m:
        return Trade(a, m, SELL, a - m)
    return Trade(a, m, NO_TRADE, Fraction(0))


@dataclass(frozen=True)
class BetRound:
    round: int
    realization: Dataset | None
    info: object
    agent_id: str
    agent_price: Fraction
    market_price: Fraction | None
    direction: str
    profit: Fraction                 # guaranteed (market mode) or realized (two-agent mode)
    outcome: bool
    realized_payoff: Fraction
    net_if_covered: Fraction
    net_if_not: Fraction

    @property
    def risk_free(self) -> bool:
        return self.net_if_covered == self.net_if_not


@dataclass
class MarketLedger:
    rounds: list
    seed: int
    mode: str
    agents: tuple

    def cumulative(self, agent_id: str) -> Fraction:
        return sum((r.profit for r in self.rounds if r.agent_id == agent_id), Fraction(0))

    def profits(self, agent_id: str) -> np.ndarray:
        return np.array([float(r.profit) for r in self.rounds if r.agent_id == agent_id])

    def std_error(self, agent_id: str) -> float:
        """Monte Carlo standard error of the cumulative profit."""
        p = self.profits(agent_id)
        return float(np.std(p, ddof=1) * np.sqrt(p.size)) if p.size > 1 else 0.0

    def all_risk_free(self, agent_id: str | None = None) -> bool:
        return all(r.risk_free for r in self.rounds if agent_id in (None, r.agent_id))

    def losing_rounds(self, agent_id: str) -> int:
        return sum(1 for r in self.rounds if r.agent_id == agent_id and r.profit < 0)

    def no_trade_rounds(self, agent_id: str) -> int:
        return sum(1 for r in self.rounds if r.agent_id == agent_id and r.direction == NO_TRADE)


def simulate_market(model: ParametricModel, theta_true, agents: dict, n_rounds: int, seed: int,
                    procedure=None, n: int = 2, market=None, mode: str = MARKET,
                    opponent=None) -> MarketLedger:
    """Run ``n_rounds`` independent rounds against every agent.

    ``mode="market"``: the arbitrageur offsets each trade at the market price,
    so profit is fixed before the outcome is seen. ``mode="two_agent"``: no
    market exists; an informed ``opponent`` policy (default: the market
    policy) trades directly with the agent and profit is the realized payoff.
    """
    if mode not in (MARKET, TWO_AGENT):
        raise ConfigError(f"unknown market mode {mode!r}")
    if procedure is None:
        procedure = triple_interval()
    if market is None:
        market = default_market(model, procedure)
    informed = opponent if opponent is not None else market
    if mode == TWO_AGENT and informed is None:
        raise ConfigError("two-agent mode needs an opponent pricing policy")

    rng = np.random.default_rng(seed)
    samples = np.asarray(model.sample(theta_true, (n_rounds, n), rng))
    rounds = []
    for k in range(n_rounds):
        row = samples[k]
        obs = tuple(tuple(int(v) for v in o) if np.ndim(o) else _scalar(o) for o in row)
        data = Dataset(obs)
        outcome = _covers(procedure, data, theta_true)
        for aid, policy in agents.items():
            a = policy.quote(model, data, theta_true, procedure)
            if mode == MARKET:
                if market is None:
                    rounds.append(BetRound(k, data, None, aid, a, None, NO_TRADE, Fraction(0),
                                           outcome, Fraction(0), Fraction(0), Fraction(0)))
                    continue
                m = market.quote(model, data, theta_true, procedure)
                t = arbitrage(a, m)
                payoff = t.net(outcome)
                rounds.append(BetRound(k, data, market.info(data), aid, a, m, t.direction,
                                       t.profit, outcome, payoff, t.net(True), t.net(False)))
            else:
                belief = informed.quote(model, data, theta_true, procedure)
                if a < belief:
                    d, win, lose = BUY, 1 - a, -a
                elif a > belief:
                    d, win, lose = SELL, a - 1, a
                else:
                    d, win, lose = NO_TRADE, Fraction(0), Fraction(0)
                realized = win if outcome else lose
                rounds.append(BetRound(k, data, informed.info(data), aid, a, None, d, realized,
                                       outcome, realized, Fraction(win), Fraction(lose)))
    return MarketLedger(rounds, seed, mode, tuple(agents))


def _scalar(v):
    f = float(v)
    return int(f) if f.is_integer() else f


def expected_profit(model, theta_true, agent, market, procedure=None, n: int = 2) -> Fraction:
    """Exact per-round expected arbitrage profit by enumerating the sample space."""
    procedure = procedure or triple_interval()
    total = Fraction(0)
    for d, p in _outcomes(model, theta_true, n):
        a = agent.quote(model, d, theta_true, procedure)
        m = market.quote(model, d, theta_true, procedure)
        total += p * abs(a - m)
    return total


def expected_profit_sd(model, theta_true, agent, market, procedure=None, n: int = 2) -> float:
    """Per-round standard deviation of the arbitrage profit."""
    procedure = procedure or triple_interval()
    m1 = m2 = Fraction(0)
    for d, p in _outcomes(model, theta_true, n):
        x = abs(agent.quote(model, d, theta_true, procedure) - market.quote(model, d, theta_true,
                                                                           procedure))
        m1 += p * x
        m2 += p * x * x
    return float(m2 - m1 * m1) ** 0.5


def trump_fixture() -> MarketLedger:
    """One round: the agent sells at 0.10 what the market buys at 0.25."""
    t = arbitrage(0.10, 0.25)
    r = BetRound(0, None, None, "agent", t.agent_price, t.market_price, t.direction,
                 t.profit, True, t.net(True), t.net(True), t.net(False))
    return MarketLedger([r], 0, MARKET, ("agent",))


LEDGER_COLUMNS = ["round", "R_bin", "agent_id", "agent_price", "market_price", "profit", "outcome"]


def write_ledger_csv(ledger: MarketLedger, path):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.writer(fh)
        w.writerow(LEDGER_COLUMNS)
        for r in ledger.rounds:
            w.writerow([r.round, "" if r.info is None else r.info, r.agent_id, str(r.agent_price),
                        "" if r.market_price is None else str(r.market_price), str(r.profit),
                        int(r.outcome)])
