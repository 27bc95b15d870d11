from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from epiconf.dutchbook import (BUY, MARKET, NO_TRADE, SELL, TWO_AGENT, ConditionalPolicy,
                               FullConfidencePolicy, MarginalPolicy, arbitrage, as_price,
                               default_market, expected_profit, expected_profit_sd,
                               simulate_market, triple_interval, trump_fixture,
                               write_ledger_csv)
from epiconf.discrete import evans_mle_guess
from epiconf.errors import CapabilityError, ConfigError, DomainError
from epiconf.experiments import range_statistic
from epiconf.models import Dataset, get_model

TRIPLE = get_model("discrete_uniform_triple")
PRICES = st.fractions(min_value=0, max_value=1, max_denominator=1000)


def test_prices_are_exact():
    assert as_price(0.1) == Fraction(1, 10)
    assert as_price(Fraction(2, 7)) == Fraction(2, 7)
    with pytest.raises(DomainError):
        as_price(1.5)


@given(a=PRICES, m=PRICES)
def test_arbitrage_is_risk_free_and_never_loses(a, m):
    t = arbitrage(a, m)
    assert t.net(True) == t.net(False) == t.profit == abs(a - m)
    assert t.direction == (BUY if a < m else SELL if a > m else NO_TRADE)


def test_fixed_fixture():
    ledger = trump_fixture()
    r = ledger.rounds[0]
    assert r.direction == BUY and r.profit == Fraction(3, 20)
    assert ledger.all_risk_free()


def test_market_prices_for_the_triple():
    market = ConditionalPolicy(range_statistic())
    iv = triple_interval()
    assert market.quote(TRIPLE, Dataset((4, 4)), 4, iv) == Fraction(1, 3)
    assert market.quote(TRIPLE, Dataset((3, 5)), 4, iv) == 1
    assert MarginalPolicy().quote(TRIPLE, Dataset((3, 5)), 4, iv) == Fraction(7, 9)
    assert FullConfidencePolicy().quote(TRIPLE, Dataset((4, 4)), 4, iv) == Fraction(1, 3)


def test_expected_profit_against_hand_computation():
    # P(R=0) |7/9 - 1/3| + P(R>0) |7/9 - 1| = (1/3)(4/9) + (2/3)(2/9)
    market = default_market(TRIPLE)
    assert expected_profit(TRIPLE, 4, MarginalPolicy(), market) == Fraction(8, 27)
    assert expected_profit(TRIPLE, 4, FullConfidencePolicy(), market) == 0
    sd = expected_profit_sd(TRIPLE, 4, MarginalPolicy(), market)
    assert sd == pytest.approx(math.sqrt(float(Fraction(1, 3) * Fraction(16, 81)
                                              + Fraction(2, 3) * Fraction(4, 81)
                                              - Fraction(8, 27) ** 2)))


def test_market_simulation_extracts_the_expected_profit():
    agents = {"marginal": MarginalPolicy(), "full": FullConfidencePolicy()}
    n = 3000
    ledger = simulate_market(TRIPLE, 4, agents, n, seed=17)
    assert ledger.all_risk_free()
    assert ledger.losing_rounds("marginal") == 0
    assert ledger.cumulative("full") == 0
    expected = n * 8 / 27
    assert abs(float(ledger.cumulative("marginal")) - expected) < 4 * ledger.std_error("marginal")
    again = simulate_market(TRIPLE, 4, agents, n, seed=17)
    assert again.cumulative("marginal") == ledger.cumulative("marginal")


def test_two_agent_mode_has_losing_rounds():
    ledger = simulate_market(TRIPLE, 4, {"marginal": MarginalPolicy()}, 500, seed=3, mode=TWO_AGENT)
    assert ledger.mode == TWO_AGENT
    assert ledger.losing_rounds("marginal") > 0
    assert not ledger.all_risk_free()


def test_market_refuses_to_quote_for_two_competing_ancillaries():
    m = get_model("evans_2x2")
    assert default_market(m) is None
    ledger = simulate_market(m, 1, {"fixed": MarginalPolicy(Fraction(1, 2))}, 20, seed=1,
                             procedure=evans_mle_guess(), n=1)
    assert ledger.no_trade_rounds("fixed") == 20
    with pytest.raises(ConfigError):
        simulate_market(m, 1, {"fixed": MarginalPolicy(0.5)}, 5, seed=1,
                        procedure=evans_mle_guess(), n=1, mode=TWO_AGENT)


def test_no_market_for_continuous_models():
    with pytest.raises(CapabilityError):
        default_market(get_model("normal_location"))
    with pytest.raises(ConfigError):
        simulate_market(TRIPLE, 4, {}, 1, seed=0, mode="auction")


def test_ledger_csv(tmp_path):
    ledger = simulate_market(TRIPLE, 4, {"marginal": MarginalPolicy()}, 10, seed=2)
    path = tmp_path / "ledger.csv"
    write_ledger_csv(ledger, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == "round,R_bin,agent_id,agent_price,market_price,profit,outcome"
    assert len(lines) == 12
    assert ledger.mode == MARKET
