from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bargainlab.core import (
    BLUE,
    RED,
    TIE,
    GameStatus,
    InfeasibleTrade,
    MissingValuation,
    ResourceBundle,
    ScenarioKind,
    Trade,
    Valuation,
    ValuationKind,
    apply_trade,
    classify_winner,
    is_feasible,
    opponent,
    payoff,
)

SB_VALUATIONS = (
    Valuation(RED, ValuationKind.COST_OF_PRODUCTION, 40),
    Valuation(BLUE, ValuationKind.WILLINGNESS_TO_PAY, 60),
)


def test_bundle_drops_zeros_and_sorts():
    b = ResourceBundle(Y=2, X=0, A=1)
    assert list(b.items()) == [("A", 1), ("Y", 2)]
    assert b["X"] == 0
    assert b == ResourceBundle({"A": 1, "Y": 2})
    assert b.total() == 3


def test_bundle_rejects_negative_and_non_int():
    with pytest.raises(ValueError):
        ResourceBundle(X=-1)
    with pytest.raises((TypeError, ValueError)):
        ResourceBundle(X=1.5)


def test_bundle_arithmetic():
    a = ResourceBundle(X=5, Y=1)
    assert a + ResourceBundle(Y=2) == ResourceBundle(X=5, Y=3)
    assert a - ResourceBundle(X=5) == ResourceBundle(Y=1)
    with pytest.raises(InfeasibleTrade):
        a - ResourceBundle(Y=2)
    assert a.covers(ResourceBundle(X=5)) and not a.covers(ResourceBundle(Z=1))
    assert a.scaled(10, ["X"]) == ResourceBundle(X=50, Y=1)


def test_opponent():
    assert opponent(RED) == BLUE and opponent(BLUE) == RED
    with pytest.raises(ValueError):
        opponent("GREEN")


def test_trade_sides_and_price():
    t = Trade(ResourceBundle(X=1), ResourceBundle(ZUP=45), proposer=RED)
    assert t.gives(RED) == ResourceBundle(X=1)
    assert t.receives(RED) == ResourceBundle(ZUP=45)
    assert t.price("ZUP") == 45
    assert Trade(ResourceBundle(), ResourceBundle(), RED).is_empty()


def test_feasibility():
    t = Trade(ResourceBundle(Dollars=30), ResourceBundle(Dollars=10), proposer=RED)
    assert not is_feasible(t, ResourceBundle(Dollars=100), ResourceBundle())
    with pytest.raises(InfeasibleTrade):
        apply_trade(t, ResourceBundle(Dollars=100), ResourceBundle())


def test_resource_exchange_payoff_is_net_gain():
    start = ResourceBundle(X=25, Y=5)
    assert payoff(ScenarioKind.RESOURCE_EXCHANGE, RED, start, ResourceBundle(X=15, Y=20)) == 5
    assert payoff(ScenarioKind.RESOURCE_EXCHANGE, RED, start, start) == 0


def test_ultimatum_payoff():
    start = ResourceBundle(Dollars=100)
    end = ResourceBundle(Dollars=60)
    assert payoff(ScenarioKind.ULTIMATUM, RED, start, end, status=GameStatus.ACCEPTED) == 60
    for status in (GameStatus.MAX_TURNS, GameStatus.FORFEIT):
        assert payoff(ScenarioKind.ULTIMATUM, RED, start, start, status=status) == 0


def test_seller_buyer_payoff():
    seller_end = ResourceBundle(ZUP=45)
    buyer_end = ResourceBundle(X=1, ZUP=55)
    kind = ScenarioKind.SELLER_BUYER
    assert payoff(kind, RED, ResourceBundle(X=1), seller_end, SB_VALUATIONS) == 5
    assert payoff(kind, BLUE, ResourceBundle(ZUP=100), buyer_end, SB_VALUATIONS) == 15
    no_deal = payoff(kind, RED, ResourceBundle(X=1), ResourceBundle(X=1), SB_VALUATIONS, GameStatus.MAX_TURNS)
    assert no_deal == 0
    with pytest.raises(MissingValuation):
        payoff(kind, RED, ResourceBundle(X=1), seller_end, ())


@pytest.mark.parametrize("price,winner", [(45, BLUE), (50, TIE), (55, RED)])
def test_seller_buyer_midpoint_rule(price, winner):
    payoffs = {RED: Fraction(price - 40), BLUE: Fraction(60 - price)}
    assert classify_winner(ScenarioKind.SELLER_BUYER, payoffs, SB_VALUATIONS) == winner


def test_classify_winner_simple():
    assert classify_winner(ScenarioKind.ULTIMATUM, {RED: Fraction(99), BLUE: Fraction(1)}) == RED
    assert classify_winner(ScenarioKind.RESOURCE_EXCHANGE, {RED: Fraction(0), BLUE: Fraction(0)}) == TIE


bundles = st.dictionaries(st.sampled_from("XYZ"), st.integers(0, 30)).map(ResourceBundle)


@given(bundles, bundles, st.data())
def test_trade_conserves_resources(red, blue, data):
    gives = ResourceBundle({k: data.draw(st.integers(0, v)) for k, v in red.items()})
    gets = ResourceBundle({k: data.draw(st.integers(0, v)) for k, v in blue.items()})
    new_red, new_blue = apply_trade(Trade(gives, gets, RED), red, blue)
    assert new_red + new_blue == red + blue
    assert new_red.total() - red.total() == gets.total() - gives.total()
