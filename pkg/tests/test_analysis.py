from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bargainlab.agents import make_agent, scripted
from bargainlab.analysis import (
    DegenerateInput,
    EmptyAmounts,
    EmptyDenominator,
    EmptyInput,
    InvalidParams,
    InvalidVariant,
    LengthMismatch,
    NoAcceptedSales,
    acceptance_curve,
    anchoring_probe,
    average_ranks,
    bad_counteroffer_rate,
    binomial_test_one_tailed,
    cell_metrics,
    mean_payoff,
    metric_table,
    proposal_series,
    spearman,
    split_difference_probe,
    split_scaling_sweep,
    win_rate,
)
from bargainlab.core import BLUE, RED, ScenarioKind
from bargainlab.engine import run
from bargainlab.scenarios import build

from fuzz import valid_raw
from oracles import spearman_bruteforce


def ultimatum_game(offer: int, red_id: str = "a", blue_id: str = "b", seed: int = 0):
    """Classical game where RED offers ``offer`` of 100 and BLUE accepts."""
    config = build(ScenarioKind.ULTIMATUM, {"ultimatum_turns": "classical_2turn"})
    trade = f"Player RED Gives Dollars: {offer} | Player BLUE Gives nothing"
    red = scripted(red_id, "fixed_sequence", moves=[valid_raw(RED, trade=trade)])
    blue = scripted(blue_id, "fixed_sequence", moves=[valid_raw(BLUE, answer="ACCEPT")])
    return run(config, make_agent(red), make_agent(blue), seed)


def sale(seller: dict, buyer: dict, seed: int = 0, **overrides):
    config = build(ScenarioKind.SELLER_BUYER, {"buyer_budget": 200, **overrides})
    return run(config, make_agent(scripted("s", **seller)), make_agent(scripted("b", **buyer)), seed)


def test_spearman_known_values():
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == Fraction(3, 5)
    assert spearman([1, 2, 3], [3, 2, 1]) == -1
    assert spearman([10, 20, 30], [1, 4, 9]) == 1


def test_spearman_ties_use_average_ranks():
    assert average_ranks([5, 1, 5, 3]) == [Fraction(7, 2), 1, Fraction(7, 2), 2]
    assert math.isclose(spearman([1, 2, 2, 3], [1, 2, 3, 4]), float(spearman_bruteforce([1, 2, 2, 3], [1, 2, 3, 4])))


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(InvalidParams):
        spearman([1], [1])


values = st.lists(st.integers(-50, 50), min_size=2, max_size=12)


@given(values.flatmap(lambda xs: st.tuples(st.just(xs), st.lists(st.integers(-50, 50), min_size=len(xs), max_size=len(xs)))))
def test_spearman_properties(pair):
    x, y = pair
    try:
        rho = spearman(x, y)
    except DegenerateInput:
        return
    assert -1 <= rho <= 1
    assert math.isclose(float(rho), float(spearman(y, x)))
    assert math.isclose(float(rho), float(spearman_bruteforce(x, y)), abs_tol=1e-9)
    assert math.isclose(float(spearman([3 * v + 7 for v in x], y)), float(rho), abs_tol=1e-9)


def test_win_rate_and_mean_payoff():
    records = [ultimatum_game(10)] * 7 + [ultimatum_game(90)] * 3 + [ultimatum_game(50)] * 2
    assert win_rate(records, RED) == Fraction(7, 10)
    assert win_rate(records, BLUE) == Fraction(3, 10)
    assert mean_payoff([ultimatum_game(1)], RED) == 99
    assert mean_payoff([ultimatum_game(1)], BLUE) == 1


def test_win_rate_all_ties_is_undefined():
    assert win_rate([ultimatum_game(50)] * 4, RED) is None
    with pytest.raises(EmptyInput):
        win_rate([], RED)
    with pytest.raises(EmptyInput):
        mean_payoff([], RED)


def test_binomial_examples():
    assert binomial_test_one_tailed(8, 10, 0.5) == Fraction(56, 1024)
    assert binomial_test_one_tailed(0, 10, Fraction(1, 3)) == 1
    assert binomial_test_one_tailed(10, 10, Fraction(1, 2)) == Fraction(1, 1024)


@pytest.mark.parametrize("k,n,p", [(5, 3, 0.5), (-1, 3, 0.5), (1, 3, 0), (1, 3, 1), (1, 3, 1.5)])
def test_binomial_invalid(k, n, p):
    with pytest.raises(InvalidParams):
        binomial_test_one_tailed(k, n, p)


@given(st.integers(1, 25), st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)))
def test_binomial_monotone_in_k(n, p):
    tail = [binomial_test_one_tailed(k, n, p) for k in range(n + 1)]
    assert all(a >= b for a, b in zip(tail, tail[1:]))
    assert tail[0] == 1


def test_proposal_series_of_oracle(oracle_record):
    series = proposal_series(oracle_record)
    assert series.prices == (100, 20, 60, 40, 50, 45)
    assert series.final_price == 45


def test_split_difference_probe_exact_on_oracle(oracle_record):
    result = split_difference_probe([oracle_record])
    assert result.n == 4
    assert all(actual == predicted for actual, predicted in result.pairs)


def test_anchoring_probe_needs_sales():
    no_deal = sale({"strategy": "fixed_sequence", "moves": [{"price": 300}] * 5}, {"strategy": "split_difference"},
                   max_rounds=1)
    with pytest.raises(NoAcceptedSales):
        anchoring_probe([no_deal])


def test_anchoring_probe_on_sweep():
    records = [
        sale({"strategy": "anchor_concede", "anchor": a, "gamma": "1/4", "reservation": 40},
             {"strategy": "split_difference", "anchor": 20, "threshold": 5}, max_rounds=5)
        for a in (60, 100, 140)
    ]
    result = anchoring_probe(records)
    assert [p[0] for p in result.pairs] == [60, 100, 140]
    assert result.rho == 1


def test_bad_counteroffer_rate():
    high = sale({"strategy": "fixed_sequence", "moves": [{"price": 50}, {"answer": "ACCEPT"}]},
                {"strategy": "fixed_sequence", "moves": [{"price": 70}]})
    low = sale({"strategy": "fixed_sequence", "moves": [{"price": 50}, {"answer": "ACCEPT"}]},
               {"strategy": "fixed_sequence", "moves": [{"price": 30}]})
    r = bad_counteroffer_rate([high, low, low])
    assert (r.bad, r.total, r.rate) == (1, 3, Fraction(1, 3))
    single = sale({"strategy": "fixed_sequence", "moves": [{"price": 50}]},
                  {"strategy": "fixed_sequence", "moves": [{"answer": "ACCEPT"}]})
    with pytest.raises(EmptyDenominator):
        bad_counteroffer_rate([single])


def test_acceptance_curve_rational_decider():
    decider = scripted("r", "rational_ultimatum")
    classical = acceptance_curve(decider, "classical_2turn", range(0, 4), 2, seed=1)
    assert [(p.amount, p.fraction) for p in classical] == [(0, 0), (1, 1), (2, 1), (3, 1)]
    three = acceptance_curve(decider, "three_turn", [0, 5], 1, seed=1, total=10)
    assert [p.fraction for p in three] == [0, 1]


def test_acceptance_curve_errors():
    decider = scripted("r", "rational_ultimatum")
    with pytest.raises(InvalidParams):
        acceptance_curve(decider, "classical_2turn", [1], 0, seed=0)
    with pytest.raises(InvalidVariant):
        acceptance_curve(decider, "five_turn", [1], 1, seed=0)
    with pytest.raises(EmptyAmounts):
        acceptance_curve(decider, "classical_2turn", [], 1, seed=0)


def test_split_scaling_rational_share():
    a = scripted("r", "rational_ultimatum")
    rows = split_scaling_sweep([10, 1000], (a, a), 1, seed=0, overrides={"ultimatum_turns": "classical_2turn"})
    assert [(amount, share) for amount, share, _ in rows] == [(10, Fraction(9, 10)), (1000, Fraction(999, 1000))]
    with pytest.raises(InvalidParams):
        split_scaling_sweep([0], (a, a), 1, seed=0)


def test_metric_table_keeps_orientation():
    records = [ultimatum_game(10, "x", "y"), ultimatum_game(90, "y", "x")]
    table = metric_table(records)
    assert set(table) == {("x", "y"), ("y", "x")}
    assert table[("x", "y")].win_rate_red == 1 and table[("y", "x")].win_rate_blue == 1


def test_cell_metrics_counts_ties():
    cell = cell_metrics("a", "b", [ultimatum_game(50), ultimatum_game(10)])
    assert (cell.games, cell.ties, cell.red_wins, cell.blue_wins) == (2, 1, 1, 0)
    assert cell.mean_payoff_red == 70
