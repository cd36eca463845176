"""Named end-to-end experiments. Each writes ``table.csv``, ``pairs.csv`` and ``summary.json``.

Defaults are 100 games per condition, 20 trials per amount and amounts 0..10,
played by deterministic scripted agents. Pass LLM agent specs to run the same
pipelines against a backend.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

from .agents import AgentSpec, scripted
from .analysis import (
    AnalysisError,
    CounterofferRate,
    EmptyDenominator,
    acceptance_games,
    anchoring_probe,
    bad_counteroffer_rate,
    binomial_test_one_tailed,
    completed,
    mean_payoff,
    player1_share,
    proposal_series,
    split_difference_probe,
    win_rate,
)
from .core import BLUE, RED, GameStatus, ScenarioKind
from .records import GameRecord, spec_from_dict
from .seeding import derive_seed
from .tournament import _csv, decimal, exact, play, run_games, write_files


class UnknownExperiment(ValueError):
    pass


class MissingParam(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    summary: dict[str, Any]
    files: dict[str, str]
    records: tuple[GameRecord, ...]


def agent_param(params: Mapping[str, Any], key: str, default: AgentSpec | None = None) -> AgentSpec:
    value = params.get(key, default)
    if value is None:
        raise MissingParam(f"experiment needs the {key!r} agent")
    return value if isinstance(value, AgentSpec) else spec_from_dict(value)


def _rho(value: Fraction | float | None) -> str | float | None:
    return str(value) if isinstance(value, Fraction) else value


def _sb_games(params: Mapping[str, Any], seed: int, seller: AgentSpec, buyer: AgentSpec, games: int,
              overrides: Mapping[str, Any], tag: str = "") -> list[GameRecord]:
    jobs = list(range(games))
    kind = ScenarioKind.SELLER_BUYER
    return run_games(
        jobs, lambda g: play(kind, overrides, seller, buyer, derive_seed(seed, tag, g)),
        int(params.get("parallelism", 1)),
    )


def _sampled(params: Mapping[str, Any]) -> dict[str, Any]:
    return {"sample_valuations": True, **params.get("overrides", {})}


def anchoring(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    """Initial proposal vs final price.

    With ``anchors`` the seller's opening price is swept (scripted sellers
    only); otherwise ``games`` games with sampled valuations are played.
    """
    seller = agent_param(params, "seller", scripted("seller", "anchor_concede", reservation=40, gamma="1/4"))
    buyer = agent_param(params, "buyer", scripted("buyer", "split_difference", anchor=20, threshold=5))
    anchors = params.get("anchors")
    if anchors is None and seller.kind == "scripted" and "seller" not in params:
        anchors = list(range(60, 141, 10))
    if anchors is not None:
        if seller.kind != "scripted":
            raise MissingParam("an anchor sweep needs a scripted seller")
        overrides = {"cost": 40, "willingness": 80, "buyer_budget": 200, "max_rounds": 5,
                     **params.get("overrides", {})}
        records = []
        for a in anchors:
            spec = replace(seller, params={**seller.params, "anchor": int(a)})
            records += _sb_games(params, seed, spec, buyer, 1, overrides, f"anchor{a}")
    else:
        records = _sb_games(params, seed, seller, buyer, int(params.get("games", 100)), _sampled(params))
    result = anchoring_probe(records)
    summary = {"statistic": "spearman(first proposal, final price)", "rho": _rho(result.rho), "n": result.n,
               "games": len(records)}
    pairs = _csv([["first_price", "final_price"], *result.pairs])
    return ExperimentReport("anchoring", summary, {"pairs.csv": pairs, "table.csv": pairs}, tuple(records))


def split_difference_experiment(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    seller = agent_param(params, "seller", scripted("seller", "split_difference"))
    buyer = agent_param(params, "buyer", scripted("buyer", "split_difference"))
    records = _sb_games(params, seed, seller, buyer, int(params.get("games", 100)), _sampled(params))
    result = split_difference_probe(records)
    summary = {"statistic": "spearman(mean of two latest proposals, next proposal)",
               "rho": _rho(result.rho), "n": result.n, "games": len(records)}
    rows = [[decimal(m), decimal(p)] for m, p in result.pairs]
    pairs = _csv([["midpoint", "next_price"], *rows])
    return ExperimentReport("split_difference", summary, {"pairs.csv": pairs, "table.csv": pairs}, tuple(records))


def _rate_or_none(records: Sequence[GameRecord]) -> CounterofferRate | None:
    try:
        return bad_counteroffer_rate(records)
    except EmptyDenominator:
        return None


def _rate_doc(r: CounterofferRate | None) -> dict[str, Any]:
    if r is None:
        return {"bad": 0, "total": 0, "rate": None}
    return {"bad": r.bad, "total": r.total, "rate": exact(r.rate)}


def _rate_row(r: CounterofferRate | None) -> list[Any]:
    return [0, 0, ""] if r is None else [r.bad, r.total, decimal(r.rate)]


def overvalued_buyer(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    """Counter-proposals above the opening price, baseline vs a buyer valuing the good 10x its cost.

    Significance: one-tailed binomial test of the treatment count with the
    baseline rate as the null probability.
    """
    seller = agent_param(params, "seller", scripted("seller", "split_difference"))
    buyer = agent_param(params, "buyer", scripted("buyer", "split_difference"))
    games = int(params.get("games", 100))
    base = _sb_games(params, seed, seller, buyer, games, _sampled(params), "baseline")
    treat = _sb_games(params, seed, seller, buyer, games, {**_sampled(params), "overvalued_buyer": True},
                      "overvalued")
    b, t = _rate_or_none(base), _rate_or_none(treat)
    p_value, note = None, None
    try:
        if b is None or t is None:
            raise AnalysisError("a condition has no buyer counter-proposal")
        p_value = binomial_test_one_tailed(t.bad, t.total, b.rate)
    except AnalysisError as exc:
        note = f"binomial test undefined: {exc}"
    summary = {
        "statistic": "P(buyer counter-proposal > seller opening price)",
        "test": "one-tailed binomial, k = overvalued count, p0 = baseline rate",
        "baseline": _rate_doc(b),
        "overvalued": _rate_doc(t),
        "p_value": exact(p_value),
        "note": note,
    }
    table = _csv([["condition", "bad", "total", "rate"],
                  ["baseline", *_rate_row(b)],
                  ["overvalued", *_rate_row(t)]])
    pair_rows = [["condition", "first_price", "second_price"]]
    for name, recs in (("baseline", base), ("overvalued", treat)):
        for r in completed(recs):
            prices = proposal_series(r).prices
            if len(prices) >= 2:
                pair_rows.append([name, prices[0], prices[1]])
    return ExperimentReport("overvalued_buyer", summary, {"table.csv": table, "pairs.csv": _csv(pair_rows)},
                            tuple(base + treat))


def acceptance_curve_experiment(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    decider = agent_param(params, "decider", scripted("decider", "rational_ultimatum"))
    variant = params.get("variant", "classical_2turn")
    amounts = list(params.get("amounts", range(0, 11)))
    trials = int(params.get("trials", 20))
    total = params.get("total")
    grouped = acceptance_games(decider, variant, amounts, trials, seed, total)
    rows = [["amount", "accepted", "trials", "fraction"]]
    curve = []
    records: list[GameRecord] = []
    for amount, games in grouped:
        records += games
        done = completed(games)
        accepted = sum(g.outcome.status is GameStatus.ACCEPTED for g in done)
        fraction = Fraction(accepted, len(done)) if done else None
        rows.append([amount, accepted, len(done), decimal(fraction)])
        curve.append({"amount": amount, "accepted": accepted, "trials": len(done), "fraction": exact(fraction)})
    summary = {"statistic": "P(accept | amount offered to the decider)", "variant": variant, "curve": curve}
    table = _csv(rows)
    return ExperimentReport("acceptance_curve", summary, {"table.csv": table, "pairs.csv": table}, tuple(records))


def split_scaling(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    red = agent_param(params, "player1", scripted("player1", "rational_ultimatum"))
    blue = agent_param(params, "player2", scripted("player2", "rational_ultimatum"))
    amounts = [int(a) for a in params.get("amounts", [10**k for k in range(1, 11)])]
    games = int(params.get("games", 20))
    if not amounts:
        raise MissingParam("split_scaling needs at least one amount")
    kind = ScenarioKind.ULTIMATUM
    jobs = [(a, g) for a in amounts for g in range(games)]
    records = run_games(
        jobs,
        lambda j: play(kind, {**params.get("overrides", {}), "amount": j[0]}, red, blue, derive_seed(seed, *j)),
        int(params.get("parallelism", 1)),
    )
    rows = [["amount", "games", "mean_player1_share"]]
    curve = []
    for i, amount in enumerate(amounts):
        done = completed(records[i * games:(i + 1) * games])
        share = sum((player1_share(r) for r in done), Fraction(0)) / len(done) if done else None
        rows.append([amount, len(done), decimal(share)])
        curve.append({"amount": amount, "games": len(done), "share": exact(share)})
    summary = {"statistic": "mean share of the endowment kept by Player 1", "curve": curve}
    table = _csv(rows)
    return ExperimentReport("split_scaling", summary, {"table.csv": table, "pairs.csv": table}, tuple(records))


def buyer_surplus_share(record: GameRecord) -> Fraction | None:
    """Buyer's part of the available surplus ``(wtp - price) / (wtp - cost)``; None without a sale."""
    series = proposal_series(record)
    if series.final_price is None or series.willingness == series.cost:
        return None
    return Fraction(series.willingness - series.final_price, series.willingness - series.cost)


def denomination_scaling(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    seller = agent_param(params, "seller", scripted("seller", "anchor_concede"))
    buyer = agent_param(params, "buyer", scripted("buyer", "anchor_concede"))
    scales = [int(x) for x in params.get("scales", [1, 10, 100])]
    games = int(params.get("games", 100))
    rows = [["scale", "games", "sales", "mean_buyer_share"]]
    curve = []
    records: list[GameRecord] = []
    for x in scales:
        overrides = {**params.get("overrides", {}), "scale": x}
        recs = _sb_games(params, seed, seller, buyer, games, overrides, f"scale{x}")
        records += recs
        shares = [s for s in (buyer_surplus_share(r) for r in completed(recs)) if s is not None]
        mean = sum(shares, Fraction(0)) / len(shares) if shares else None
        rows.append([x, len(recs), len(shares), decimal(mean)])
        curve.append({"scale": x, "games": len(recs), "sales": len(shares), "buyer_share": exact(mean)})
    summary = {"statistic": "buyer share of the surplus (wtp - price) / (wtp - cost)", "curve": curve}
    table = _csv(rows)
    return ExperimentReport("denomination_scaling", summary, {"table.csv": table, "pairs.csv": table},
                            tuple(records))


def behavior(params: Mapping[str, Any], seed: int) -> ExperimentReport:
    """Player 1 plays without a persona while Player 2 cycles through default/cunning/desperate."""
    kind = ScenarioKind(params.get("scenario", "seller_buyer"))
    defaults = {
        ScenarioKind.RESOURCE_EXCHANGE: "net_gain_trader",
        ScenarioKind.ULTIMATUM: "rational_ultimatum",
        ScenarioKind.SELLER_BUYER: "anchor_concede",
    }
    red = agent_param(params, "player1", scripted("player1", defaults[kind]))
    blue = agent_param(params, "player2", scripted("player2", defaults[kind]))
    behaviors = list(params.get("behaviors", ["default", "cunning", "desperate"]))
    games = int(params.get("games", 80))
    rows = [["behavior", "games", "win_rate_player2", "mean_payoff_player1", "mean_payoff_player2"]]
    results = []
    records: list[GameRecord] = []
    red = replace(red, behavior=None)
    for name in behaviors:
        spec = replace(blue, behavior=None if name == "default" else name)
        recs = run_games(
            list(range(games)),
            lambda g: play(kind, params.get("overrides", {}), red, spec, derive_seed(seed, name, g)),
            int(params.get("parallelism", 1)),
        )
        records += recs
        done = completed(recs)
        rate = win_rate(recs, BLUE)
        m1 = mean_payoff(done, RED) if done else None
        m2 = mean_payoff(done, BLUE) if done else None
        rows.append([name, len(done), decimal(rate), decimal(m1), decimal(m2)])
        results.append({"behavior": name, "games": len(done), "win_rate_player2": exact(rate),
                        "mean_payoff_player1": exact(m1), "mean_payoff_player2": exact(m2)})
    summary = {"statistic": "Player 2 win rate and mean payoffs by behavior", "scenario": kind.value,
               "results": results}
    table = _csv(rows)
    return ExperimentReport("behavior", summary, {"table.csv": table, "pairs.csv": table}, tuple(records))


EXPERIMENTS: dict[str, Callable[[Mapping[str, Any], int], ExperimentReport]] = {
    "anchoring": anchoring,
    "split_difference": split_difference_experiment,
    "overvalued_buyer": overvalued_buyer,
    "acceptance_curve": acceptance_curve_experiment,
    "split_scaling": split_scaling,
    "denomination_scaling": denomination_scaling,
    "behavior": behavior,
}


def run_experiment(name: str, params: Mapping[str, Any] | None = None, seed: int = 0,
                   out_dir: str | Path | None = None) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise UnknownExperiment(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
    report = EXPERIMENTS[name](dict(params or {}), seed)
    summary = {"experiment": name, "seed": seed, **report.summary}
    files = {**report.files, "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n"}
    report = replace(report, summary=summary, files=files)
    if out_dir is not None:
        write_files(Path(out_dir), files)
    return report


def experiment_names() -> Sequence[str]:
    return sorted(EXPERIMENTS)
