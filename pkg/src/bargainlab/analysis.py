"""Statistics over game records: tournament metrics and irrationality probes.

Everything stays in exact rationals when the inputs are rational. The one
exception is Spearman's rho, whose denominator is a square root: it is a
``Fraction`` when that root is rational and a float otherwise.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real

from .agents import AgentSpec, make_agent, scripted
from .core import BLUE, RED, TIE, GameStatus, ResourceBundle, ScenarioKind, Trade
from .engine import run
from .protocol import Decision, StructuredMessage, render_message
from .records import GameRecord
from .scenarios import ScenarioConfig, build
from .seeding import derive_seed


class AnalysisError(ValueError):
    pass


class EmptyInput(AnalysisError):
    pass


class LengthMismatch(AnalysisError):
    pass


class DegenerateInput(AnalysisError):
    pass


class NoAcceptedSales(AnalysisError):
    pass


class NoEligibleSeries(AnalysisError):
    pass


class EmptyDenominator(AnalysisError):
    pass


class InvalidParams(AnalysisError):
    pass


class InvalidVariant(AnalysisError):
    pass


class EmptyAmounts(AnalysisError):
    pass


def completed(records: Iterable[GameRecord]) -> list[GameRecord]:
    return [r for r in records if not r.aborted]


def win_rate(records: Sequence[GameRecord], player: str) -> Fraction | None:
    """Wins over decisive games; ``None`` marks a set with no decisive game."""
    if not records:
        raise EmptyInput("no records")
    decisive = [r for r in completed(records) if r.outcome.winner != TIE]
    if not decisive:
        return None
    return Fraction(sum(r.outcome.winner == player for r in decisive), len(decisive))


def mean_payoff(records: Sequence[GameRecord], player: str) -> Fraction:
    """Mean over every completed game, ties and no-deals included."""
    games = completed(records)
    if not games:
        raise EmptyInput("no completed records")
    return sum((r.outcome.payoffs[player] for r in games), Fraction(0)) / len(games)


def average_ranks(values: Sequence[Real]) -> list[Fraction]:
    """1-based ranks; tied values share the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks: list[Fraction] = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = Fraction(i + j + 2, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _exact_sqrt(q: Fraction) -> Fraction | None:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def spearman(x: Sequence[Real], y: Sequence[Real]) -> Fraction | float:
    """Pearson correlation of the average ranks of ``x`` and ``y``."""
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise InvalidParams("need at least two observations")
    rx, ry = average_ranks(x), average_ranks(y)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        raise DegenerateInput("a constant vector has no rank correlation")
    root = _exact_sqrt(vx * vy)
    if root is not None:
        return cov / root
    return float(cov) / math.sqrt(vx * vy)


@dataclass(frozen=True)
class ProposalSeries:
    """Price proposals of one seller/buyer game in transcript order."""

    prices: tuple[int, ...]
    proposers: tuple[str, ...]
    final_price: int | None
    cost: int
    willingness: int

    def by_seller(self, seller: str) -> bool:
        return all((p == seller) == (i % 2 == 0) for i, p in enumerate(self.proposers))


def proposal_series(record: GameRecord) -> ProposalSeries:
    config = record.config
    if config.kind is not ScenarioKind.SELLER_BUYER:
        raise InvalidParams("proposal series only exist for seller/buyer games")
    currency = config.currency
    prices, proposers = [], []
    for entry in record.transcript:
        if entry.message.decision is Decision.PROPOSE:
            prices.append(entry.message.trade.price(currency))
            proposers.append(entry.player)
    final = None
    if record.outcome.status is GameStatus.ACCEPTED:
        buyer = config.buyer
        final = config.endowments[buyer][currency] - record.outcome.final_holdings[buyer][currency]
    cost = config.valuation(config.seller).amount
    wtp = config.valuation(config.buyer).amount
    return ProposalSeries(tuple(prices), tuple(proposers), final, cost, wtp)


@dataclass(frozen=True)
class CorrelationResult:
    pairs: tuple[tuple[Real, Real], ...]
    rho: Fraction | float | None  # None: degenerate (constant) input

    @property
    def n(self) -> int:
        return len(self.pairs)


def _rho_or_none(pairs: Sequence[tuple[Real, Real]]) -> Fraction | float | None:
    try:
        return spearman([a for a, _ in pairs], [b for _, b in pairs])
    except (DegenerateInput, InvalidParams):
        return None


def anchoring_probe(records: Sequence[GameRecord]) -> CorrelationResult:
    """Pairs of (first proposal, final accepted price) and their rank correlation."""
    pairs = []
    for record in completed(records):
        series = proposal_series(record)
        if series.final_price is not None and series.prices:
            pairs.append((series.prices[0], series.final_price))
    if not pairs:
        raise NoAcceptedSales("no accepted sales among the records")
    return CorrelationResult(tuple(pairs), _rho_or_none(pairs))


def split_difference_probe(records: Sequence[GameRecord]) -> CorrelationResult:
    """Pooled pairs of (mean of the two latest proposals, next proposal)."""
    pairs = []
    for record in completed(records):
        prices = proposal_series(record).prices
        for t in range(1, len(prices) - 1):
            pairs.append((Fraction(prices[t] + prices[t - 1], 2), Fraction(prices[t + 1])))
    if not pairs:
        raise NoEligibleSeries("no game has three or more proposals")
    return CorrelationResult(tuple(pairs), _rho_or_none(pairs))


@dataclass(frozen=True)
class CounterofferRate:
    bad: int
    total: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.bad, self.total)


def bad_counteroffer_rate(records: Sequence[GameRecord]) -> CounterofferRate:
    """Share of games whose buyer counter-proposal exceeds the seller's opening price."""
    bad = total = 0
    for record in completed(records):
        series = proposal_series(record)
        if len(series.prices) < 2:
            continue
        total += 1
        bad += series.prices[1] > series.prices[0]
    if total == 0:
        raise EmptyDenominator("no game has a buyer counter-proposal")
    return CounterofferRate(bad, total)


def binomial_test_one_tailed(k: int, n: int, p0: Rational | float) -> Fraction:
    """Exact upper-tail p-value ``P(X >= k)`` for ``X ~ Binomial(n, p0)``."""
    p = p0 if isinstance(p0, Fraction) else Fraction(str(p0))
    if not (0 <= k <= n) or not (0 < p < 1):
        raise InvalidParams(f"need 0 <= k <= n and 0 < p0 < 1, got k={k}, n={n}, p0={p0}")
    return sum((math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(k, n + 1)), Fraction(0))


def ultimatum_offer_text(variant: str, amount: int, total: int) -> str:
    """Controlled proposal giving the decider ``amount`` of ``total`` dollars."""
    if variant == "classical_2turn":
        trade = Trade(ResourceBundle(Dollars=amount), ResourceBundle(), proposer=RED)
        msg = StructuredMessage(RED, (1, 1), public_text=f"You get {amount}.", trade=trade,
                                decision=Decision.PROPOSE)
    else:
        trade = Trade(ResourceBundle(Dollars=total - amount), ResourceBundle(), proposer=BLUE)
        msg = StructuredMessage(BLUE, (1, 1), public_text=f"You keep {amount}.", trade=trade,
                                decision=Decision.PROPOSE)
    return render_message(msg)


@dataclass(frozen=True)
class CurvePoint:
    amount: int
    accepted: int
    trials: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.accepted, self.trials)


def acceptance_games(
    decider: AgentSpec, variant: str, amounts: Iterable[int], trials: int, seed: int, total: int | None = None
) -> list[tuple[int, list[GameRecord]]]:
    if variant not in ("classical_2turn", "three_turn"):
        raise InvalidVariant(f"acceptance curves need classical_2turn or three_turn, not {variant!r}")
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    amounts = list(amounts)
    if not amounts:
        raise EmptyAmounts("no amounts given")
    total = max(amounts) if total is None else total
    position = 0 if variant == "classical_2turn" else 1
    out = []
    for amount in amounts:
        text = ultimatum_offer_text(variant, amount, total)
        config = build(
            ScenarioKind.ULTIMATUM, {"amount": total, "ultimatum_turns": variant, "injected": [(position, text)]}
        )
        controlled = scripted("controlled-proposer", "fixed_sequence", moves=[text])
        games = []
        for trial in range(trials):
            agent = make_agent(decider)
            other = make_agent(controlled)
            red, blue = (other, agent) if variant == "classical_2turn" else (agent, other)
            games.append(run(config, red, blue, derive_seed(seed, amount, trial)))
        out.append((amount, games))
    return out


def acceptance_curve(
    decider: AgentSpec, variant: str, amounts: Iterable[int], trials: int, seed: int, total: int | None = None
) -> list[CurvePoint]:
    """Estimated P(accept | amount) for a decider facing a controlled proposer.

    Classical: the proposer moves first and the decider (Player 2) answers.
    Three-turn: the decider also plays turn 1 and Player 2's turn-2 proposal
    is the controlled one.
    """
    points = []
    for amount, games in acceptance_games(decider, variant, amounts, trials, seed, total):
        games = completed(games)
        accepted = sum(g.outcome.status is GameStatus.ACCEPTED for g in games)
        points.append(CurvePoint(amount, accepted, len(games)))
    return points


def player1_share(record: GameRecord) -> Fraction:
    total = record.config.endowments[RED]["Dollars"]
    return record.outcome.payoffs[RED] / total


def split_scaling_sweep(
    amounts: Iterable[int],
    agents: tuple[AgentSpec, AgentSpec],
    games_per_amount: int,
    seed: int,
    overrides: dict | None = None,
) -> list[tuple[int, Fraction, list[GameRecord]]]:
    """Mean share of the endowment won by Player 1 for each amount to split."""
    amounts = list(amounts)
    if not amounts:
        raise EmptyAmounts("no amounts given")
    if any(a <= 0 for a in amounts) or games_per_amount < 1:
        raise InvalidParams("amounts and games per amount must be positive")
    out = []
    for amount in amounts:
        config = build(ScenarioKind.ULTIMATUM, {**(overrides or {}), "amount": amount})
        games = [
            run(config, make_agent(agents[0]), make_agent(agents[1]), derive_seed(seed, amount, g))
            for g in range(games_per_amount)
        ]
        done = completed(games)
        share = sum((player1_share(g) for g in done), Fraction(0)) / len(done) if done else None
        out.append((amount, share, games))
    return out


@dataclass(frozen=True)
class CellMetrics:
    red: str
    blue: str
    games: int
    aborted: int
    ties: int
    red_wins: int
    blue_wins: int
    win_rate_red: Fraction | None
    win_rate_blue: Fraction | None
    mean_payoff_red: Fraction | None
    mean_payoff_blue: Fraction | None


def cell_metrics(red: str, blue: str, records: Sequence[GameRecord]) -> CellMetrics:
    done = completed(records)
    red_wins = sum(r.outcome.winner == RED for r in done)
    blue_wins = sum(r.outcome.winner == BLUE for r in done)
    decisive = red_wins + blue_wins
    return CellMetrics(
        red=red,
        blue=blue,
        games=len(records),
        aborted=len(records) - len(done),
        ties=len(done) - decisive,
        red_wins=red_wins,
        blue_wins=blue_wins,
        win_rate_red=Fraction(red_wins, decisive) if decisive else None,
        win_rate_blue=Fraction(blue_wins, decisive) if decisive else None,
        mean_payoff_red=mean_payoff(done, RED) if done else None,
        mean_payoff_blue=mean_payoff(done, BLUE) if done else None,
    )


def metric_table(records: Sequence[GameRecord]) -> dict[tuple[str, str], CellMetrics]:
    """Per ordered (Player 1 id, Player 2 id) pair; (A, B) and (B, A) are distinct cells."""
    groups: dict[tuple[str, str], list[GameRecord]] = {}
    for r in records:
        groups.setdefault((r.agents[RED].id, r.agents[BLUE].id), []).append(r)
    return {key: cell_metrics(*key, games) for key, games in groups.items()}


def config_of(records: Sequence[GameRecord]) -> ScenarioConfig:
    if not records:
        raise EmptyInput("no records")
    return records[0].config
