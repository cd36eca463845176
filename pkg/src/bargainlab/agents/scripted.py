"""Deterministic agents used as oracles and experiment controls.

Each strategy rebuilds what it needs from the conversation view on every
call, so an agent holds no state between turns or games.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from ..core import RED, ResourceBundle, ScenarioKind, Trade, apply_trade, opponent
from ..protocol import Decision, ProtocolError, StructuredMessage, parse_message, parse_trade, render_message
from .base import AgentSpec, ChatMessage, StrategyError, StrategyExhausted, TurnContext

NOTICE_PREFIX = "[invalid move]"


def read_history(view: Sequence[ChatMessage], ctx: TurnContext) -> list[StructuredMessage]:
    """Valid game messages visible in ``view``, oldest first.

    Rejected attempts (an assistant message followed by an engine notice) are
    dropped; anything that does not parse, such as the role assignment, is
    skipped.
    """
    history: list[tuple[str, StructuredMessage | None]] = []
    for item in view:
        if item.role == "system":
            continue
        if item.role == "user" and item.content.startswith(NOTICE_PREFIX):
            if history and history[-1][0] == "assistant":
                history.pop()
            continue
        try:
            msg = parse_message(item.content, ctx.config.vocabulary)
        except ProtocolError:
            msg = None
        history.append((item.role, msg))
    return [msg for _, msg in history if msg is not None]


def standing_proposal(history: Sequence[StructuredMessage]) -> Trade | None:
    standing = None
    for msg in history:
        if msg.decision is Decision.PROPOSE:
            standing = msg.trade
        elif msg.decision in (Decision.REJECT, Decision.ACCEPT):
            standing = None
    return standing


def incoming_offer(history: Sequence[StructuredMessage], me: str) -> Trade | None:
    standing = standing_proposal(history)
    if standing is not None and standing.proposer != me:
        return standing
    return None


def price_series(history: Sequence[StructuredMessage], currency: str) -> list[tuple[str, int]]:
    return [(m.player_name, m.trade.price(currency)) for m in history if m.decision is Decision.PROPOSE]


def _fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


def _round_half(value: Fraction, down: bool) -> int:
    """Nearest integer; exact halves go down when ``down`` else up."""
    floor = math.floor(value)
    rest = value - floor
    if rest > Fraction(1, 2):
        return floor + 1
    if rest < Fraction(1, 2):
        return floor
    return floor if down else floor + 1


@dataclass(frozen=True)
class Move:
    decision: Decision
    trade: Trade | None = None
    reasoning: str = ""
    public_text: str = ""


Strategy = Callable[[Mapping[str, Any], list[StructuredMessage], TurnContext], Move]


def _sale(ctx: TurnContext, price: int) -> Trade:
    config = ctx.config
    seller, buyer = config.seller, config.buyer
    sides = {seller: ResourceBundle({config.goods: 1}), buyer: ResourceBundle({config.currency: price})}
    return Trade(from_red=sides[RED], from_blue=sides[opponent(RED)], proposer=ctx.player)


def _require(ctx: TurnContext, kind: ScenarioKind, name: str) -> None:
    if ctx.config.kind is not kind:
        raise StrategyError(f"strategy {name} only plays {kind.value}, not {ctx.config.kind.value}")


def _default_anchor(ctx: TurnContext) -> int:
    own = ctx.config.valuation(ctx.player).amount
    return own * 5 // 2 if ctx.player == ctx.config.seller else own // 3


def split_difference(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move:
    _require(ctx, ScenarioKind.SELLER_BUYER, "split_difference")
    anchor = int(params.get("anchor", _default_anchor(ctx)))
    threshold = _fraction(params.get("threshold", 5))
    is_seller = ctx.player == ctx.config.seller
    prices = price_series(history, ctx.config.currency)
    own = [p for who, p in prices if who == ctx.player]
    if not own:
        return Move(Decision.PROPOSE, _sale(ctx, anchor), f"Opening at my anchor {anchor}.", f"I propose {anchor} ZUP.")
    offer = incoming_offer(history, ctx.player)
    if offer is not None:
        incoming = offer.price(ctx.config.currency)
        if abs(incoming - own[-1]) <= threshold:
            return Move(Decision.ACCEPT, None, f"{incoming} is within {threshold} of my last price.", "Deal.")
    if len(prices) < 2:
        return Move(Decision.PROPOSE, _sale(ctx, own[-1]), "Holding my price.", f"Still {own[-1]} ZUP.")
    latest, previous = prices[-1][1], prices[-2][1]
    midpoint = Fraction(latest + previous, 2)
    # exact halves round against the proposer's own interest
    price = _round_half(midpoint, down=is_seller)
    return Move(
        Decision.PROPOSE,
        _sale(ctx, price),
        f"Splitting the difference between {previous} and {latest}.",
        f"Let us meet in the middle at {price} ZUP.",
    )


def concession_schedule(anchor: int, reservation: int, gamma: Fraction, k: int) -> int:
    """k-th planned price: ``anchor - k*gamma*(anchor - reservation)``, clamped at the reservation.

    Non-integer steps round toward the anchor's side so the clamp is never crossed.
    """
    raw = anchor - k * gamma * (anchor - reservation)
    if anchor >= reservation:
        return max(reservation, math.ceil(raw))
    return min(reservation, math.floor(raw))


def anchor_concede(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move:
    _require(ctx, ScenarioKind.SELLER_BUYER, "anchor_concede")
    is_seller = ctx.player == ctx.config.seller
    anchor = int(params.get("anchor", _default_anchor(ctx)))
    reservation = int(params.get("reservation", ctx.config.valuation(ctx.player).amount))
    gamma = _fraction(params.get("gamma", Fraction(1, 4)))
    if not 0 < gamma < 1:
        raise StrategyError(f"concession rate must lie in (0, 1), got {gamma}")
    if (is_seller and anchor < reservation) or (not is_seller and anchor > reservation):
        raise StrategyError("anchor must sit on the profitable side of the reservation value")
    prices = price_series(history, ctx.config.currency)
    k = sum(1 for who, _ in prices if who == ctx.player)
    planned = concession_schedule(anchor, reservation, gamma, k)
    offer = incoming_offer(history, ctx.player)
    if offer is not None:
        incoming = offer.price(ctx.config.currency)
        if (is_seller and incoming >= planned) or (not is_seller and incoming <= planned):
            return Move(Decision.ACCEPT, None, f"{incoming} beats my planned {planned}.", "Accepted.")
    return Move(Decision.PROPOSE, _sale(ctx, planned), f"Conceding to {planned}.", f"I can do {planned} ZUP.")


def _ultimatum_total(ctx: TurnContext) -> int:
    return ctx.config.endowments[RED]["Dollars"]


def _share_after(trade: Trade, ctx: TurnContext) -> int:
    red, blue = apply_trade(trade, ctx.config.endowments[RED], ctx.config.endowments[opponent(RED)])
    return (red if ctx.player == RED else blue)["Dollars"]


def _ultimatum_offer(ctx: TurnContext, keep: int) -> Trade:
    total = _ultimatum_total(ctx)
    red_gives = total - keep if ctx.player == RED else keep
    return Trade(ResourceBundle(Dollars=red_gives), ResourceBundle(), proposer=ctx.player)


def rational_ultimatum(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move:
    """Backward induction: ask for everything but one unit, accept any positive share at the end."""
    _require(ctx, ScenarioKind.ULTIMATUM, "rational_ultimatum")
    offer = incoming_offer(history, ctx.player)
    if ctx.is_final:
        if offer is not None and _share_after(offer, ctx) > 0:
            return Move(Decision.ACCEPT, None, "Any positive amount beats nothing.", "I accept.")
        return Move(Decision.REJECT, None, "Nothing positive is on the table.", "I reject.")
    total = _ultimatum_total(ctx)
    keep = max(total - 1, 0)
    return Move(Decision.PROPOSE, _ultimatum_offer(ctx, keep), "Keep all but the bare minimum.", f"I keep {keep}.")


def fairness_threshold(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move:
    """Accept iff the offered share of the total is at least ``tau``."""
    _require(ctx, ScenarioKind.ULTIMATUM, "fairness_threshold")
    tau = _fraction(params.get("tau", Fraction(1, 2)))
    total = _ultimatum_total(ctx)
    offer = incoming_offer(history, ctx.player)
    if offer is not None and total > 0 and Fraction(_share_after(offer, ctx), total) >= tau:
        return Move(Decision.ACCEPT, None, f"The offer meets my threshold {tau}.", "That is fair, I accept.")
    if ctx.is_final:
        return Move(Decision.REJECT, None, "The offer is below my threshold.", "That is unfair, I reject.")
    keep = total - total // 2 if ctx.player == RED else total // 2
    return Move(Decision.PROPOSE, _ultimatum_offer(ctx, keep), "Propose an even split.", "Let us split evenly.")


def net_gain_trader(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move:
    """Resource exchange: accept trades with net gain >= min_gain, otherwise offer abundant for scarce."""
    _require(ctx, ScenarioKind.RESOURCE_EXCHANGE, "net_gain_trader")
    give_qty = int(params.get("offer", 10))
    ask_qty = int(params.get("ask", 3))
    min_gain = int(params.get("min_gain", 1))
    offer = incoming_offer(history, ctx.player)
    if offer is not None:
        gain = offer.receives(ctx.player).total() - offer.gives(ctx.player).total()
        if gain >= min_gain:
            return Move(Decision.ACCEPT, None, f"Net gain of {gain}.", "Accepted.")
    if ctx.is_final:
        return Move(Decision.REJECT, None, "No profitable trade left.", "No deal.")
    mine = ctx.config.endowments[ctx.player]
    theirs = ctx.config.endowments[opponent(ctx.player)]
    names = sorted(ctx.config.vocabulary)
    abundant = max(names, key=lambda n: (mine[n], n))
    scarce = min(names, key=lambda n: (mine[n], n))
    gives = ResourceBundle({abundant: min(give_qty, mine[abundant])})
    gets = ResourceBundle({scarce: min(ask_qty, theirs[scarce])})
    trade = Trade(gives, gets, ctx.player) if ctx.player == RED else Trade(gets, gives, ctx.player)
    return Move(Decision.PROPOSE, trade, f"Trade {abundant} for {scarce}.", f"Want some {abundant} for your {scarce}?")


def fixed_sequence(params: Mapping[str, Any], history: list[StructuredMessage], ctx: TurnContext) -> Move | str:
    """Replay ``moves`` in order, one per own turn.

    An entry is either raw text sent verbatim or a mapping with optional
    ``trade`` (grammar text), ``price`` (seller/buyer shortcut), ``answer``,
    ``message`` and ``reason`` keys.
    """
    moves = params.get("moves", ())
    k = ctx.own_turn - 1
    if k >= len(moves):
        raise StrategyExhausted(f"fixed sequence has {len(moves)} moves, asked for move {k + 1}")
    entry = moves[k]
    if isinstance(entry, str):
        return entry
    trade = None
    if "trade" in entry:
        trade = parse_trade(entry["trade"], ctx.config.vocabulary, ("RED", "BLUE"), proposer=ctx.player)
    elif "price" in entry:
        trade = _sale(ctx, int(entry["price"]))
    decision = Decision.PROPOSE if trade is not None else Decision(entry.get("answer", "NONE").upper())
    return Move(decision, trade, entry.get("reason", ""), entry.get("message", ""))


STRATEGIES: dict[str, Strategy] = {
    "split_difference": split_difference,
    "anchor_concede": anchor_concede,
    "rational_ultimatum": rational_ultimatum,
    "fairness_threshold": fairness_threshold,
    "net_gain_trader": net_gain_trader,
    "fixed_sequence": fixed_sequence,
}


class ScriptedAgent:
    def __init__(self, spec: AgentSpec):
        if spec.strategy not in STRATEGIES:
            raise StrategyError(f"unknown strategy {spec.strategy!r}; known: {sorted(STRATEGIES)}")
        self.spec = spec
        self._strategy = STRATEGIES[spec.strategy]

    def decide(self, view: Sequence[ChatMessage], ctx: TurnContext) -> StructuredMessage | str:
        history = read_history(view, ctx)
        move = self._strategy(self.spec.params, history, ctx)
        if isinstance(move, str):
            return move
        return StructuredMessage(
            player_name=ctx.player,
            turn_echo=(ctx.own_turn, ctx.own_turns_total),
            resources_echo=ctx.config.endowments[ctx.player],
            goal_echo=ctx.config.goals[ctx.player],
            reasoning=move.reasoning,
            public_text=move.public_text,
            trade=move.trade,
            decision=move.decision,
        )

    def next_message(self, view: Sequence[ChatMessage], ctx: TurnContext) -> str:
        decided = self.decide(view, ctx)
        return decided if isinstance(decided, str) else render_message(decided)


def scripted(agent_id: str, strategy: str, behavior: str | None = None, **params: Any) -> AgentSpec:
    return AgentSpec(id=agent_id, kind="scripted", strategy=strategy, params=params, behavior=behavior)
