"""Scenario configurations and the system prompts that describe them to agents."""

from __future__ import annotations

import random
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

from .behavior import apply_behavior, behavior_text
from .core import BLUE, PLAYERS, RED, ResourceBundle, ScenarioKind, Valuation, ValuationKind
from .protocol import TAGS, render_bundle

ULTIMATUM_TURNS = ("multi_turn", "classical_2turn", "three_turn")

DEFAULT_ROUNDS = {
    ScenarioKind.RESOURCE_EXCHANGE: 8,
    ScenarioKind.ULTIMATUM: 8,
    ScenarioKind.SELLER_BUYER: 10,
}
CURRENCY = {ScenarioKind.ULTIMATUM: "Dollars", ScenarioKind.SELLER_BUYER: "ZUP"}

SELLER_BUYER_COST_RANGE = (20, 40)
SELLER_BUYER_WTP_RANGE = (60, 80)
OVERVALUED_FACTOR = 10


class InvalidOverride(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Variant:
    """Experimental knobs layered over a scenario's defaults.

    ``injected`` pins the raw text of given transcript indices; the engine uses
    it instead of asking the agent (the controlled proposer in ultimatum
    acceptance probes).
    """

    ultimatum_turns: str = "multi_turn"
    injected: tuple[tuple[int, str], ...] = ()
    sample_valuations: bool = False
    overvalued_buyer: bool = False

    def __post_init__(self) -> None:
        if self.ultimatum_turns not in ULTIMATUM_TURNS:
            raise InvalidOverride(f"unknown ultimatum variant {self.ultimatum_turns!r}")

    def injected_at(self, turn_index: int) -> str | None:
        for index, text in self.injected:
            if index == turn_index:
                return text
        return None


def ultimatum_variant(turns: str) -> Variant:
    return Variant(ultimatum_turns=turns)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    endowments: Mapping[str, ResourceBundle]
    goals: Mapping[str, str]
    max_rounds: int
    valuations: tuple[Valuation, ...] = ()
    variant: Variant = field(default_factory=Variant)
    scale: int = 1
    behaviors: Mapping[str, str | None] = field(default_factory=dict)
    resources: tuple[str, ...] = ()

    @property
    def currency(self) -> str | None:
        return CURRENCY.get(self.kind)

    @property
    def goods(self) -> str | None:
        return "X" if self.kind is ScenarioKind.SELLER_BUYER else None

    @property
    def vocabulary(self) -> frozenset[str]:
        names = set(self.resources)
        for bundle in self.endowments.values():
            names.update(bundle)
        return frozenset(names)

    @property
    def turn_budget(self) -> int:
        """Total number of messages the game may last."""
        if self.kind is ScenarioKind.ULTIMATUM:
            if self.variant.ultimatum_turns == "classical_2turn":
                return 2
            if self.variant.ultimatum_turns == "three_turn":
                return 3
        return 2 * self.max_rounds

    def turns_for(self, player: str) -> int:
        budget = self.turn_budget
        return (budget + 1) // 2 if player == RED else budget // 2

    @property
    def final_turn_decides_only(self) -> bool:
        return self.kind is ScenarioKind.ULTIMATUM

    def valuation(self, player: str) -> Valuation | None:
        for v in self.valuations:
            if v.player == player:
                return v
        return None

    @property
    def seller(self) -> str | None:
        for v in self.valuations:
            if v.kind is ValuationKind.COST_OF_PRODUCTION:
                return v.player
        return None

    @property
    def buyer(self) -> str | None:
        for v in self.valuations:
            if v.kind is ValuationKind.WILLINGNESS_TO_PAY:
                return v.player
        return None

    def with_behaviors(self, behaviors: Mapping[str, str | None]) -> ScenarioConfig:
        merged = {**self.behaviors, **{p: b for p, b in behaviors.items() if b is not None}}
        for player, name in merged.items():
            behavior_text(name, self.kind)
        return replace(self, behaviors=merged)


_KNOWN_OVERRIDES = {
    "max_rounds",
    "scale",
    "amount",
    "cost",
    "willingness",
    "buyer_budget",
    "sample_valuations",
    "overvalued_buyer",
    "ultimatum_turns",
    "endowments",
    "behaviors",
    "injected",
    "resources",
    "goals",
}


def _positive_int(overrides: Mapping[str, Any], key: str, default: int, minimum: int = 1) -> int:
    value = overrides.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise InvalidOverride(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _bundle(value: Any, where: str) -> ResourceBundle:
    if not isinstance(value, Mapping):
        raise InvalidOverride(f"{where} must be a mapping of resource to quantity")
    try:
        return ResourceBundle(value)
    except (TypeError, ValueError) as exc:
        raise InvalidOverride(f"{where}: {exc}") from None


def build(kind: ScenarioKind | str, overrides: Mapping[str, Any] | None = None, seed: int | None = None) -> ScenarioConfig:
    """Default scenario of ``kind`` with ``overrides`` applied.

    Currency scaling is applied last, so ``build(k, {"scale": X})`` is
    ``build(k)`` with every currency quantity and valuation multiplied by X.
    Valuation sampling draws the cost first, then the willingness to pay,
    from ``random.Random(seed)``.
    """
    try:
        kind = ScenarioKind(kind)
    except ValueError:
        raise InvalidOverride(f"unknown scenario kind {kind!r}") from None
    overrides = dict(overrides or {})
    unknown = set(overrides) - _KNOWN_OVERRIDES
    if unknown:
        raise InvalidOverride(f"unknown override(s): {sorted(unknown)}")

    max_rounds = _positive_int(overrides, "max_rounds", DEFAULT_ROUNDS[kind])
    scale = _positive_int(overrides, "scale", 1)
    turns = overrides.get("ultimatum_turns", "multi_turn")
    if turns != "multi_turn" and kind is not ScenarioKind.ULTIMATUM:
        raise InvalidOverride("ultimatum_turns only applies to the ultimatum scenario")
    injected = tuple((int(i), str(text)) for i, text in overrides.get("injected", ()))
    sample = bool(overrides.get("sample_valuations", False))
    overvalued = bool(overrides.get("overvalued_buyer", False))
    if (sample or overvalued) and kind is not ScenarioKind.SELLER_BUYER:
        raise InvalidOverride("valuation overrides only apply to the seller/buyer scenario")
    if sample and seed is None:
        raise InvalidOverride("sample_valuations needs a seed")
    variant = Variant(ultimatum_turns=turns, injected=injected, sample_valuations=sample, overvalued_buyer=overvalued)

    valuations: tuple[Valuation, ...] = ()
    extra_resources: set[str] = set(overrides.get("resources", ()))
    if kind is ScenarioKind.RESOURCE_EXCHANGE:
        if scale != 1:
            raise InvalidOverride("the resource exchange scenario has no currency to scale")
        endowments = {RED: ResourceBundle(X=25, Y=5), BLUE: ResourceBundle(X=5, Y=25)}
        goal = "Acquire as many resources as possible; you are maximizing your total resources."
        goals = {RED: goal, BLUE: goal}
    elif kind is ScenarioKind.ULTIMATUM:
        amount = _positive_int(overrides, "amount", 100, minimum=0)
        endowments = {RED: ResourceBundle(Dollars=amount), BLUE: ResourceBundle()}
        extra_resources.add("Dollars")
        goals = {
            RED: "Negotiate a split of the Dollars you hold with the other player and keep as many as you can.",
            BLUE: "Negotiate a split of the other player's Dollars and obtain as many as you can.",
        }
    else:
        cost = _positive_int(overrides, "cost", 40, minimum=0)
        wtp = _positive_int(overrides, "willingness", 60, minimum=0)
        budget = _positive_int(overrides, "buyer_budget", 100, minimum=0)
        if sample:
            rng = random.Random(seed)
            cost = rng.randint(*SELLER_BUYER_COST_RANGE)
            wtp = rng.randint(*SELLER_BUYER_WTP_RANGE)
        if overvalued:
            wtp = OVERVALUED_FACTOR * cost
        endowments = {RED: ResourceBundle(X=1), BLUE: ResourceBundle(ZUP=budget)}
        extra_resources.update(("X", "ZUP"))
        valuations = (
            Valuation(RED, ValuationKind.COST_OF_PRODUCTION, cost),
            Valuation(BLUE, ValuationKind.WILLINGNESS_TO_PAY, wtp),
        )
        goals = {}

    if "endowments" in overrides:
        given = overrides["endowments"]
        if not isinstance(given, Mapping) or not set(given) <= set(PLAYERS):
            raise InvalidOverride("endowments must map RED/BLUE to bundles")
        endowments = {**endowments, **{p: _bundle(b, f"endowments[{p}]") for p, b in given.items()}}

    if scale != 1:
        currency = CURRENCY[kind]
        endowments = {p: b.scaled(scale, [currency]) for p, b in endowments.items()}
        valuations = tuple(replace(v, amount=v.amount * scale) for v in valuations)

    if kind is ScenarioKind.SELLER_BUYER:
        cost_v, wtp_v = valuations
        goals = {
            RED: f"Sell resources for ZUP. It costed X: {cost_v.amount} ZUP to produce the resources.",
            BLUE: f"Buy resources with ZUP. You are willing to pay at most {wtp_v.amount} ZUP for X: 1.",
        }
    goals = {**goals, **overrides.get("goals", {})}

    config = ScenarioConfig(
        kind=kind,
        endowments=endowments,
        goals=goals,
        max_rounds=max_rounds,
        valuations=valuations,
        variant=variant,
        scale=scale,
        resources=tuple(sorted(extra_resources)),
    )
    behaviors = overrides.get("behaviors", {})
    if not isinstance(behaviors, Mapping) or not set(behaviors) <= set(PLAYERS):
        raise InvalidOverride("behaviors must map RED/BLUE to behavior ids")
    try:
        return config.with_behaviors(behaviors)
    except ValueError as exc:
        raise InvalidOverride(str(exc)) from None


_RULES = {
    ScenarioKind.RESOURCE_EXCHANGE: (
        "You are playing a resource exchange game against another player. Each player starts with some "
        "resources and may propose trades of resources to the other player. A trade only happens when one "
        "player proposes it and the other player accepts it. The game ends as soon as a trade is accepted "
        "or when both players have used all of their turns."
    ),
    ScenarioKind.ULTIMATUM: (
        "You are playing a game about splitting Dollars with another player. Player RED starts with all the "
        "Dollars and Player BLUE starts with none. Players take turns proposing how the Dollars are split, "
        "written as a trade in which Player RED gives Dollars to Player BLUE. The game ends as soon as a "
        "player accepts the other player's proposal. If no proposal is accepted before the turns run out, "
        "both players get nothing."
    ),
    ScenarioKind.SELLER_BUYER: (
        "You are playing a game in which one player sells an object X to the other player for ZUP. "
        "Player RED is the seller and moves first; Player BLUE is the buyer. Prices are proposed as trades in "
        "which the seller gives X: 1 and the buyer gives ZUP. The game ends as soon as a player accepts the "
        "other player's proposal. Only the seller knows what the object cost to produce and only the buyer "
        "knows how much they are willing to pay."
    ),
}


def _protocol_section(config: ScenarioConfig, player: str) -> str:
    t = TAGS
    turns = config.turns_for(player)
    lines = [
        "Every reply must use the following tags:",
        f"<{t['player_name']}> your player name </{t['player_name']}>",
        f"<{t['turn_echo']}> your current turn / {turns} </{t['turn_echo']}>",
        f"<{t['resources_echo']}> the resources you hold now, e.g. X: 3, Y: 4 </{t['resources_echo']}>",
        f"<{t['goal_echo']}> your goal </{t['goal_echo']}>",
        f"<{t['reasoning']}> your private reasoning, never shown to the other player </{t['reasoning']}>",
        f"<{t['public_text']}> a message for the other player </{t['public_text']}>",
        f"<{t['trade']}> Player RED Gives resource: amount, ... | Player BLUE Gives resource: amount, ... "
        f"</{t['trade']}>",
        f"<{t['decision']}> ACCEPT, REJECT or NONE </{t['decision']}>",
        "",
        "Write 'nothing' when a player gives nothing, e.g. 'Player BLUE Gives nothing'.",
        "Only whole, non-negative amounts of resources can be traded, and a player can only give what it holds.",
        f"To make a proposal, fill the <{t['trade']}> tag and answer NONE.",
        f"To accept the other player's latest proposal, answer ACCEPT and leave out the <{t['trade']}> tag.",
        "Only the other player's proposal can be accepted. Your reasoning, resources and goal are not shown to "
        "the other player.",
    ]
    if config.final_turn_decides_only:
        lines.append(
            "On the last turn of the game the player who moves can only ACCEPT or REJECT the standing proposal."
        )
    lines.append(f"You have at most {turns} turns.")
    return "\n".join(lines)


def render_role_message(config: ScenarioConfig, player: str) -> str:
    """The part of the instructions that is private to ``player``."""
    holdings = render_bundle(config.endowments[player])
    parts = [f"You are Player {player}.", f"You hold: {holdings}.", f"Your goal: {config.goals[player]}"]
    if config.kind is ScenarioKind.SELLER_BUYER:
        parts.append("You are the seller." if player == config.seller else "You are the buyer.")
    return " ".join(parts)


def render_system_prompt(config: ScenarioConfig, player: str, include_role: bool = True) -> str:
    sections = [_RULES[config.kind], _protocol_section(config, player)]
    if include_role:
        sections.append(render_role_message(config, player))
    return apply_behavior("\n\n".join(sections), config.behaviors.get(player), config.kind)
