"""Resource bundles, trades and payoff rules shared by every scenario."""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction

RED = "RED"
BLUE = "BLUE"
PLAYERS = (RED, BLUE)
TIE = "TIE"


def opponent(player: str) -> str:
    if player == RED:
        return BLUE
    if player == BLUE:
        return RED
    raise ValueError(f"unknown player {player!r}")


class ScenarioKind(str, enum.Enum):
    RESOURCE_EXCHANGE = "resource_exchange"
    ULTIMATUM = "ultimatum"
    SELLER_BUYER = "seller_buyer"


class GameStatus(str, enum.Enum):
    ONGOING = "ONGOING"
    ACCEPTED = "ACCEPTED"
    MAX_TURNS = "MAX_TURNS"
    FORFEIT = "FORFEIT"
    # transport failure; such games are excluded from statistics
    ABORTED = "ABORTED"


class ValuationKind(str, enum.Enum):
    COST_OF_PRODUCTION = "cost_of_production"
    WILLINGNESS_TO_PAY = "willingness_to_pay"


class InfeasibleTrade(ValueError):
    pass


class MissingValuation(ValueError):
    pass


class ResourceBundle(Mapping[str, int]):
    """Immutable multiset of named non-negative integer quantities.

    Zero entries are dropped, so ``ResourceBundle()`` equals
    ``ResourceBundle(X=0)`` and lookups of absent names return 0.
    """

    __slots__ = ("_items",)

    def __init__(self, quantities: Mapping[str, int] | Iterable[tuple[str, int]] = (), **kwargs: int):
        merged: dict[str, int] = {}
        pairs = quantities.items() if isinstance(quantities, Mapping) else quantities
        for name, qty in [*pairs, *kwargs.items()]:
            if isinstance(qty, bool) or not isinstance(qty, int):
                raise TypeError(f"quantity for {name!r} must be an int, got {qty!r}")
            if qty < 0:
                raise ValueError(f"quantity for {name!r} is negative: {qty}")
            if name in merged:
                raise ValueError(f"resource {name!r} listed twice")
            merged[name] = qty
        self._items = tuple(sorted((k, v) for k, v in merged.items() if v))

    def __getitem__(self, name: str) -> int:
        for key, value in self._items:
            if key == name:
                return value
        return 0

    def __contains__(self, name: object) -> bool:
        return any(key == name for key, _ in self._items)

    def __iter__(self) -> Iterator[str]:
        return (key for key, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ResourceBundle):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self == ResourceBundle(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self._items)
        return f"ResourceBundle({inner})"

    def total(self) -> int:
        return sum(v for _, v in self._items)

    def __add__(self, other: ResourceBundle) -> ResourceBundle:
        names = set(self) | set(other)
        return ResourceBundle({n: self[n] + other[n] for n in names})

    def __sub__(self, other: ResourceBundle) -> ResourceBundle:
        names = set(self) | set(other)
        diff = {n: self[n] - other[n] for n in names}
        short = {n: -q for n, q in diff.items() if q < 0}
        if short:
            raise InfeasibleTrade(f"bundle would go negative: {short}")
        return ResourceBundle(diff)

    def covers(self, other: ResourceBundle) -> bool:
        """True when every quantity in ``other`` is available here."""
        return all(self[n] >= q for n, q in other.items())

    def scaled(self, factor: int, names: Iterable[str]) -> ResourceBundle:
        names = set(names)
        return ResourceBundle({n: q * factor if n in names else q for n, q in self.items()})

    def to_dict(self) -> dict[str, int]:
        return dict(self._items)


@dataclass(frozen=True, slots=True)
class Trade:
    """Two-sided exchange: ``from_red`` flows RED→BLUE, ``from_blue`` BLUE→RED."""

    from_red: ResourceBundle
    from_blue: ResourceBundle
    proposer: str

    def gives(self, player: str) -> ResourceBundle:
        return self.from_red if player == RED else self.from_blue

    def receives(self, player: str) -> ResourceBundle:
        return self.from_blue if player == RED else self.from_red

    def is_empty(self) -> bool:
        return not self.from_red and not self.from_blue

    def price(self, currency: str) -> int:
        # a sale moves currency one way only; the sum is the price either way
        return self.from_red[currency] + self.from_blue[currency]


@dataclass(frozen=True, slots=True)
class Valuation:
    player: str
    kind: ValuationKind
    amount: int


@dataclass(frozen=True, slots=True)
class Outcome:
    status: GameStatus
    final_holdings: dict[str, ResourceBundle]
    payoffs: dict[str, Fraction]
    winner: str
    forfeited_by: str | None = None


def is_feasible(trade: Trade, holdings_red: ResourceBundle, holdings_blue: ResourceBundle) -> bool:
    return holdings_red.covers(trade.from_red) and holdings_blue.covers(trade.from_blue)


def apply_trade(
    trade: Trade, holdings_red: ResourceBundle, holdings_blue: ResourceBundle
) -> tuple[ResourceBundle, ResourceBundle]:
    if not is_feasible(trade, holdings_red, holdings_blue):
        raise InfeasibleTrade(f"{trade} exceeds holdings RED={holdings_red} BLUE={holdings_blue}")
    red = holdings_red - trade.from_red + trade.from_blue
    blue = holdings_blue - trade.from_blue + trade.from_red
    return red, blue


def valuation_of(valuations: Iterable[Valuation], kind: ValuationKind) -> Valuation:
    found = [v for v in valuations if v.kind == kind]
    if len(found) != 1:
        raise MissingValuation(f"expected exactly one {kind.value} valuation, found {len(found)}")
    return found[0]


def payoff(
    kind: ScenarioKind,
    player: str,
    initial: ResourceBundle,
    final: ResourceBundle,
    valuations: Iterable[Valuation] = (),
    status: GameStatus = GameStatus.ACCEPTED,
    *,
    currency: str = "ZUP",
    goods: str = "X",
) -> Fraction:
    """Scalar payoff of ``player`` given its holdings before and after the game.

    Resource exchange pays the net change in total units. Ultimatum pays the
    final dollars on acceptance and nothing otherwise. Seller/buyer pays the
    surplus against the private valuation; with one unit sold this is
    ``wtp - price`` for the buyer and ``price - cost`` for the seller.
    """
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.RESOURCE_EXCHANGE:
        return Fraction(final.total() - initial.total())
    if kind is ScenarioKind.ULTIMATUM:
        if status is not GameStatus.ACCEPTED:
            return Fraction(0)
        return Fraction(final["Dollars"])

    valuations = list(valuations)
    cost = valuation_of(valuations, ValuationKind.COST_OF_PRODUCTION)
    wtp = valuation_of(valuations, ValuationKind.WILLINGNESS_TO_PAY)
    if status is not GameStatus.ACCEPTED:
        return Fraction(0)
    goods_delta = final[goods] - initial[goods]
    money_delta = final[currency] - initial[currency]
    if player == wtp.player:
        return Fraction(wtp.amount * goods_delta + money_delta)
    if player == cost.player:
        return Fraction(money_delta + cost.amount * goods_delta)
    raise MissingValuation(f"no valuation for player {player!r}")


def classify_winner(kind: ScenarioKind, payoffs: Mapping[str, Fraction], valuations: Iterable[Valuation] = ()) -> str:
    """Higher payoff wins; equal payoffs tie.

    For seller/buyer this is the midpoint rule: ``wtp - p > p - cost`` holds
    exactly when ``p < (cost + wtp) / 2``, and no sale leaves both at zero.
    """
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.SELLER_BUYER:
        # validates that both roles are present
        valuation_of(valuations, ValuationKind.COST_OF_PRODUCTION)
        valuation_of(valuations, ValuationKind.WILLINGNESS_TO_PAY)
    red, blue = payoffs[RED], payoffs[BLUE]
    if red > blue:
        return RED
    if blue > red:
        return BLUE
    return TIE
