"""Tagged message grammar spoken between agents.

A turn looks like::

    <player-name> RED </player-name>
    <turn> 2/8 </turn>
    <my-resources> X: 25, Y: 5 </my-resources>
    <my-goal> ... </my-goal>
    <reason> ... </reason>
    <message> ... </message>
    <trade> Player RED Gives X: 10 | Player BLUE Gives Y: 3 </trade>
    <answer> ACCEPT </answer>

Tags are matched case-insensitively, whitespace inside a tag is not
significant, and the first occurrence of a duplicated tag wins (a warning is
kept on the parsed message). Text outside tags is ignored.

Supporting a different structured language means replacing ``parse_message``
and ``render_message``; nothing else in the package looks at raw text.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Collection, Iterable
from dataclasses import dataclass, field, replace

from .core import BLUE, PLAYERS, RED, ResourceBundle, Trade

TAGS = {
    "player_name": "player-name",
    "turn_echo": "turn",
    "resources_echo": "my-resources",
    "goal_echo": "my-goal",
    "reasoning": "reason",
    "public_text": "message",
    "trade": "trade",
    "decision": "answer",
}
FIELDS = tuple(TAGS)
NOTHING = "nothing"


class Decision(str, enum.Enum):
    PROPOSE = "PROPOSE"
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"
    NONE = "NONE"


class ProtocolError(ValueError):
    """Base class; every parse failure raises exactly one subclass."""


class MissingRequiredTag(ProtocolError):
    pass


class MalformedTag(ProtocolError):
    pass


class MalformedTrade(ProtocolError):
    pass


class UnknownResource(ProtocolError):
    pass


class NonIntegerQuantity(ProtocolError):
    pass


class ConflictingDecision(ProtocolError):
    pass


@dataclass(frozen=True, slots=True)
class StructuredMessage:
    """One parsed turn. ``None`` means the tag was absent; ``""`` means present but empty.

    A trade is carried exactly when ``decision`` is PROPOSE.
    """

    player_name: str
    turn_echo: tuple[int, int]
    resources_echo: ResourceBundle | None = None
    goal_echo: str | None = None
    reasoning: str | None = None
    public_text: str | None = None
    trade: Trade | None = None
    decision: Decision = Decision.NONE
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.player_name not in PLAYERS:
            raise ValueError(f"player_name must be RED or BLUE, got {self.player_name!r}")
        current, maximum = self.turn_echo
        if not 1 <= current <= maximum:
            raise ValueError(f"turn echo {current}/{maximum} out of range")
        if (self.decision is Decision.PROPOSE) != (self.trade is not None):
            raise ValueError("a trade is present exactly when the decision is PROPOSE")


@dataclass(frozen=True, slots=True)
class VisibilityPolicy:
    visible_fields: frozenset[str] = frozenset({"player_name", "turn_echo", "public_text", "trade", "decision"})

    def __post_init__(self) -> None:
        unknown = set(self.visible_fields) - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown message fields: {sorted(unknown)}")
        # the opponent must always be able to re-parse what it receives
        missing = {"player_name", "turn_echo"} - set(self.visible_fields)
        if missing:
            raise ValueError(f"policy must keep required fields visible: {sorted(missing)}")

    @classmethod
    def everything(cls) -> VisibilityPolicy:
        return cls(frozenset(FIELDS))


DEFAULT_POLICY = VisibilityPolicy()

_ESCAPES = (("&", "&amp;"), ("<", "&lt;"), (">", "&gt;"))


def _escape(text: str) -> str:
    for raw, esc in _ESCAPES:
        text = text.replace(raw, esc)
    return text


def _unescape(text: str) -> str:
    for raw, esc in reversed(_ESCAPES):
        text = text.replace(esc, raw)
    return text


def _tag_re(tag: str) -> re.Pattern[str]:
    return re.compile(rf"<\s*{re.escape(tag)}\s*>(.*?)<\s*/\s*{re.escape(tag)}\s*>", re.IGNORECASE | re.DOTALL)


_TAG_PATTERNS = {name: _tag_re(tag) for name, tag in TAGS.items()}
_CLAUSE_RE = re.compile(r"^\s*player\s+(.+?)\s+gives\s+(.*?)\s*$", re.IGNORECASE | re.DOTALL)
_ITEM_RE = re.compile(r"^\s*(.+?)\s*:\s*(\S+)\s*$", re.DOTALL)
_INT_RE = re.compile(r"^\d+$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_TURN_RE = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


def _extract(raw: str, name: str, warnings: list[str]) -> str | None:
    matches = _TAG_PATTERNS[name].findall(raw)
    if not matches:
        return None
    if len(matches) > 1:
        warnings.append(f"duplicate <{TAGS[name]}> tag; first occurrence used")
    return _unescape(matches[0].strip())


def _resolve_player(token: str, players: tuple[str, str]) -> str | None:
    folded = token.strip().casefold()
    for alias, canonical in zip(players, PLAYERS):
        if folded == alias.strip().casefold():
            return canonical
    for canonical in PLAYERS:
        if folded == canonical.casefold():
            return canonical
    return None


def _parse_quantity(text: str, resource: str) -> int:
    if _INT_RE.match(text):
        return int(text)
    if _NUMBER_RE.match(text):
        if text.startswith("-"):
            raise MalformedTrade(f"negative quantity for {resource}: {text}")
        raise NonIntegerQuantity(f"quantity for {resource} is not an integer: {text}")
    raise MalformedTrade(f"quantity for {resource} is not a number: {text!r}")


def parse_bundle(text: str, game_vocab: Collection[str]) -> ResourceBundle:
    """Parse ``name: qty, name: qty`` (or ``nothing``) against the game's resource names."""
    body = text.strip()
    if body.casefold() == NOTHING or body == "":
        return ResourceBundle()
    vocab = {v.casefold(): v for v in game_vocab}
    items: dict[str, int] = {}
    for chunk in body.split(","):
        m = _ITEM_RE.match(chunk)
        if not m:
            raise MalformedTrade(f"item {chunk.strip()!r} is not 'resource: quantity'")
        name, qty_text = m.group(1).strip(), m.group(2)
        canonical = vocab.get(name.casefold())
        if canonical is None:
            raise UnknownResource(f"unknown resource {name!r}; known: {sorted(game_vocab)}")
        qty = _parse_quantity(qty_text, canonical)
        if canonical in items:
            raise MalformedTrade(f"resource {canonical} listed twice")
        items[canonical] = qty
    return ResourceBundle(items)


def parse_trade(text: str, game_vocab: Collection[str], players: tuple[str, str], proposer: str) -> Trade:
    clauses = text.split("|")
    if len(clauses) != 2:
        raise MalformedTrade(f"expected two '|'-separated clauses, got {len(clauses)}")
    sides: dict[str, ResourceBundle] = {}
    for clause in clauses:
        m = _CLAUSE_RE.match(clause)
        if not m:
            raise MalformedTrade(f"clause {clause.strip()!r} is not 'Player NAME Gives ITEMS'")
        who = _resolve_player(m.group(1), players)
        if who is None:
            raise MalformedTrade(f"unknown player {m.group(1)!r} in trade")
        if who in sides:
            raise MalformedTrade(f"player {who} appears in both clauses")
        sides[who] = parse_bundle(m.group(2), game_vocab)
    return Trade(from_red=sides[RED], from_blue=sides[BLUE], proposer=proposer)


def parse_message(
    raw: str,
    game_vocab: Collection[str],
    players: tuple[str, str] = PLAYERS,
) -> StructuredMessage:
    """Parse one raw agent turn.

    ``players`` gives display names standing for RED and BLUE respectively,
    so transcripts that replaced the colours with model names still parse.
    """
    warnings: list[str] = []
    bodies = {name: _extract(raw, name, warnings) for name in FIELDS}

    if bodies["player_name"] is None:
        raise MissingRequiredTag("missing <player-name> tag")
    if bodies["turn_echo"] is None:
        raise MissingRequiredTag("missing <turn> tag")
    player = _resolve_player(bodies["player_name"], players)
    if player is None:
        raise MalformedTag(f"unknown player name {bodies['player_name']!r}")
    m = _TURN_RE.match(bodies["turn_echo"])
    if not m:
        raise MalformedTag(f"turn tag {bodies['turn_echo']!r} is not 'current/max'")
    turn = (int(m.group(1)), int(m.group(2)))
    if not 1 <= turn[0] <= turn[1]:
        raise MalformedTag(f"turn {turn[0]}/{turn[1]} out of range")

    resources = None
    if bodies["resources_echo"] is not None:
        try:
            resources = parse_bundle(bodies["resources_echo"], game_vocab)
        except MalformedTrade as exc:
            raise MalformedTag(f"<my-resources>: {exc}") from None

    answer_text = bodies["decision"]
    decision = Decision.NONE
    if answer_text is not None:
        upper = answer_text.upper()
        if upper in ("ACCEPT", "REJECT", "NONE"):
            decision = Decision(upper)
        else:
            warnings.append(f"unrecognised answer {answer_text!r} treated as NONE")

    trade = None
    trade_text = bodies["trade"]
    if trade_text is not None and trade_text.strip().casefold() not in ("", "none"):
        if decision is Decision.ACCEPT:
            raise ConflictingDecision("message both accepts and proposes a new trade")
        trade = parse_trade(trade_text, game_vocab, players, proposer=player)
        if decision is Decision.REJECT:
            warnings.append("REJECT with a counter-trade treated as PROPOSE")
        decision = Decision.PROPOSE

    return StructuredMessage(
        player_name=player,
        turn_echo=turn,
        resources_echo=resources,
        goal_echo=bodies["goal_echo"],
        reasoning=bodies["reasoning"],
        public_text=bodies["public_text"],
        trade=trade,
        decision=decision,
        warnings=tuple(warnings),
    )


def render_bundle(bundle: ResourceBundle) -> str:
    if not bundle:
        return NOTHING
    return ", ".join(f"{name}: {qty}" for name, qty in bundle.items())


def render_trade(trade: Trade) -> str:
    return f"Player {RED} Gives {render_bundle(trade.from_red)} | Player {BLUE} Gives {render_bundle(trade.from_blue)}"


def _line(name: str, body: str) -> str:
    tag = TAGS[name]
    if body == "":
        return f"<{tag}></{tag}>"
    return f"<{tag}> {body} </{tag}>"


def render_message(msg: StructuredMessage) -> str:
    lines = [
        _line("player_name", msg.player_name),
        _line("turn_echo", f"{msg.turn_echo[0]}/{msg.turn_echo[1]}"),
    ]
    if msg.resources_echo is not None:
        lines.append(_line("resources_echo", render_bundle(msg.resources_echo)))
    for name in ("goal_echo", "reasoning", "public_text"):
        value = getattr(msg, name)
        if value is not None:
            lines.append(_line(name, _escape(value)))
    if msg.trade is not None:
        lines.append(_line("trade", render_trade(msg.trade)))
    if msg.decision in (Decision.ACCEPT, Decision.REJECT):
        lines.append(_line("decision", msg.decision.value))
    return "\n".join(lines)


def redact(msg: StructuredMessage, policy: VisibilityPolicy = DEFAULT_POLICY) -> StructuredMessage:
    """Copy of ``msg`` with every field outside the policy cleared."""
    visible = policy.visible_fields
    changes: dict[str, object] = {"warnings": ()}
    for name in ("resources_echo", "goal_echo", "reasoning", "public_text"):
        if name not in visible:
            changes[name] = None
    if "trade" not in visible or "decision" not in visible:
        changes["trade"] = None
        if msg.decision is Decision.PROPOSE or "decision" not in visible:
            changes["decision"] = Decision.NONE
    return replace(msg, **changes)


def filter_for_opponent(msg: StructuredMessage, policy: VisibilityPolicy = DEFAULT_POLICY) -> str:
    return render_message(redact(msg, policy))


def present_fields(msg: StructuredMessage) -> set[str]:
    """Names of fields carrying content (used to compare views before/after filtering)."""
    out = {"player_name", "turn_echo"}
    for name in ("resources_echo", "goal_echo", "reasoning", "public_text", "trade"):
        if getattr(msg, name) is not None:
            out.add(name)
    if msg.decision is not Decision.NONE:
        out.add("decision")
    return out


def vocabulary(bundles: Iterable[ResourceBundle], extra: Iterable[str] = ()) -> frozenset[str]:
    names: set[str] = set(extra)
    for bundle in bundles:
        names.update(bundle)
    return frozenset(names)
