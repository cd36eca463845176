"""Turn-taking state machine for one two-player game.

Message flow per turn: the current agent sees its own conversation view,
its reply is parsed and validated, the opponent-visible rendering is stored
next to it, and the decision is applied. Player 1 (RED) receives its role in
a first user message; Player 2 (BLUE) has it in the system prompt and sees
RED's forwarded messages as user turns. Both views therefore run
system, user, assistant, user, ...
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .agents.base import Agent, AgentError, AgentSpec, ChatMessage, TurnContext
from .agents.scripted import NOTICE_PREFIX
from .core import (
    BLUE,
    PLAYERS,
    RED,
    GameStatus,
    Outcome,
    ResourceBundle,
    Trade,
    apply_trade,
    classify_winner,
    is_feasible,
    opponent,
    payoff,
)
from .protocol import (
    DEFAULT_POLICY,
    Decision,
    ProtocolError,
    StructuredMessage,
    VisibilityPolicy,
    filter_for_opponent,
    parse_message,
)
from .records import Attempt, GameRecord, Provenance, TranscriptEntry
from .scenarios import ScenarioConfig, render_role_message, render_system_prompt

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 3


class InvalidMove(ValueError):
    pass


class InvalidEdit(ValueError):
    """A replayed, injected or edited message is not a legal move."""


class GameOver(RuntimeError):
    pass


@dataclass
class GameState:
    config: ScenarioConfig
    rng_seed: int
    holdings: dict[str, ResourceBundle] = field(default_factory=dict)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    standing_proposal: Trade | None = None
    status: GameStatus = GameStatus.ONGOING
    forfeited_by: str | None = None
    forfeit_attempts: tuple[Attempt, ...] = ()
    error: str | None = None

    def __post_init__(self) -> None:
        if not self.holdings:
            self.holdings = dict(self.config.endowments)

    @property
    def turn_index(self) -> int:
        return len(self.transcript)

    @property
    def current_player(self) -> str:
        return PLAYERS[self.turn_index % 2]

    def context(self) -> TurnContext:
        player = self.current_player
        return TurnContext(
            config=self.config,
            player=player,
            turn_index=self.turn_index,
            own_turn=self.turn_index // 2 + 1,
            own_turns_total=self.config.turns_for(player),
            is_final=self.turn_index == self.config.turn_budget - 1,
            seed=self.rng_seed,
        )


def notice(reason: str) -> str:
    return f"{NOTICE_PREFIX} {reason} Reply again using the required tags."


def build_view(state: GameState, player: str, pending: Sequence[Attempt] = ()) -> list[ChatMessage]:
    config = state.config
    view = [ChatMessage("system", render_system_prompt(config, player, include_role=player == BLUE))]
    if player == RED:
        view.append(ChatMessage("user", render_role_message(config, RED) + " You move first."))
    for entry in state.transcript:
        if entry.player == player:
            for attempt in entry.attempts:
                view += [ChatMessage("assistant", attempt.raw), ChatMessage("user", notice(attempt.error))]
            view.append(ChatMessage("assistant", entry.raw))
        else:
            view.append(ChatMessage("user", entry.forwarded))
    for attempt in pending:
        view += [ChatMessage("assistant", attempt.raw), ChatMessage("user", notice(attempt.error))]
    return view


def validate(state: GameState, raw: str) -> StructuredMessage:
    """Parse ``raw`` as the current player's move or raise InvalidMove."""
    player = state.current_player
    try:
        msg = parse_message(raw, state.config.vocabulary)
    except ProtocolError as exc:
        raise InvalidMove(f"{type(exc).__name__}: {exc}") from None
    if msg.player_name != player:
        raise InvalidMove(f"you are Player {player}, not Player {msg.player_name}.")
    final = state.turn_index == state.config.turn_budget - 1
    if msg.decision is Decision.PROPOSE:
        if final and state.config.final_turn_decides_only:
            raise InvalidMove("this is the last turn: you can only ACCEPT or REJECT.")
        red, blue = state.holdings[RED], state.holdings[BLUE]
        if not is_feasible(msg.trade, red, blue):
            raise InvalidMove("the proposed trade asks a player to give resources it does not hold.")
    if msg.decision is Decision.ACCEPT:
        standing = state.standing_proposal
        if standing is None or standing.proposer == player:
            raise InvalidMove("there is no proposal from the other player to accept.")
    return msg


def check_end(state: GameState) -> GameStatus:
    if state.error is not None:
        return GameStatus.ABORTED
    if state.forfeited_by is not None:
        return GameStatus.FORFEIT
    if state.transcript and state.transcript[-1].message.decision is Decision.ACCEPT:
        return GameStatus.ACCEPTED
    if state.turn_index >= state.config.turn_budget:
        return GameStatus.MAX_TURNS
    return GameStatus.ONGOING


def _commit(state: GameState, raw: str, msg: StructuredMessage, attempts: Sequence[Attempt], source: str,
            policy: VisibilityPolicy) -> None:
    player = state.current_player
    state.transcript.append(
        TranscriptEntry(player, raw, msg, filter_for_opponent(msg, policy), tuple(attempts), source)
    )
    if msg.decision is Decision.PROPOSE:
        state.standing_proposal = msg.trade
    elif msg.decision is Decision.REJECT:
        state.standing_proposal = None
    elif msg.decision is Decision.ACCEPT:
        red, blue = apply_trade(state.standing_proposal, state.holdings[RED], state.holdings[BLUE])
        state.holdings = {RED: red, BLUE: blue}
        state.standing_proposal = None
    state.status = check_end(state)


def step(
    state: GameState,
    agent_for: Callable[[str], Agent] | Mapping[str, Agent],
    *,
    forced: str | None = None,
    source: str = "injected",
    policy: VisibilityPolicy = DEFAULT_POLICY,
    max_attempts: int = MAX_ATTEMPTS,
    replayed_attempts: Sequence[Attempt] = (),
) -> GameState:
    """Advance ``state`` by one message.

    ``forced`` supplies the raw text for this turn instead of asking the agent;
    it must be a legal move (InvalidEdit otherwise).
    """
    if state.status is not GameStatus.ONGOING:
        raise GameOver(f"game already ended with {state.status.value}")
    player = state.current_player

    if forced is not None:
        try:
            msg = validate(state, forced)
        except InvalidMove as exc:
            raise InvalidEdit(f"turn {state.turn_index}: {exc}") from None
        _commit(state, forced, msg, replayed_attempts, source, policy)
        return state

    agent = agent_for(player) if callable(agent_for) else agent_for[player]
    attempts: list[Attempt] = []
    for _ in range(max_attempts):
        view = build_view(state, player, attempts)
        try:
            raw = agent.next_message(view, state.context())
        except AgentError as exc:
            state.error = f"{type(exc).__name__}: {exc}"
            state.status = GameStatus.ABORTED
            log.warning("game aborted at turn %d: %s", state.turn_index, state.error)
            return state
        try:
            msg = validate(state, raw)
        except InvalidMove as exc:
            attempts.append(Attempt(raw, str(exc)))
            continue
        _commit(state, raw, msg, attempts, "agent", policy)
        return state

    state.forfeited_by = player
    state.forfeit_attempts = tuple(attempts)
    state.status = GameStatus.FORFEIT
    return state


def compute_outcome(config: ScenarioConfig, status: GameStatus, holdings: Mapping[str, ResourceBundle],
                    forfeited_by: str | None = None) -> Outcome:
    currency = config.currency or "ZUP"
    goods = config.goods or "X"
    payoffs: dict[str, Fraction] = {}
    for player in PLAYERS:
        if status is GameStatus.ABORTED:
            payoffs[player] = Fraction(0)
            continue
        payoffs[player] = payoff(
            config.kind,
            player,
            config.endowments[player],
            holdings[player],
            config.valuations,
            status,
            currency=currency,
            goods=goods,
        )
    winner = classify_winner(config.kind, payoffs, config.valuations)
    return Outcome(status, dict(holdings), payoffs, winner, forfeited_by)


def run(
    config: ScenarioConfig,
    agent1: Agent,
    agent2: Agent,
    seed: int,
    *,
    policy: VisibilityPolicy = DEFAULT_POLICY,
    max_attempts: int = MAX_ATTEMPTS,
    replay: Sequence[TranscriptEntry] = (),
    edits: Mapping[int, str] | None = None,
    parent: Provenance | None = None,
    clock: Callable[[], str] | None = None,
) -> GameRecord:
    """Play a full game; ``agent1`` is Player 1 (RED, the seller in seller/buyer).

    ``replay`` entries are re-applied verbatim before play continues and
    ``edits`` pins the raw text of given turn indices; both must be legal.
    Timestamps are only recorded when ``clock`` is given, so scripted games
    stay byte-reproducible.
    """
    agents = {RED: agent1, BLUE: agent2}
    edits = dict(edits or {})
    state = GameState(config=config, rng_seed=seed)
    started = clock() if clock else None
    while state.status is GameStatus.ONGOING:
        index = state.turn_index
        if index < len(replay):
            entry = replay[index]
            step(state, agents, forced=entry.raw, source="replayed", policy=policy,
                 replayed_attempts=entry.attempts)
        elif index in edits:
            step(state, agents, forced=edits[index], source="edited", policy=policy)
        elif config.variant.injected_at(index) is not None:
            step(state, agents, forced=config.variant.injected_at(index), source="injected", policy=policy)
        else:
            step(state, agents, policy=policy, max_attempts=max_attempts)

    transcript = list(state.transcript)
    error = state.error
    if state.status is GameStatus.FORFEIT:
        reasons = " / ".join(a.error for a in state.forfeit_attempts)
        error = f"Player {state.forfeited_by} exhausted {max_attempts} attempts: {reasons}"
    record = GameRecord(
        config=config,
        agents={RED: agent1.spec, BLUE: agent2.spec},
        seed=seed,
        transcript=tuple(transcript),
        outcome=compute_outcome(config, state.status, state.holdings, state.forfeited_by),
        timestamps=None if clock is None else {"started": started, "finished": clock()},
        backend={RED: agent1.spec.backend_name, BLUE: agent2.spec.backend_name},
        parent=parent,
        error=error,
    )
    return record.with_id()


def agent_specs(record: GameRecord) -> tuple[AgentSpec, AgentSpec]:
    return record.agents[RED], record.agents[BLUE]


def rederive(record: GameRecord) -> Outcome:
    """Recompute the outcome from the transcript alone."""
    state = GameState(config=record.config, rng_seed=record.seed)
    for entry in record.transcript:
        if state.status is not GameStatus.ONGOING:
            raise InvalidEdit("transcript continues after the game ended")
        step(state, {}, forced=entry.raw, source=entry.source, replayed_attempts=entry.attempts)
    status = state.status
    forfeited_by = record.outcome.forfeited_by
    if record.outcome.status in (GameStatus.FORFEIT, GameStatus.ABORTED) and status is GameStatus.ONGOING:
        status = record.outcome.status
    return compute_outcome(record.config, status, state.holdings, forfeited_by)


__all__ = [
    "GameOver",
    "GameState",
    "InvalidEdit",
    "InvalidMove",
    "build_view",
    "check_end",
    "compute_outcome",
    "opponent",
    "rederive",
    "run",
    "step",
    "validate",
]
