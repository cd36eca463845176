"""Game record types and their JSON-document codec.

Documents carry a ``format_version`` of the form ``MAJOR.MINOR``. Readers
accept any minor version of their major version and fill fields added in
later minors with defaults:

* 1.0: initial layout.
* 1.1: adds ``backend`` (model name per player) and ``parent`` (provenance
  of counterfactual re-runs).
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

from .agents.base import AgentSpec, LLMParams
from .core import GameStatus, Outcome, ResourceBundle, ScenarioKind, Trade, Valuation, ValuationKind
from .protocol import Decision, StructuredMessage
from .scenarios import ScenarioConfig, Variant

FORMAT_VERSION = "1.1"
SUPPORTED_MAJOR = 1


class CorruptRecord(ValueError):
    pass


class UnsupportedVersion(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Attempt:
    raw: str
    error: str


@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    player: str
    raw: str
    message: StructuredMessage
    forwarded: str
    attempts: tuple[Attempt, ...] = ()
    source: str = "agent"  # "agent" | "injected" | "replayed" | "edited"


@dataclass(frozen=True, slots=True)
class Provenance:
    record_id: str
    edit_turn: int


@dataclass(frozen=True)
class GameRecord:
    config: ScenarioConfig
    agents: Mapping[str, AgentSpec]
    seed: int
    transcript: tuple[TranscriptEntry, ...]
    outcome: Outcome
    timestamps: Mapping[str, str] | None = None
    backend: Mapping[str, str] = field(default_factory=dict)
    parent: Provenance | None = None
    error: str | None = None
    record_id: str = ""
    format_version: str = FORMAT_VERSION

    @property
    def aborted(self) -> bool:
        return self.outcome.status is GameStatus.ABORTED

    def with_id(self) -> GameRecord:
        return replace(self, record_id=compute_record_id(self))


def _bundle(b: ResourceBundle) -> dict[str, int]:
    return b.to_dict()


def _trade(t: Trade | None) -> dict[str, Any] | None:
    if t is None:
        return None
    return {"from_red": _bundle(t.from_red), "from_blue": _bundle(t.from_blue), "proposer": t.proposer}


def _load_trade(d: Mapping[str, Any] | None) -> Trade | None:
    if d is None:
        return None
    return Trade(ResourceBundle(d["from_red"]), ResourceBundle(d["from_blue"]), d["proposer"])


def message_to_dict(m: StructuredMessage) -> dict[str, Any]:
    return {
        "player_name": m.player_name,
        "turn_echo": list(m.turn_echo),
        "resources_echo": None if m.resources_echo is None else _bundle(m.resources_echo),
        "goal_echo": m.goal_echo,
        "reasoning": m.reasoning,
        "public_text": m.public_text,
        "trade": _trade(m.trade),
        "decision": m.decision.value,
        "warnings": list(m.warnings),
    }


def message_from_dict(d: Mapping[str, Any]) -> StructuredMessage:
    return StructuredMessage(
        player_name=d["player_name"],
        turn_echo=tuple(d["turn_echo"]),
        resources_echo=None if d.get("resources_echo") is None else ResourceBundle(d["resources_echo"]),
        goal_echo=d.get("goal_echo"),
        reasoning=d.get("reasoning"),
        public_text=d.get("public_text"),
        trade=_load_trade(d.get("trade")),
        decision=Decision(d.get("decision", "NONE")),
        warnings=tuple(d.get("warnings", ())),
    )


def config_to_dict(c: ScenarioConfig) -> dict[str, Any]:
    return {
        "kind": c.kind.value,
        "endowments": {p: _bundle(b) for p, b in c.endowments.items()},
        "goals": dict(c.goals),
        "max_rounds": c.max_rounds,
        "valuations": [{"player": v.player, "kind": v.kind.value, "amount": v.amount} for v in c.valuations],
        "variant": {
            "ultimatum_turns": c.variant.ultimatum_turns,
            "injected": [[i, text] for i, text in c.variant.injected],
            "sample_valuations": c.variant.sample_valuations,
            "overvalued_buyer": c.variant.overvalued_buyer,
        },
        "scale": c.scale,
        "behaviors": dict(c.behaviors),
        "resources": list(c.resources),
    }


def config_from_dict(d: Mapping[str, Any]) -> ScenarioConfig:
    v = d.get("variant", {})
    return ScenarioConfig(
        kind=ScenarioKind(d["kind"]),
        endowments={p: ResourceBundle(b) for p, b in d["endowments"].items()},
        goals=dict(d["goals"]),
        max_rounds=d["max_rounds"],
        valuations=tuple(
            Valuation(x["player"], ValuationKind(x["kind"]), x["amount"]) for x in d.get("valuations", ())
        ),
        variant=Variant(
            ultimatum_turns=v.get("ultimatum_turns", "multi_turn"),
            injected=tuple((int(i), text) for i, text in v.get("injected", ())),
            sample_valuations=v.get("sample_valuations", False),
            overvalued_buyer=v.get("overvalued_buyer", False),
        ),
        scale=d.get("scale", 1),
        behaviors=dict(d.get("behaviors", {})),
        resources=tuple(d.get("resources", ())),
    )


def spec_to_dict(s: AgentSpec) -> dict[str, Any]:
    llm = None
    if s.llm is not None:
        p = s.llm
        llm = {
            "model": p.model,
            "base_url": p.base_url,
            "temperature": p.temperature,
            "max_tokens": p.max_tokens,
            "api_key_env": p.api_key_env,
            "timeout": p.timeout,
            "retries": p.retries,
            "backoff": p.backoff,
        }
    return {
        "id": s.id,
        "kind": s.kind,
        "llm": llm,
        "strategy": s.strategy,
        "params": dict(s.params),
        "behavior": s.behavior,
    }


def spec_from_dict(d: Mapping[str, Any]) -> AgentSpec:
    llm = LLMParams(**d["llm"]) if d.get("llm") else None
    return AgentSpec(
        id=d["id"],
        kind=d["kind"],
        llm=llm,
        strategy=d.get("strategy"),
        params=dict(d.get("params", {})),
        behavior=d.get("behavior"),
    )


def outcome_to_dict(o: Outcome) -> dict[str, Any]:
    return {
        "status": o.status.value,
        "final_holdings": {p: _bundle(b) for p, b in o.final_holdings.items()},
        "payoffs": {p: str(v) for p, v in o.payoffs.items()},
        "winner": o.winner,
        "forfeited_by": o.forfeited_by,
    }


def outcome_from_dict(d: Mapping[str, Any]) -> Outcome:
    return Outcome(
        status=GameStatus(d["status"]),
        final_holdings={p: ResourceBundle(b) for p, b in d["final_holdings"].items()},
        payoffs={p: Fraction(v) for p, v in d["payoffs"].items()},
        winner=d["winner"],
        forfeited_by=d.get("forfeited_by"),
    )


def entry_to_dict(e: TranscriptEntry) -> dict[str, Any]:
    return {
        "player": e.player,
        "raw": e.raw,
        "message": message_to_dict(e.message),
        "forwarded": e.forwarded,
        "attempts": [{"raw": a.raw, "error": a.error} for a in e.attempts],
        "source": e.source,
    }


def entry_from_dict(d: Mapping[str, Any]) -> TranscriptEntry:
    return TranscriptEntry(
        player=d["player"],
        raw=d["raw"],
        message=message_from_dict(d["message"]),
        forwarded=d["forwarded"],
        attempts=tuple(Attempt(a["raw"], a["error"]) for a in d.get("attempts", ())),
        source=d.get("source", "agent"),
    )


def record_to_dict(r: GameRecord) -> dict[str, Any]:
    return {
        "format_version": r.format_version,
        "record_id": r.record_id,
        "config": config_to_dict(r.config),
        "agents": {p: spec_to_dict(s) for p, s in r.agents.items()},
        "seed": r.seed,
        "transcript": [entry_to_dict(e) for e in r.transcript],
        "outcome": outcome_to_dict(r.outcome),
        "timestamps": None if r.timestamps is None else dict(r.timestamps),
        "backend": dict(r.backend),
        "parent": None if r.parent is None else {"record_id": r.parent.record_id, "edit_turn": r.parent.edit_turn},
        "error": r.error,
    }


def check_version(version: Any) -> None:
    try:
        major, _minor = (int(x) for x in str(version).split("."))
    except ValueError:
        raise CorruptRecord(f"malformed format_version {version!r}") from None
    if major != SUPPORTED_MAJOR:
        raise UnsupportedVersion(f"format_version {version} is not readable (expected {SUPPORTED_MAJOR}.x)")


def record_from_dict(d: Mapping[str, Any]) -> GameRecord:
    if not isinstance(d, Mapping) or "format_version" not in d:
        raise CorruptRecord("document has no format_version")
    check_version(d["format_version"])
    try:
        parent = d.get("parent")
        return GameRecord(
            config=config_from_dict(d["config"]),
            agents={p: spec_from_dict(s) for p, s in d["agents"].items()},
            seed=d["seed"],
            transcript=tuple(entry_from_dict(e) for e in d["transcript"]),
            outcome=outcome_from_dict(d["outcome"]),
            timestamps=d.get("timestamps"),
            backend=dict(d.get("backend", {})),
            parent=None if parent is None else Provenance(parent["record_id"], parent["edit_turn"]),
            error=d.get("error"),
            record_id=d.get("record_id", ""),
            # loaded records are upgraded in memory
            format_version=FORMAT_VERSION,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UnsupportedVersion):
            raise
        raise CorruptRecord(f"invalid record document: {type(exc).__name__}: {exc}") from None


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def compute_record_id(r: GameRecord) -> str:
    d = record_to_dict(r)
    for volatile in ("record_id", "timestamps"):
        d.pop(volatile)
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]
