from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Protocol

if TYPE_CHECKING:
    from ..scenarios import ScenarioConfig


class AgentError(RuntimeError):
    """Raised by an agent that cannot produce a reply at all."""


class BackendError(AgentError):
    pass


class BackendTimeout(BackendError):
    pass


class BackendRejection(BackendError):
    pass


class StrategyExhausted(AgentError):
    pass


class StrategyError(AgentError):
    pass


@dataclass(frozen=True, slots=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str


@dataclass(frozen=True, slots=True)
class TurnContext:
    config: ScenarioConfig
    player: str
    turn_index: int  # 0-based position in the game transcript
    own_turn: int  # 1-based count of this player's turns
    own_turns_total: int
    is_final: bool  # last message the game allows
    seed: int


@dataclass(frozen=True, slots=True)
class LLMParams:
    model: str
    base_url: str = "https://api.openai.com/v1"
    temperature: float = 0.7
    max_tokens: int = 400
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature must lie in [0, 2], got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.retries < 1:
            raise ValueError("retries must be >= 1")


@dataclass(frozen=True, slots=True)
class AgentSpec:
    """Serializable description of an agent. Never holds credentials, only env var names."""

    id: str
    kind: str  # "llm" | "scripted"
    llm: LLMParams | None = None
    strategy: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    behavior: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "llm" and self.llm is None:
            raise ValueError(f"llm agent {self.id!r} needs llm params")
        if self.kind == "scripted" and not self.strategy:
            raise ValueError(f"scripted agent {self.id!r} needs a strategy")
        if self.kind not in ("llm", "scripted"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        # params must survive a JSON round trip unchanged; fractions become "p/q"
        object.__setattr__(self, "params", json.loads(json.dumps(dict(self.params), default=str)))

    @property
    def backend_name(self) -> str:
        if self.kind == "llm":
            return self.llm.model
        return f"scripted:{self.strategy}"


class Agent(Protocol):
    spec: AgentSpec

    def next_message(self, view: Sequence[ChatMessage], ctx: TurnContext) -> str: ...
