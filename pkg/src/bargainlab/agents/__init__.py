from __future__ import annotations

import httpx

from ..behavior import BEHAVIOR_PROMPTS, UnknownBehavior, apply_behavior
from .base import (
    Agent,
    AgentError,
    AgentSpec,
    BackendError,
    BackendRejection,
    BackendTimeout,
    ChatMessage,
    LLMParams,
    StrategyError,
    StrategyExhausted,
    TurnContext,
)
from .llm import ChatCompletionAgent
from .scripted import NOTICE_PREFIX, STRATEGIES, ScriptedAgent, scripted


def make_agent(spec: AgentSpec, client: httpx.Client | None = None) -> Agent:
    if spec.kind == "llm":
        return ChatCompletionAgent(spec, client=client)
    return ScriptedAgent(spec)


__all__ = [
    "Agent",
    "AgentError",
    "AgentSpec",
    "BEHAVIOR_PROMPTS",
    "BackendError",
    "BackendRejection",
    "BackendTimeout",
    "ChatCompletionAgent",
    "ChatMessage",
    "LLMParams",
    "NOTICE_PREFIX",
    "STRATEGIES",
    "ScriptedAgent",
    "StrategyError",
    "StrategyExhausted",
    "TurnContext",
    "UnknownBehavior",
    "apply_behavior",
    "make_agent",
    "scripted",
]
