"""Agent backed by a chat-completion HTTP endpoint.

Requests follow the common ``POST {base_url}/chat/completions`` schema, so
any compatible vendor or local server works. The bearer token is read from
the environment variable named in the agent spec at request time.
"""

from __future__ import annotations

import logging
import os
import time
from collections.abc import Callable, Sequence
from typing import Any

import httpx

from .base import AgentSpec, BackendRejection, BackendTimeout, ChatMessage, TurnContext

log = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


def build_request(spec: AgentSpec, view: Sequence[ChatMessage]) -> dict[str, Any]:
    params = spec.llm
    return {
        "model": params.model,
        "messages": [{"role": m.role, "content": m.content} for m in view],
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }


class ChatCompletionAgent:
    """One agent per game; the underlying ``httpx.Client`` may be shared across games."""

    def __init__(
        self,
        spec: AgentSpec,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if spec.kind != "llm":
            raise ValueError(f"agent {spec.id!r} is not an llm agent")
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.llm.timeout)
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.spec.llm.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, view: Sequence[ChatMessage]) -> str:
        params = self.spec.llm
        url = params.base_url.rstrip("/") + "/chat/completions"
        body = build_request(self.spec, view)
        last_error = "no attempt made"
        for attempt in range(params.retries):
            if attempt:
                self._sleep(params.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=body, headers=self._headers(), timeout=params.timeout)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("%s attempt %d/%d failed: %s", self.spec.id, attempt + 1, params.retries, last_error)
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                log.warning("%s attempt %d/%d got %s", self.spec.id, attempt + 1, params.retries, last_error)
                continue
            if resp.status_code >= 400:
                raise BackendRejection(f"{self.spec.id}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendRejection(f"{self.spec.id}: unexpected response body ({exc})") from None
        if last_error.startswith("HTTP"):
            raise BackendRejection(f"{self.spec.id}: gave up after {params.retries} attempts ({last_error})")
        raise BackendTimeout(f"{self.spec.id}: gave up after {params.retries} attempts ({last_error})")

    def next_message(self, view: Sequence[ChatMessage], ctx: TurnContext) -> str:
        return self.complete(view)
