"""OpenAI-compatible chat-completion backend."""

from __future__ import annotations

import logging
import os
import time
from typing import Callable

import httpx

from ..errors import BackendFailure, ConfigError, ProtocolError
from .base import AgentBackend, AgentTurn
from .core import DEFAULT_TOKEN_CAP, AnswerLabel, Question, Response, count_tokens, ensure_final_answer
from .prompts import render_bias_prompt, render_debate_prompt, render_initial_prompt

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"
RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})
MISSING_SELF_RESPONSE = "(no previous answer was recorded)"


class AuthError(ConfigError):
    pass


class ChatClient:
    """Minimal client for ``POST {base_url}/chat/completions`` with retries.

    Transient failures (timeouts, connection errors, 408/409/429/5xx) are retried
    with exponential backoff; a numeric ``Retry-After`` header takes precedence
    when it is longer.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: str | None = None,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        temperature: float = 1.0,
        max_tokens: int = DEFAULT_TOKEN_CAP,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        backoff_max: float = 30.0,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if max_tokens < 1:
            raise ConfigError("max_tokens must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env, "")
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self._sleep = sleep
        self._http = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def check(self) -> None:
        if not self.base_url:
            raise ConfigError("LLM backend needs a base_url")
        if not self.model:
            raise ConfigError("LLM backend needs a model name")
        if not self.api_key:
            raise AuthError(f"no API key: set {self.api_key_env}")

    def request_body(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        }

    def _delay(self, attempt: int, response: httpx.Response | None) -> float:
        delay = min(self.backoff_max, self.backoff_base * 2 ** (attempt - 1))
        if response is not None:
            try:
                delay = max(delay, float(response.headers.get("retry-after", "")))
            except ValueError:
                pass
        return delay

    def complete(self, prompt: str) -> tuple[str, int | None]:
        """Return ``(text, completion_tokens)``; token usage may be absent."""
        url = f"{self.base_url}/chat/completions"
        headers = {"Authorization": f"Bearer {self.api_key}"}
        body = self.request_body(prompt)
        last = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            response = None
            try:
                response = self._http.post(url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if response.status_code in (401, 403):
                    raise AuthError(f"authentication rejected by {url} (HTTP {response.status_code})")
                if response.status_code == 200:
                    return _read_body(response)
                last = f"HTTP {response.status_code}"
                if response.status_code not in RETRYABLE_STATUS:
                    raise BackendFailure(f"{url} answered {last}: {response.text[:200]}", attempt)
            if attempt < self.max_attempts:
                delay = self._delay(attempt, response)
                log.warning("chat completion attempt %d/%d failed (%s); retrying in %.1fs",
                            attempt, self.max_attempts, last, delay)
                self._sleep(delay)
        raise BackendFailure(f"chat completion failed: {last}", self.max_attempts)

    def llm_respond(self, prompt: str) -> Response:
        text, used = self.complete(prompt)
        count = count_tokens(text) if used is None else used
        return Response.from_text(text, token_count=count, cap=self.max_tokens)


def _read_body(response: httpx.Response) -> tuple[str, int | None]:
    try:
        data = response.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat completion body: {exc!r}") from None
    if not isinstance(content, str):
        raise ProtocolError("chat completion content is not text")
    usage = data.get("usage") if isinstance(data, dict) else None
    tokens = usage.get("completion_tokens") if isinstance(usage, dict) else None
    return content, tokens if isinstance(tokens, int) else None


class LLMBackend(AgentBackend):
    name = "llm"
    offline = False

    def __init__(self, client: ChatClient):
        self.client = client

    def check(self) -> None:
        self.client.check()

    def prompt_for(self, turn: AgentTurn) -> str:
        q = turn.question
        if turn.previous is None:
            return render_initial_prompt(q)
        own = turn.previous.text or MISSING_SELF_RESPONSE
        others = [r.text for _, r in sorted(turn.neighbours, key=lambda item: item[0]) if r.text]
        return render_debate_prompt(q, own, others)

    def respond(self, turn: AgentTurn) -> Response:
        return self.client.llm_respond(self.prompt_for(turn))

    def justify(self, question: Question, label: AnswerLabel) -> Response:
        response = self.client.llm_respond(render_bias_prompt(question, label))
        text = ensure_final_answer(response.text, label)
        return Response(text, label, response.token_count)
