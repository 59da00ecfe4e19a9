import json

import httpx
import pytest

from netdebate.agents import AgentTurn, AnswerLabel, Response
from netdebate.agents.llm import AuthError, ChatClient, LLMBackend
from netdebate.agents.prompts import render_debate_prompt, render_initial_prompt
from netdebate.errors import BackendFailure, ProtocolError


def ok(content="Reasoning. (B)", tokens=7):
    body = {"choices": [{"message": {"role": "assistant", "content": content}}]}
    if tokens is not None:
        body["usage"] = {"completion_tokens": tokens}
    return httpx.Response(200, json=body)


def client_with(handler, **kwargs):
    sleeps = []
    kwargs.setdefault("api_key", "sk-test")
    client = ChatClient(
        "http://llm.test/v1", "test-model", transport=httpx.MockTransport(handler), sleep=sleeps.append, **kwargs
    )
    return client, sleeps


def test_request_shape():
    seen = []

    def handler(request):
        seen.append(request)
        return ok()

    client, _ = client_with(handler)
    text, tokens = client.complete("hello")
    assert (text, tokens) == ("Reasoning. (B)", 7)
    req = seen[0]
    assert req.url == "http://llm.test/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer sk-test"
    body = json.loads(req.content)
    assert body["max_tokens"] == 200
    assert body["model"] == "test-model"
    assert body["messages"] == [{"role": "user", "content": "hello"}]


def test_rate_limit_retries_once():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(429, headers={"Retry-After": "3"}) if len(calls) == 1 else ok()

    client, sleeps = client_with(handler)
    assert client.complete("x")[0] == "Reasoning. (B)"
    assert len(calls) == 2
    assert sleeps == [3.0]


def test_backoff_is_exponential():
    def handler(request):
        return httpx.Response(503)

    client, sleeps = client_with(handler, max_attempts=4, backoff_base=0.5)
    with pytest.raises(BackendFailure) as err:
        client.complete("x")
    assert err.value.attempts == 4
    assert sleeps == [0.5, 1.0, 2.0]


def test_unreachable_host_reports_attempts():
    def handler(request):
        raise httpx.ConnectError("connection refused", request=request)

    client, sleeps = client_with(handler, max_attempts=3)
    with pytest.raises(BackendFailure) as err:
        client.complete("x")
    assert err.value.attempts == 3
    assert len(sleeps) == 2


@pytest.mark.parametrize("status", [401, 403])
def test_auth_rejected(status):
    client, sleeps = client_with(lambda request: httpx.Response(status))
    with pytest.raises(AuthError):
        client.complete("x")
    assert sleeps == []


def test_non_retryable_status_fails_fast():
    client, sleeps = client_with(lambda request: httpx.Response(400, text="bad request"))
    with pytest.raises(BackendFailure) as err:
        client.complete("x")
    assert err.value.attempts == 1 and sleeps == []


@pytest.mark.parametrize(
    "response",
    [
        httpx.Response(200, text="not json"),
        httpx.Response(200, json={"choices": []}),
        httpx.Response(200, json={"choices": [{"message": {"content": None}}]}),
    ],
)
def test_malformed_body(response):
    client, _ = client_with(lambda request: response)
    with pytest.raises(ProtocolError):
        client.complete("x")


def test_missing_key_fails_check(monkeypatch):
    monkeypatch.delenv("NETDEBATE_TEST_KEY", raising=False)
    client = ChatClient("http://llm.test/v1", "m", api_key_env="NETDEBATE_TEST_KEY")
    with pytest.raises(AuthError):
        client.check()


def test_token_count_falls_back_and_caps():
    client, _ = client_with(lambda request: ok(" ".join(["w"] * 250) + " (A)", tokens=None))
    r = client.llm_respond("x")
    assert r.label is AnswerLabel.A and r.token_count == 200


def test_backend_prompts(question):
    prompts = []

    def handler(request):
        prompts.append(json.loads(request.content)["messages"][0]["content"])
        return ok("I say (C)")

    backend = LLMBackend(client_with(handler)[0])
    r1 = backend.respond(AgentTurn(question, 0, 1, 0, 0))
    assert r1.label is AnswerLabel.C
    assert prompts[0] == render_initial_prompt(question)

    prev = Response("mine (A)", AnswerLabel.A, 2)
    neighbours = ((3, Response("three (D)", AnswerLabel.D, 2)), (1, Response("one (B)", AnswerLabel.B, 2)))
    backend.respond(AgentTurn(question, 0, 2, 0, 0, prev, neighbours))
    assert prompts[1] == render_debate_prompt(question, "mine (A)", ["one (B)", "three (D)"])


def test_justify_forces_label(question):
    backend = LLMBackend(client_with(lambda request: ok("I refuse to pick (A)"))[0])
    r = backend.justify(question, AnswerLabel.D)
    assert r.label is AnswerLabel.D and r.text.endswith("(D)")
