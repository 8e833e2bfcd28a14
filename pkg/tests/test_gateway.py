"""Provider gateway: digests, fixtures, retry behavior, record/replay modes."""

import json

import httpx
import pytest

from grim import ProviderConfig, complete, prompt_digest
from grim.errors import (
    EmptyResponseError,
    FixtureMissError,
    GatewayError,
    NetworkError,
)
from grim.gateway import Transcript, fixture_path, normalize_prompt
from grim.prompts import PromptText


def make_prompt(text="hello there") -> PromptText:
    return PromptText(kind="generate", text=text, input_digest="x", template_version="gen-v1")


def ok_response(content="a fine answer"):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def live_config(transport, **overrides) -> ProviderConfig:
    kwargs = dict(mode="live", transport=transport, retry_backoff=0.0)
    kwargs.update(overrides)
    return ProviderConfig(**kwargs)


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("GRIM_API_KEY", "test-key-not-real")


# digest normalization

def test_normalize_strips_trailing_whitespace_per_line():
    assert normalize_prompt("a  \nb\t\nc") == "a\nb\nc"


def test_normalize_drops_trailing_newlines():
    assert normalize_prompt("a\nb\n\n\n") == "a\nb"


def test_digest_is_stable_across_trailing_whitespace():
    assert prompt_digest("line one \nline two\n") == prompt_digest("line one\nline two")


def test_digest_differs_on_content():
    assert prompt_digest("alpha") != prompt_digest("beta")


# config validation

def test_replay_requires_existing_fixture_dir(tmp_path):
    with pytest.raises(ValueError):
        ProviderConfig(mode="replay", fixture_dir=tmp_path / "missing")
    with pytest.raises(ValueError):
        ProviderConfig(mode="replay")


def test_record_requires_fixture_dir():
    with pytest.raises(ValueError):
        ProviderConfig(mode="record")


def test_bad_mode_rejected():
    with pytest.raises(ValueError):
        ProviderConfig(mode="interactive")


def test_from_env_reads_endpoint_and_model(monkeypatch):
    monkeypatch.setenv("GRIM_ENDPOINT", "https://example.test/v1/chat")
    monkeypatch.setenv("GRIM_MODEL", "some-model")
    config = ProviderConfig.from_env("live")
    assert config.endpoint == "https://example.test/v1/chat"
    assert config.model_name == "some-model"


# live mode

def test_live_mode_needs_api_key(monkeypatch):
    monkeypatch.delenv("GRIM_API_KEY", raising=False)
    config = live_config(httpx.MockTransport(lambda request: ok_response()))
    with pytest.raises(GatewayError):
        complete(make_prompt(), config)


def test_live_happy_path(api_key):
    seen = []

    def handler(request):
        seen.append(json.loads(request.content))
        return ok_response("the completion")

    text, transcript = complete(make_prompt("ping"), live_config(httpx.MockTransport(handler)))
    assert text == "the completion"
    assert transcript.response_text == "the completion"
    assert transcript.prompt_digest == prompt_digest("ping")
    assert transcript.template_version == "gen-v1"
    assert seen[0]["messages"] == [{"role": "user", "content": "ping"}]
    assert seen[0]["temperature"] == 0.0


def test_server_errors_are_retried_until_success(api_key):
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(502, text="bad gateway")
        return ok_response("eventually")

    text, _ = complete(make_prompt(), live_config(httpx.MockTransport(handler)))
    assert text == "eventually"
    assert len(calls) == 3


def test_retry_budget_is_total_attempts(api_key):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503, text="down")

    with pytest.raises(NetworkError):
        complete(make_prompt(), live_config(httpx.MockTransport(handler), max_retries=3))
    assert len(calls) == 3


def test_rate_limit_is_retried(api_key):
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(429, text="slow down")
        return ok_response("after backoff")

    text, _ = complete(make_prompt(), live_config(httpx.MockTransport(handler)))
    assert text == "after backoff"
    assert len(calls) == 2


def test_client_errors_are_not_retried(api_key):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(403, text="forbidden")

    with pytest.raises(GatewayError) as err:
        complete(make_prompt(), live_config(httpx.MockTransport(handler)))
    assert len(calls) == 1
    assert not isinstance(err.value, (NetworkError, EmptyResponseError))


def test_empty_completion_is_not_retried(api_key):
    calls = []

    def handler(request):
        calls.append(1)
        return ok_response("   ")

    with pytest.raises(EmptyResponseError):
        complete(make_prompt(), live_config(httpx.MockTransport(handler)))
    assert len(calls) == 1


def test_transport_failures_count_as_network_errors(api_key):
    def handler(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(NetworkError):
        complete(make_prompt(), live_config(httpx.MockTransport(handler), max_retries=2))


# record and replay

def test_record_then_replay_round_trip(api_key, tmp_path):
    transport = httpx.MockTransport(lambda request: ok_response("recorded answer"))
    record = ProviderConfig(
        mode="record", fixture_dir=tmp_path, transport=transport, retry_backoff=0.0
    )
    prompt = make_prompt("what should happen next?")
    text, recorded = complete(prompt, record)
    assert text == "recorded answer"

    path = fixture_path(tmp_path, prompt_digest(prompt.text))
    assert path.exists()
    stored = json.loads(path.read_text())
    assert stored["response_text"] == "recorded answer"

    replay = ProviderConfig(mode="replay", fixture_dir=tmp_path)
    text2, replayed = complete(prompt, replay)
    assert text2 == "recorded answer"
    assert replayed.prompt_digest == recorded.prompt_digest
    assert replayed.timestamp == recorded.timestamp
    assert replayed.latency_ms == 0


def test_replay_miss_raises_fixture_miss(tmp_path):
    config = ProviderConfig(mode="replay", fixture_dir=tmp_path)
    with pytest.raises(FixtureMissError):
        complete(make_prompt("never recorded"), config)


def test_replay_rejects_fixture_with_wrong_digest(tmp_path):
    prompt = make_prompt("the real prompt")
    digest = prompt_digest(prompt.text)
    bogus = Transcript(
        prompt_digest="0" * 64,
        prompt_text="something else",
        response_text="x",
        model_name="m",
        template_version="v",
        timestamp="t",
        latency_ms=1,
    )
    fixture_path(tmp_path, digest).write_text(json.dumps(bogus.to_dict()))
    config = ProviderConfig(mode="replay", fixture_dir=tmp_path)
    with pytest.raises(GatewayError):
        complete(prompt, config)


def test_replay_never_needs_credentials(monkeypatch, tmp_path, api_key):
    # record a fixture, then replay it with the key scrubbed from the env
    transport = httpx.MockTransport(lambda request: ok_response("offline"))
    record = ProviderConfig(mode="record", fixture_dir=tmp_path, transport=transport)
    prompt = make_prompt("offline run")
    complete(prompt, record)

    monkeypatch.delenv("GRIM_API_KEY")
    replay = ProviderConfig(mode="replay", fixture_dir=tmp_path)
    text, _ = complete(prompt, replay)
    assert text == "offline"


def test_transcript_round_trip():
    t = Transcript(
        prompt_digest="d" * 64,
        prompt_text="p",
        response_text="r",
        model_name="m",
        template_version="tv",
        timestamp="2025-11-05T12:00:00+00:00",
        latency_ms=7,
    )
    assert Transcript.from_dict(t.to_dict()) == t
