"""Chat-completion gateway with live, record, and replay modes.

Replay is the default everywhere in tests: responses come from fixture
files keyed by a digest of the normalized prompt, so the whole pipeline
runs with zero network access.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .errors import (
    EmptyResponseError,
    FixtureMissError,
    GatewayError,
    NetworkError,
    RateLimitedError,
)
from .prompts import PromptText

__all__ = [
    "DEFAULT_ENDPOINT",
    "DEFAULT_MODEL",
    "ProviderConfig",
    "Transcript",
    "normalize_prompt",
    "prompt_digest",
    "complete",
]

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4"

MODES = ("live", "record", "replay")


def normalize_prompt(text: str) -> str:
    """Strip per-line trailing whitespace and trailing newlines."""
    return "\n".join(line.rstrip() for line in text.splitlines()).rstrip("\n")


def prompt_digest(text: str) -> str:
    return hashlib.sha256(normalize_prompt(text).encode("utf-8")).hexdigest()


@dataclass
class ProviderConfig:
    """Gateway settings; the API credential itself stays in the environment."""

    mode: str = "replay"
    endpoint: str = DEFAULT_ENDPOINT
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_output_tokens: int = 4096
    timeout: float = 120.0
    max_retries: int = 3
    fixture_dir: Path | None = None
    retry_backoff: float = 0.5
    # test seam: hand httpx a MockTransport instead of the network
    transport: httpx.BaseTransport | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown gateway mode {self.mode!r}")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")
        if self.fixture_dir is not None:
            self.fixture_dir = Path(self.fixture_dir)
        if self.mode in ("record", "replay") and self.fixture_dir is None:
            raise ValueError(f"{self.mode} mode needs a fixture_dir")
        if self.mode == "replay" and not self.fixture_dir.is_dir():
            raise ValueError(f"fixture dir {self.fixture_dir} does not exist")

    @classmethod
    def from_env(cls, mode: str = "replay", fixture_dir=None,
                 **overrides) -> "ProviderConfig":
        kwargs: dict = {
            "mode": mode,
            "fixture_dir": fixture_dir,
            "endpoint": os.environ.get("GRIM_ENDPOINT", DEFAULT_ENDPOINT),
            "model_name": os.environ.get("GRIM_MODEL", DEFAULT_MODEL),
        }
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class Transcript:
    """One prompt/response exchange, as persisted in fixtures and projects."""

    prompt_digest: str
    prompt_text: str
    response_text: str
    model_name: str
    template_version: str
    timestamp: str
    latency_ms: int

    def to_dict(self) -> dict:
        return {
            "prompt_digest": self.prompt_digest,
            "prompt_text": self.prompt_text,
            "response_text": self.response_text,
            "model_name": self.model_name,
            "template_version": self.template_version,
            "timestamp": self.timestamp,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        return cls(
            prompt_digest=str(d["prompt_digest"]),
            prompt_text=str(d["prompt_text"]),
            response_text=str(d["response_text"]),
            model_name=str(d.get("model_name", "")),
            template_version=str(d.get("template_version", "")),
            timestamp=str(d.get("timestamp", "")),
            latency_ms=int(d.get("latency_ms", 0)),
        )


def fixture_path(fixture_dir, digest: str) -> Path:
    return Path(fixture_dir) / f"{digest}.json"


def _read_fixture(config: ProviderConfig, digest: str) -> Transcript:
    path = fixture_path(config.fixture_dir, digest)
    if not path.is_file():
        raise FixtureMissError(f"no recorded response for prompt digest {digest}")
    try:
        transcript = Transcript.from_dict(json.loads(path.read_text("utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GatewayError(f"fixture {path.name} is unreadable: {exc}") from exc
    if transcript.prompt_digest != digest:
        raise GatewayError(
            f"fixture {path.name} records digest {transcript.prompt_digest}"
        )
    return transcript


def _write_fixture(config: ProviderConfig, transcript: Transcript) -> None:
    directory = Path(config.fixture_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = fixture_path(directory, transcript.prompt_digest)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(
        json.dumps(transcript.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    os.replace(tmp, path)


def _parse_response(resp: httpx.Response) -> str:
    if resp.status_code == 429:
        raise RateLimitedError("provider rate limit (HTTP 429)")
    if resp.status_code >= 500:
        raise NetworkError(f"provider returned HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise GatewayError(f"provider rejected the request (HTTP {resp.status_code})")
    try:
        data = resp.json()
        text = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, LookupError, TypeError) as exc:
        raise GatewayError(f"malformed provider response: {exc}") from exc
    if text is None or not str(text).strip():
        raise EmptyResponseError("provider returned an empty completion")
    return str(text)


def _complete_live(prompt: PromptText, config: ProviderConfig) -> tuple[str, int]:
    api_key = os.environ.get("GRIM_API_KEY")
    if not api_key:
        raise GatewayError(
            "GRIM_API_KEY is not set; live and record modes need a credential"
        )
    body = {
        "model": config.model_name,
        "temperature": config.temperature,
        "max_tokens": config.max_output_tokens,
        "messages": [{"role": "user", "content": prompt.text}],
    }
    client_kwargs: dict = {"timeout": config.timeout}
    if config.transport is not None:
        client_kwargs["transport"] = config.transport
    last_error: GatewayError | None = None
    with httpx.Client(**client_kwargs) as client:
        for attempt in range(config.max_retries):
            if attempt:
                time.sleep(config.retry_backoff * (2 ** (attempt - 1)))
            started = time.monotonic()
            try:
                resp = client.post(
                    config.endpoint,
                    headers={"Authorization": f"Bearer {api_key}"},
                    json=body,
                )
                text = _parse_response(resp)
            except httpx.HTTPError as exc:
                last_error = NetworkError(f"request failed: {exc}")
                continue
            except (RateLimitedError, NetworkError) as exc:
                last_error = exc
                continue
            return text, int((time.monotonic() - started) * 1000)
    raise last_error if last_error else NetworkError("no attempt was made")


def complete(prompt: PromptText,
             config: ProviderConfig) -> tuple[str, Transcript]:
    """Resolve one prompt to response text plus its transcript."""
    digest = prompt_digest(prompt.text)
    if config.mode == "replay":
        stored = _read_fixture(config, digest)
        transcript = dataclasses.replace(stored, latency_ms=0)
        return transcript.response_text, transcript

    text, latency_ms = _complete_live(prompt, config)
    transcript = Transcript(
        prompt_digest=digest,
        prompt_text=prompt.text,
        response_text=text,
        model_name=config.model_name,
        template_version=prompt.template_version,
        timestamp=datetime.now(timezone.utc).isoformat(),
        latency_ms=latency_ms,
    )
    if config.mode == "record":
        _write_fixture(config, transcript)
    return text, transcript
