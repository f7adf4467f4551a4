"""Uniform access to chat-completion backends, plus prompt construction.

Backends are either a remote chat-completions HTTP endpoint or a
deterministic replay script (substring match against the last user message).
Replay makes the entire pipeline a pure function of its inputs, which is
the foundation of every end-to-end test in this repo.  API keys are only
ever named by environment variable; no secret enters serialized config.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import GatewayError, ReplayMissError, SinkError

ROLES = ("system", "user", "assistant")

DEFAULT_SYSTEM_CONTEXT = "You are a network operations assistant."
DEFAULT_COT_PREAMBLE = "Let us reason step by step."
REPLAY_SENTINEL = "[replay: no matching script entry]"

_RETRIES = 2
_BACKOFF_BASE_S = 0.2
_CHARS_PER_TOKEN = 4  # coarse budget estimate; rejects oversized prompts


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


# ---------------------------------------------------------------------------
# prompt strategies


@dataclass(frozen=True)
class ZeroShot:
    pass


@dataclass(frozen=True)
class FewShot:
    examples: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not 1 <= len(self.examples) <= 3:
            raise ValueError("few-shot takes one to three examples")


@dataclass(frozen=True)
class ChainOfThought:
    step_preamble: str = DEFAULT_COT_PREAMBLE


@dataclass(frozen=True)
class Rag:
    store: object  # rag.VectorStore
    top_k: int = 3

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


PromptStrategy = ZeroShot | FewShot | ChainOfThought | Rag


def build_prompt(strategy: PromptStrategy, task: str, context: str = "") -> list[ChatMessage]:
    """Deterministic message list for a task under a prompt strategy."""
    if not task:
        raise ValueError("task must be non-empty")
    system = context or DEFAULT_SYSTEM_CONTEXT

    if isinstance(strategy, ZeroShot):
        return [ChatMessage("system", system), ChatMessage("user", task)]

    if isinstance(strategy, FewShot):
        messages = [ChatMessage("system", system)]
        for question, answer in strategy.examples:
            messages.append(ChatMessage("user", question))
            messages.append(ChatMessage("assistant", answer))
        messages.append(ChatMessage("user", task))
        return messages

    if isinstance(strategy, ChainOfThought):
        return [ChatMessage("system", system),
                ChatMessage("user", f"{task}\n{strategy.step_preamble}")]

    if isinstance(strategy, Rag):
        from . import rag  # local import; rag pulls numpy

        block = rag.augment_prompt(strategy.store, task, strategy.top_k)
        return [ChatMessage("system", f"{system}\n\n{block}"), ChatMessage("user", task)]

    raise TypeError(f"unsupported strategy {strategy!r}")


# ---------------------------------------------------------------------------
# backends


@dataclass(frozen=True)
class RemoteBackend:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    max_tokens: int = 4096
    timeout_s: float = 30.0
    api_key_env_var: str = ""
    # test seam: lets unit tests inject an httpx.MockTransport
    transport: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")


@dataclass(frozen=True)
class ReplayEntry:
    match: str
    response: str


@dataclass(frozen=True)
class ReplayBackend:
    script: tuple[ReplayEntry, ...]
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "script", tuple(self.script))
        if self.strict and not self.script:
            raise ValueError("a strict replay backend needs a non-empty script")


@dataclass(frozen=True)
class RecordingBackend:
    inner: object
    sink_path: Path

    def __post_init__(self):
        object.__setattr__(self, "sink_path", Path(self.sink_path))


Backend = RemoteBackend | ReplayBackend | RecordingBackend


def _last_user_content(messages: list[ChatMessage]) -> str:
    for message in reversed(messages):
        if message.role == "user":
            return message.content
    raise ValueError("prompt contains no user message")


def _estimate_tokens(messages: list[ChatMessage]) -> int:
    return sum(len(m.content) for m in messages) // _CHARS_PER_TOKEN


def _complete_remote(b: RemoteBackend, messages: list[ChatMessage]) -> ChatMessage:
    if _estimate_tokens(messages) > b.max_tokens:
        raise GatewayError("budget", f"prompt estimate exceeds max_tokens={b.max_tokens}; not truncating")
    headers = {"content-type": "application/json"}
    if b.api_key_env_var:
        key = os.environ.get(b.api_key_env_var)
        if not key:
            raise GatewayError("transport", f"environment variable {b.api_key_env_var} is not set")
        headers["authorization"] = f"Bearer {key}"
    body = {
        "model": b.model_name,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
        "temperature": b.temperature,
        "max_tokens": b.max_tokens,
    }

    last_error: Exception | None = None
    for attempt in range(_RETRIES + 1):
        try:
            with httpx.Client(transport=b.transport, timeout=b.timeout_s) as client:
                response = client.post(b.endpoint_url, json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise GatewayError("timeout", str(exc)) from exc
        except httpx.HTTPError as exc:
            last_error = exc
            if attempt < _RETRIES:
                time.sleep(_BACKOFF_BASE_S * 2 ** attempt)
            continue
        if response.status_code != 200:
            raise GatewayError("status", f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise GatewayError("status", f"malformed completion payload: {exc}") from exc
        return ChatMessage("assistant", content)
    raise GatewayError("transport", f"gave up after {_RETRIES + 1} attempts: {last_error}")


def _complete_replay(b: ReplayBackend, messages: list[ChatMessage]) -> ChatMessage:
    prompt = _last_user_content(messages)
    for entry in b.script:
        if entry.match in prompt:
            return ChatMessage("assistant", entry.response)
    if b.strict:
        raise ReplayMissError(f"no script entry matches prompt: {prompt[:120]!r}")
    return ChatMessage("assistant", REPLAY_SENTINEL)


def complete(backend: Backend, messages: list[ChatMessage]) -> ChatMessage:
    """Run one chat completion; the reply is always an assistant message."""
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[-1].role != "user":
        raise ValueError("last message must have role user")

    if isinstance(backend, RemoteBackend):
        return _complete_remote(backend, messages)
    if isinstance(backend, ReplayBackend):
        return _complete_replay(backend, messages)
    if isinstance(backend, RecordingBackend):
        reply = complete(backend.inner, messages)
        record = {"match": _last_user_content(messages), "response": reply.content}
        try:
            with open(backend.sink_path, "a", encoding="utf-8") as sink:
                sink.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise SinkError(f"cannot append to {backend.sink_path}: {exc}") from exc
        return reply
    raise TypeError(f"unsupported backend {backend!r}")


def record_session(backend: Backend, log_sink: str | Path) -> RecordingBackend:
    """Wrap a backend so every exchange lands in a JSONL replay script."""
    return RecordingBackend(inner=backend, sink_path=Path(log_sink))


# ---------------------------------------------------------------------------
# replay script and config plumbing


def load_replay_script(path: str | Path, strict: bool = True) -> ReplayBackend:
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        doc = json.loads(line)
        if "match" not in doc or "response" not in doc:
            raise ValueError(f"{path}:{lineno}: replay entries need 'match' and 'response'")
        entries.append(ReplayEntry(match=doc["match"], response=doc["response"]))
    return ReplayBackend(script=tuple(entries), strict=strict)


def backend_from_config(doc: dict, base_dir: str | Path = ".") -> Backend:
    """Build a backend from config; replay scripts resolve against base_dir."""
    kind = doc.get("type")
    if kind == "remote":
        return RemoteBackend(
            endpoint_url=doc["endpoint_url"],
            model_name=doc.get("model_name", "gpt-4"),
            temperature=float(doc.get("temperature", 0.0)),
            max_tokens=int(doc.get("max_tokens", 4096)),
            timeout_s=float(doc.get("timeout_s", 30.0)),
            api_key_env_var=doc.get("api_key_env_var", ""),
        )
    if kind == "replay":
        return load_replay_script(Path(base_dir) / doc["script_path"],
                                  strict=bool(doc.get("strict", True)))
    raise ValueError(f"unknown backend type {kind!r}")


def backend_to_config(backend: Backend) -> dict:
    if isinstance(backend, RemoteBackend):
        return {
            "type": "remote", "endpoint_url": backend.endpoint_url,
            "model_name": backend.model_name, "temperature": backend.temperature,
            "max_tokens": backend.max_tokens, "timeout_s": backend.timeout_s,
            "api_key_env_var": backend.api_key_env_var,
        }
    if isinstance(backend, ReplayBackend):
        return {"type": "replay", "strict": backend.strict,
                "script": [{"match": e.match, "response": e.response} for e in backend.script]}
    raise TypeError(f"cannot serialize backend {backend!r}")
