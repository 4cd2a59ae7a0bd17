"""Model-agnostic completion gateway with a scripted mock backend.

The HTTP backend speaks the common chat-completions wire shape (model,
messages, temperature, max_tokens) and authenticates via a bearer token
taken from REC_API_KEY; the credential travels only in the Authorization
header, never in the request body. The mock backend answers from a script,
deterministically, and instruments concurrency so tests can assert the
parallelism bound.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

import requests

from .errors import RecError
from .prompts import PromptText
from .tokens import TokenEstimator, estimate_tokens

__all__ = [
    "GatewayError",
    "TransportError",
    "AuthFailureError",
    "BackendRefusalError",
    "TruncatedError",
    "CancelledError",
    "CompletionRequest",
    "CompletionResult",
    "BackendReply",
    "Backend",
    "HttpBackend",
    "MockBackend",
    "script_responder",
    "load_mock_script",
    "Gateway",
]

logger = logging.getLogger(__name__)

API_KEY_ENV = "REC_API_KEY"


class GatewayError(RecError):
    """Base class for completion failures."""


class TransportError(GatewayError):
    """Transient transport problem (network, timeout, 429/5xx); retryable."""


class AuthFailureError(GatewayError):
    """The backend rejected our credentials; not retryable."""


class BackendRefusalError(GatewayError):
    """The backend answered but refused or returned an unusable reply."""


class TruncatedError(GatewayError):
    """For callers that must treat a truncated completion as fatal."""


class CancelledError(GatewayError):
    """The batch was cancelled before this item ran."""


@dataclass(frozen=True)
class CompletionRequest:
    prompt: PromptText | str
    temperature: float = 0.0
    max_output_tokens: int = 1024
    seed: int | None = None

    @property
    def prompt_text(self) -> str:
        return self.prompt.text if isinstance(self.prompt, PromptText) else self.prompt

    def violations(self) -> list[str]:
        out = []
        if not self.prompt_text.strip():
            out.append("prompt must be non-empty")
        if self.temperature < 0:
            out.append("temperature must be >= 0")
        if self.max_output_tokens < 1:
            out.append("max_output_tokens must be >= 1")
        return out


@dataclass(frozen=True)
class CompletionResult:
    """One completion; text may be empty only when truncated is set."""

    text: str
    prompt_tokens: int
    output_tokens: int
    latency_ms: float
    truncated: bool = False


@dataclass(frozen=True)
class BackendReply:
    text: str
    prompt_tokens: int | None = None
    output_tokens: int | None = None
    truncated: bool = False


class Backend(Protocol):
    def send(
        self,
        prompt: str,
        *,
        temperature: float,
        max_output_tokens: int,
        seed: int | None,
    ) -> BackendReply: ...


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class HttpBackend:
    """Chat-completions client for an OpenAI-style endpoint."""

    def __init__(
        self,
        base_url: str,
        model_name: str,
        *,
        api_key: str | None = None,
        timeout_ms: int = 60_000,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url
        self.model_name = model_name
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout_ms = timeout_ms
        self._session = session or requests.Session()

    def send(
        self,
        prompt: str,
        *,
        temperature: float,
        max_output_tokens: int,
        seed: int | None,
    ) -> BackendReply:
        payload: dict[str, Any] = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_output_tokens,
        }
        if seed is not None:
            payload["seed"] = seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._session.post(
                self.base_url,
                json=payload,
                headers=headers,
                timeout=self.timeout_ms / 1000.0,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc

        if response.status_code in (401, 403):
            raise AuthFailureError(f"HTTP {response.status_code} from backend")
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(f"HTTP {response.status_code} from backend")
        if response.status_code >= 400:
            raise BackendRefusalError(f"HTTP {response.status_code}: {response.text[:200]}")

        try:
            body = response.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
            if not isinstance(text, str):
                raise TypeError("content is not a string")
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendRefusalError(f"malformed backend reply: {exc}") from exc
        usage = body.get("usage") or {}
        return BackendReply(
            text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            output_tokens=usage.get("completion_tokens"),
            truncated=choice.get("finish_reason") == "length",
        )


_PAIRWISE_A_HEADER = "# Output (a):"
_PAIRWISE_B_HEADER = "# Output (b):"
_PAIRWISE_TAIL = "# Which is better"


def _pairwise_blocks(prompt: str) -> tuple[str, str]:
    """The two presented output blocks of a pairwise judge prompt."""
    a_start = prompt.find(_PAIRWISE_A_HEADER)
    b_start = prompt.find(_PAIRWISE_B_HEADER)
    tail = prompt.find(_PAIRWISE_TAIL)
    if a_start < 0 or b_start < 0:
        return "", ""
    a_block = prompt[a_start + len(_PAIRWISE_A_HEADER) : b_start]
    b_block = prompt[b_start + len(_PAIRWISE_B_HEADER) : tail if tail > b_start else len(prompt)]
    return a_block, b_block


def script_responder(script: dict[str, Any]) -> Callable[[str], str]:
    """Build a deterministic prompt->text function from a mock script.

    Rules are tried in order; the first match wins, then "default" applies.
    A rule matches by "prompt_sha256" or "contains", or is the dynamic
    "choose_output_containing" rule, which answers with the label of the
    presented output block containing the marker ("neither" when absent,
    which parses as Unparseable). A rule (or the default) replies with
    "text" or raises the named "error" (transport|auth|refusal).
    """
    rules: list[dict[str, Any]] = list(script.get("rules", ()))
    default = script.get("default")

    def _reply(rule_value: Any, prompt: str) -> str:
        if isinstance(rule_value, dict) and "error" in rule_value:
            kind = rule_value["error"]
            if kind == "transport":
                raise TransportError("scripted transport failure")
            if kind == "auth":
                raise AuthFailureError("scripted auth failure")
            raise BackendRefusalError("scripted refusal")
        if isinstance(rule_value, dict):
            return str(rule_value.get("text", ""))
        return str(rule_value)

    def responder(prompt: str) -> str:
        for rule in rules:
            if "prompt_sha256" in rule and prompt_sha256(prompt) == rule["prompt_sha256"]:
                return _reply(rule, prompt)
            if "contains" in rule and rule["contains"] in prompt:
                return _reply(rule, prompt)
            if "choose_output_containing" in rule:
                a_block, b_block = _pairwise_blocks(prompt)
                marker = rule["choose_output_containing"]
                if marker in a_block:
                    return "Output (a)"
                if marker in b_block:
                    return "Output (b)"
                return "neither"
        if default is None:
            raise BackendRefusalError("mock script has no rule for this prompt")
        return _reply(default, prompt)

    return responder


def load_mock_script(path: str | Path) -> Callable[[str], str]:
    with open(path, "r", encoding="utf-8") as fh:
        return script_responder(json.load(fh))


class MockBackend:
    """Scripted in-process backend with concurrency instrumentation.

    responder maps the prompt text to the reply text (or raises a
    GatewayError subclass for fault injection); latency_fn, when given, maps
    the prompt to a sleep in seconds so scheduling races are reproducible.
    """

    def __init__(
        self,
        responder: Callable[[str], str | BackendReply],
        *,
        latency_fn: Callable[[str], float] | None = None,
    ):
        self.responder = responder
        self.latency_fn = latency_fn
        self._lock = threading.Lock()
        self.calls: list[str] = []
        self.in_flight = 0
        self.peak_concurrency = 0

    def send(
        self,
        prompt: str,
        *,
        temperature: float,
        max_output_tokens: int,
        seed: int | None,
    ) -> BackendReply:
        with self._lock:
            self.calls.append(prompt)
            self.in_flight += 1
            self.peak_concurrency = max(self.peak_concurrency, self.in_flight)
        try:
            if self.latency_fn is not None:
                delay = self.latency_fn(prompt)
                if delay > 0:
                    time.sleep(delay)
            reply = self.responder(prompt)
        finally:
            with self._lock:
                self.in_flight -= 1
        if isinstance(reply, BackendReply):
            return reply
        return BackendReply(text=reply)


class Gateway:
    """Retrying completion front end over any backend."""

    def __init__(
        self,
        backend: Backend,
        *,
        max_retries: int = 2,
        backoff_s: float = 0.2,
        audit_log_path: str | Path | None = None,
        token_estimator: TokenEstimator | None = None,
    ):
        self.backend = backend
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.audit_log_path = Path(audit_log_path) if audit_log_path else None
        self.token_estimator = token_estimator or estimate_tokens
        self._audit_lock = threading.Lock()

    def _audit(self, prompt: str, status: str, latency_ms: float, output_tokens: int | None, retries: int) -> None:
        if self.audit_log_path is None:
            return
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "prompt_sha256": prompt_sha256(prompt),
            "status": status,
            "latency_ms": round(latency_ms, 3),
            "output_tokens": output_tokens,
            "retries": retries,
        }
        line = json.dumps(entry, sort_keys=True) + "\n"
        with self._audit_lock:
            with open(self.audit_log_path, "a", encoding="utf-8") as fh:
                fh.write(line)

    def complete(self, req: CompletionRequest) -> CompletionResult:
        """One completion, retrying transient transport failures with backoff."""
        problems = req.violations()
        if problems:
            raise ValueError("; ".join(problems))
        prompt = req.prompt_text
        started = time.perf_counter()
        attempt = 0
        while True:
            try:
                reply = self.backend.send(
                    prompt,
                    temperature=req.temperature,
                    max_output_tokens=req.max_output_tokens,
                    seed=req.seed,
                )
                break
            except TransportError as exc:
                latency_ms = (time.perf_counter() - started) * 1000
                if attempt >= self.max_retries:
                    self._audit(prompt, "transport_error", latency_ms, None, attempt)
                    raise
                delay = self.backoff_s * (2**attempt)
                logger.warning("transport failure (%s); retry %d in %.2fs", exc, attempt + 1, delay)
                time.sleep(delay)
                attempt += 1
            except AuthFailureError:
                self._audit(prompt, "auth_failure", (time.perf_counter() - started) * 1000, None, attempt)
                raise
            except GatewayError:
                self._audit(prompt, "backend_refusal", (time.perf_counter() - started) * 1000, None, attempt)
                raise

        latency_ms = (time.perf_counter() - started) * 1000
        if not reply.text and not reply.truncated:
            self._audit(prompt, "backend_refusal", latency_ms, 0, attempt)
            raise BackendRefusalError("backend returned an empty, untruncated completion")
        prompt_tokens = reply.prompt_tokens
        output_tokens = reply.output_tokens
        if prompt_tokens is None:
            prompt_tokens = int(round(self.token_estimator(prompt)))
        if output_tokens is None:
            output_tokens = int(round(self.token_estimator(reply.text)))
        self._audit(prompt, "ok", latency_ms, output_tokens, attempt)
        return CompletionResult(
            text=reply.text,
            prompt_tokens=prompt_tokens,
            output_tokens=output_tokens,
            latency_ms=latency_ms,
            truncated=reply.truncated,
        )

    def complete_batch(
        self,
        reqs: Sequence[CompletionRequest],
        parallelism: int = 4,
        cancel_event: threading.Event | None = None,
    ) -> list[CompletionResult | GatewayError]:
        """Complete all requests with at most `parallelism` in flight.

        The result list is in request order; a failed item holds its
        GatewayError in its slot instead of poisoning the batch. On Ctrl-C
        the batch stops starting new items, marks them CancelledError, and
        returns what it has.
        """
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        event = cancel_event if cancel_event is not None else threading.Event()
        slots: list[CompletionResult | GatewayError | None] = [None] * len(reqs)

        def run(req: CompletionRequest) -> CompletionResult | GatewayError:
            if event.is_set():
                return CancelledError("batch cancelled before this item started")
            try:
                return self.complete(req)
            except GatewayError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(run, req) for req in reqs]
            try:
                for i, fut in enumerate(futures):
                    slots[i] = fut.result()
            except KeyboardInterrupt:
                logger.warning("interrupt: cancelling remaining batch items")
                event.set()
                for i, fut in enumerate(futures):
                    if slots[i] is None:
                        slots[i] = fut.result()
        return slots  # type: ignore[return-value]
