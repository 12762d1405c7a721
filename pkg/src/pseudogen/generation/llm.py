"""Minimal client for OpenAI-compatible chat-completion endpoints."""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import urlparse

import httpx

from ..errors import ConfigError, PseudogenError
from .prompt import PromptBundle

log = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}
BATCH_ROWS = 25


class LlmError(PseudogenError):
    pass


class LlmAuthError(LlmError):
    pass


class LlmRetriesExhausted(LlmError):
    pass


class LlmResponseError(LlmError):
    pass


@dataclass
class LlmConfig:
    endpoint_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    max_tokens: int = 4096
    api_key_env: str = "OPENAI_API_KEY"
    max_retries: int = 3
    timeout_s: float = 60.0
    backoff_s: float = 1.0
    parallelism: int = 1

    def __post_init__(self):
        u = urlparse(self.endpoint_url)
        if u.scheme not in ("http", "https") or not u.netloc:
            raise ConfigError(f"malformed endpoint_url {self.endpoint_url!r}")
        if self.temperature < 0 or self.max_tokens < 1 or self.max_retries < 0 or self.timeout_s <= 0:
            raise ConfigError("invalid LLM sampling/retry settings")

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "").strip()
        if not key:
            raise ConfigError(f"environment variable {self.api_key_env} is not set")
        return key


def llm_generate(config: LlmConfig, prompt: PromptBundle, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep) -> str:
    """POST one chat completion and return the assistant message content.

    Retries 408/409/429/5xx responses, timeouts and connection errors with
    exponential backoff (``backoff_s * 2**attempt``); gives up after
    ``max_retries`` retries. 401/403 fail immediately.
    """
    key = config.api_key()
    url = config.endpoint_url.rstrip("/") + "/chat/completions"
    body = {
        "model": config.model_name,
        "messages": prompt.messages(),
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    headers = {"Authorization": f"Bearer {key}"}
    last = None
    with httpx.Client(transport=transport, timeout=config.timeout_s) as client:
        for attempt in range(config.max_retries + 1):
            if attempt:
                sleep(config.backoff_s * 2 ** (attempt - 1))
            try:
                resp = client.post(url, json=body, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last = exc
                log.warning("LLM request attempt %d failed: %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise LlmAuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code in RETRYABLE_STATUS:
                last = LlmError(f"HTTP {resp.status_code}")
                log.warning("LLM request attempt %d got HTTP %d", attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise LlmError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise LlmResponseError(f"malformed chat completion response: {exc}") from exc
            if not isinstance(content, str):
                raise LlmResponseError("assistant content is not a string")
            return content
    raise LlmRetriesExhausted(f"gave up after {config.max_retries + 1} attempts: {last}")


def batch_sizes(count: int, per_batch: int = BATCH_ROWS) -> list[int]:
    n = math.ceil(count / per_batch)
    return [min(per_batch, count - k * per_batch) for k in range(n)]


def generate_batches(config: LlmConfig, make_prompt: Callable[[int], PromptBundle], count: int,
                     raw_dir=None, transport=None, sleep=time.sleep) -> list[str]:
    """Request ``count`` rows in batches of at most 25; responses come back in request order."""
    config.api_key()
    prompts = [make_prompt(k) for k in batch_sizes(count)]

    def call(p):
        return llm_generate(config, p, transport=transport, sleep=sleep)

    if config.parallelism > 1:
        with ThreadPoolExecutor(config.parallelism) as pool:
            responses = list(pool.map(call, prompts))
    else:
        responses = [call(p) for p in prompts]
    if raw_dir is not None:
        raw_dir = Path(raw_dir)
        raw_dir.mkdir(parents=True, exist_ok=True)
        for k, text in enumerate(responses):
            (raw_dir / f"llm_response_{k:03d}.txt").write_text(text, encoding="utf-8")
    return responses
