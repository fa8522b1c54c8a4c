"""Vision-language model client (OpenAI-compatible chat completions).

Configured entirely through environment variables so the service and CLI
share one code path:

    TFV_VLM_URL        endpoint base, e.g. http://host:8000/v1
    TFV_VLM_MODEL      model name sent with each request
    TFV_VLM_API_KEY    bearer token (optional)
    TFV_VLM_MOCK       "1" enables the deterministic offline mock
    TFV_VLM_TIMEOUT_S  request timeout, default 120

The mock client is first-class: it answers with a digest of the exact
request payload, so repeated calls are byte-identical and the whole report
pipeline runs without network or GPU.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time

import httpx

from .errors import VlmMalformedResponse, VlmUnavailable
from .util import canonical_json

DEFAULT_TIMEOUT_S = 120.0
MAX_ATTEMPTS = 3
BACKOFF_BASE_S = 0.5
MAX_IN_FLIGHT = 2


class VlmClient:
    model_id: str

    def chat(self, messages: list[dict]) -> str:
        raise NotImplementedError


class MockVlmClient(VlmClient):
    """Deterministic offline stand-in: text is a pure function of the request."""

    def __init__(self, model_id: str = "mock-vlm"):
        self.model_id = model_id

    def chat(self, messages: list[dict]) -> str:
        digest = hashlib.sha256(canonical_json(messages).encode()).hexdigest()
        n_images = sum(1 for m in messages if isinstance(m.get("content"), list)
                       for part in m["content"] if part.get("type") == "image_url")
        return (f"[{self.model_id}] deterministic mock report "
                f"(payload digest {digest[:16]}, {n_images} images).")


class HttpVlmClient(VlmClient):
    def __init__(self, base_url: str, model_id: str, api_key: str | None = None,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self._headers = {"Content-Type": "application/json"}
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"
        self._timeout = timeout_s
        self._slots = threading.Semaphore(MAX_IN_FLIGHT)

    def chat(self, messages: list[dict]) -> str:
        payload = {"model": self.model_id, "messages": messages}
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                time.sleep(BACKOFF_BASE_S * 2 ** (attempt - 1))
            try:
                with self._slots:
                    response = httpx.post(f"{self.base_url}/chat/completions",
                                          json=payload, headers=self._headers,
                                          timeout=self._timeout)
                if response.status_code >= 500:
                    last_error = VlmUnavailable(f"server returned {response.status_code}")
                    continue
                response.raise_for_status()
                return self._extract_text(response.json())
            except httpx.HTTPError as exc:
                last_error = exc
        raise VlmUnavailable(f"VLM endpoint failed after {MAX_ATTEMPTS} attempts: "
                             f"{last_error}")

    @staticmethod
    def _extract_text(doc: dict) -> str:
        try:
            text = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise VlmMalformedResponse(f"unexpected response shape: {exc}") from exc
        if not isinstance(text, str) or not text.strip():
            raise VlmMalformedResponse("response contained no text content")
        return text


def client_from_env(env: dict | None = None) -> VlmClient:
    env = os.environ if env is None else env
    if env.get("TFV_VLM_MOCK") == "1":
        return MockVlmClient(model_id=env.get("TFV_VLM_MODEL", "mock-vlm"))
    url = env.get("TFV_VLM_URL")
    if not url:
        raise VlmUnavailable(
            "no VLM endpoint configured: set TFV_VLM_URL or TFV_VLM_MOCK=1")
    return HttpVlmClient(
        base_url=url,
        model_id=env.get("TFV_VLM_MODEL", "gemma-3-27b-it"),
        api_key=env.get("TFV_VLM_API_KEY"),
        timeout_s=float(env.get("TFV_VLM_TIMEOUT_S", DEFAULT_TIMEOUT_S)),
    )
