"""Pluggable completion and embedding backends.

Every network-facing piece of the system talks to these two small
interfaces, so the whole stack runs offline against the deterministic mocks.
The HTTP implementations speak the common chat-completions / embeddings
JSON shapes; endpoint, model, and key are configuration.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx
import numpy as np


class BackendError(Exception):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


class BackendTimeout(BackendError):
    def __init__(self, detail: str = "backend call timed out"):
        super().__init__(detail)


class CompletionBackend(Protocol):
    name: str

    def complete(self, system_prompt: str, message_history: Sequence[dict]) -> str:
        """message_history entries are {"sender": str, "content": str} dicts."""
        ...


class EmbeddingBackend(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


def _clip(text: str, limit: int = 60) -> str:
    text = " ".join(text.split())
    return text if len(text) <= limit else text[: limit - 1] + "…"


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:8]


_PERSONA_RE = re.compile(r"^You are ([^,.\n]+)")
_LEVEL_RE = re.compile(r"(?im)^Support level:\s*(\d+)\s*\(([^)]+)\)")
_CITABLE_RE = re.compile(r"(?m)^\[([^\[\]\s]+)\]")


@dataclass
class MockCompletionBackend:
    """Pure templated echo for offline runs.

    The reply names the persona and support level when the system prompt
    carries them, digests the last message, and cites every line-initial
    bracketed snippet id it finds in the system prompt (which is how the
    copilot's mock replies end up citing everything that was retrieved).
    """

    name: str = "mock"

    def complete(self, system_prompt: str, message_history: Sequence[dict]) -> str:
        last = message_history[-1]["content"] if message_history else ""
        parts = [f"(mock {_digest(system_prompt, last)})"]
        persona = _PERSONA_RE.search(system_prompt)
        if persona:
            parts.append(f"{persona.group(1)} here")
        level = _LEVEL_RE.search(system_prompt)
        if level:
            parts.append(f"working at level {level.group(1)} ({level.group(2)})")
        if last:
            parts.append(f'on "{_clip(last)}"')
        else:
            parts.append("opening the discussion")
        reply = ", ".join(parts) + "."
        citable = _CITABLE_RE.findall(system_prompt)
        if citable:
            seen: list[str] = []
            for cid in citable:
                if cid not in seen:
                    seen.append(cid)
            reply += " Sources: " + " ".join(f"[{cid}]" for cid in seen)
        return reply


@dataclass
class HttpCompletionBackend:
    """Chat-completions HTTP provider (OpenAI-compatible payload shape)."""

    endpoint: str
    model: str
    api_key: str = ""
    timeout: float = 30.0
    name: str = "http"

    def complete(self, system_prompt: str, message_history: Sequence[dict]) -> str:
        messages = [{"role": "system", "content": system_prompt}]
        for msg in message_history:
            messages.append({"role": "user", "content": f'{msg["sender"]}: {msg["content"]}'})
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = httpx.post(
                self.endpoint.rstrip("/") + "/chat/completions",
                json={"model": self.model, "messages": messages},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except httpx.TimeoutException as exc:
            raise BackendTimeout(str(exc)) from exc
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"completion call failed: {exc}") from exc


@dataclass
class MockEmbeddingBackend:
    """Hash-seeded pseudo-random unit vectors; same text, same vector."""

    dim: int = 1536
    name: str = "mock"

    def embed(self, text: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)


@dataclass
class HttpEmbeddingBackend:
    endpoint: str
    model: str
    api_key: str = ""
    timeout: float = 30.0
    dim: int = 1536
    name: str = "http"

    def embed(self, text: str) -> np.ndarray:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = httpx.post(
                self.endpoint.rstrip("/") + "/embeddings",
                json={"model": self.model, "input": text},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=float)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(str(exc)) from exc
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"embedding call failed: {exc}") from exc
        if vec.shape != (self.dim,):
            raise BackendError(f"embedding dimension {vec.shape} != ({self.dim},)")
        return vec
