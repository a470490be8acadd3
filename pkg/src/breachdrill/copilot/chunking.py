"""Word-budget text chunking.

The token proxy is the whitespace-delimited word count (one word counts as
one token). Splits land on whitespace; when a chunk would cut mid-thought,
the split backs up to the nearest sentence end within a small lookback
window. Joining the chunks with single spaces reproduces the input modulo
whitespace normalization.
"""

from __future__ import annotations

import re

_SENTENCE_END = re.compile(r"[.!?][\"')\]]*$")


def proxy_tokens(text: str) -> int:
    return len(text.split())


def chunk(text: str, max_tokens: int = 300, sentence_lookback: int = 30) -> list[str]:
    """Split text into pieces of at most max_tokens proxy tokens."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    words = text.split()
    chunks: list[str] = []
    start = 0
    while start < len(words):
        end = min(start + max_tokens, len(words))
        if end < len(words):
            # Prefer a sentence boundary close to the budget.
            for j in range(end - 1, max(start, end - 1 - sentence_lookback) - 1, -1):
                if _SENTENCE_END.search(words[j]):
                    end = j + 1
                    break
        chunks.append(" ".join(words[start:end]))
        start = end
    return chunks
