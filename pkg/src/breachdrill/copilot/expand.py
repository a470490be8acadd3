"""Offline knowledge expansion: four extraction passes per source document.

Each document is run through the completion backend four times, once per
knowledge type, with a pass-specific extraction prompt: discrete facts,
models and principles, step-by-step methods, and heuristics or reflection
tips. Every extracted item carries its pass's tag. Passes may come back
empty.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..backends import CompletionBackend
from .index import BloomTag


class EmptyDocument(Exception):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id!r} has no text to expand")


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    uri: str
    text: str


EXPANSION_PROMPTS: dict[BloomTag, str] = {
    BloomTag.FACTUAL: (
        "You are a knowledge extractor for incident-response training material.\n"
        "Extract the discrete facts stated in the document: concrete, verifiable "
        "statements such as what a tool does or what an artifact contains.\n"
        "Write one fact per line, no numbering, no commentary."
    ),
    BloomTag.CONCEPTUAL: (
        "You are a knowledge extractor for incident-response training material.\n"
        "Extract the models and principles the document teaches: how things relate, "
        "why techniques work, what general rules hold.\n"
        "Write one principle per line, no numbering, no commentary."
    ),
    BloomTag.PROCEDURAL: (
        "You are a knowledge extractor for incident-response training material.\n"
        "Extract the step-by-step methods the document describes: ordered actions a "
        "practitioner would carry out.\n"
        "Write one method per line, keeping its steps together on that line."
    ),
    BloomTag.METACOGNITIVE: (
        "You are a knowledge extractor for incident-response training material.\n"
        "Extract the heuristics and reflection tips the document offers: rules of "
        "thumb, prioritization advice, ways to check one's own reasoning.\n"
        "Write one tip per line, no numbering, no commentary."
    ),
}


def expand_document(
    doc: SourceDocument, backend: CompletionBackend
) -> list[tuple[BloomTag, str]]:
    """Run the four tagged extraction passes over one document."""
    if not doc.text.strip():
        raise EmptyDocument(doc.doc_id)
    items: list[tuple[BloomTag, str]] = []
    for tag in BloomTag:
        reply = backend.complete(
            EXPANSION_PROMPTS[tag], [{"sender": "corpus", "content": doc.text}]
        )
        for line in reply.splitlines():
            item = line.strip().lstrip("-*• \t").strip()
            if item:
                items.append((tag, item))
    return items
