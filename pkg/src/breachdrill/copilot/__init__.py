"""Retrieval-augmented copilot: offline corpus expansion and indexing,
online retrieval and cited answer generation."""

from .chunking import chunk
from .expand import EmptyDocument, SourceDocument, expand_document
from .index import (
    BloomTag,
    CorruptIndex,
    DimensionMismatch,
    DuplicateSnippetId,
    KnowledgeSnippet,
    VectorIndex,
    VersionMismatch,
    ZeroVector,
    build_index,
    cosine,
    load_index,
    save_index,
)
from .pipeline import (
    CopilotAnswer,
    answer_query,
    assemble_prompt,
    build_corpus_index,
    expand_to_snippets,
    load_corpus_dir,
)

__all__ = [
    "BloomTag",
    "CopilotAnswer",
    "CorruptIndex",
    "DimensionMismatch",
    "DuplicateSnippetId",
    "EmptyDocument",
    "KnowledgeSnippet",
    "SourceDocument",
    "VectorIndex",
    "VersionMismatch",
    "ZeroVector",
    "answer_query",
    "assemble_prompt",
    "build_corpus_index",
    "build_index",
    "chunk",
    "cosine",
    "expand_document",
    "expand_to_snippets",
    "load_corpus_dir",
    "load_index",
    "save_index",
]
