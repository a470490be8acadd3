"""Copilot pipeline: corpus ingestion offline, cited answers online.

Offline: load a corpus directory, expand each document into tagged items,
chunk to the word budget, embed, and index. Online: embed the query,
retrieve top-k, assemble a prompt from (sources, recent chat, directive) in
that order, generate, and parse the bracketed citation markers back out of
the reply.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from ..agents import ChatMessage, load_template
from ..backends import BackendError, CompletionBackend, EmbeddingBackend
from .chunking import chunk
from .expand import EmptyDocument, SourceDocument, expand_document
from .index import METADATA_KEYS, BloomTag, KnowledgeSnippet, VectorIndex

NO_SOURCES_NOTICE = "no relevant sources found"
DEFAULT_CHAT_WINDOW = 12
DEFAULT_TOP_K = 10

_CITATION_RE = re.compile(r"\[([^\[\]\s]+)\]")


@dataclass
class CopilotAnswer:
    answer_text: str
    cited_snippet_ids: list[str] = field(default_factory=list)
    retrieved: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "answer_text": self.answer_text,
            "cited_snippet_ids": list(self.cited_snippet_ids),
            "retrieved": [[sid, score] for sid, score in self.retrieved],
        }


def default_directive() -> str:
    return load_template("copilot")


def assemble_prompt(
    snippets: Sequence[KnowledgeSnippet],
    chat_window: Sequence[ChatMessage],
    directive: str,
    window: int = DEFAULT_CHAT_WINDOW,
) -> str:
    """Build the generation prompt: sources, then the last `window` chat
    messages, then the directive. Pure function of its inputs."""
    lines: list[str] = ["Sources:"]
    if snippets:
        for s in snippets:
            lines.append(f"[{s.snippet_id}] ({s.bloom_tag.value}) {s.text}")
    else:
        lines.append(f"({NO_SOURCES_NOTICE})")
    lines.append("")
    lines.append("Recent discussion:")
    recent = list(chat_window)[-window:] if window > 0 else []
    if recent:
        for msg in recent:
            lines.append(f"{msg.sender}: {msg.content}")
    else:
        lines.append("(no recent messages)")
    lines.append("")
    lines.append(directive)
    return "\n".join(lines)


def parse_citations(answer_text: str, retrieved_ids: Sequence[str]) -> list[str]:
    """Bracketed ids in the reply that were actually retrieved, in order of
    first mention."""
    allowed = set(retrieved_ids)
    cited: list[str] = []
    for cid in _CITATION_RE.findall(answer_text):
        if cid in allowed and cid not in cited:
            cited.append(cid)
    return cited


def answer_query(
    query: str,
    chat_window: Sequence[ChatMessage],
    embed_backend: EmbeddingBackend,
    completion_backend: CompletionBackend,
    index: VectorIndex,
    k: int = DEFAULT_TOP_K,
    bloom_filter: Optional[BloomTag] = None,
    directive: Optional[str] = None,
    window: int = DEFAULT_CHAT_WINDOW,
) -> CopilotAnswer:
    """Full online pipeline for one learner query.

    Backend failures come back as an apologetic notice answer with no
    citations; they never raise.
    """
    if len(index) == 0:
        return CopilotAnswer(
            answer_text=(
                "I have no indexed sources yet, so I cannot ground an answer. "
                "Build or load a knowledge index and ask again."
            ),
        )
    try:
        query_vec = embed_backend.embed(query)
        retrieved = index.search(query_vec, k=k, bloom_filter=bloom_filter)
    except BackendError as exc:
        return CopilotAnswer(
            answer_text=f"Sorry, I could not reach the knowledge base ({exc.detail}).",
        )

    snippets = [index.get(sid) for sid, _ in retrieved]
    prompt = assemble_prompt(
        snippets, chat_window, directive if directive is not None else default_directive(),
        window=window,
    )
    try:
        reply = completion_backend.complete(
            prompt, [{"sender": "learner", "content": query}]
        )
    except BackendError as exc:
        return CopilotAnswer(
            answer_text=f"Sorry, I could not generate an answer ({exc.detail}).",
            retrieved=retrieved,
        )
    return CopilotAnswer(
        answer_text=reply,
        cited_snippet_ids=parse_citations(reply, [sid for sid, _ in retrieved]),
        retrieved=retrieved,
    )


def _sanitize_id(raw: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", raw.strip()) or "doc"


def expand_to_snippets(
    doc: SourceDocument,
    completion_backend: CompletionBackend,
    embed_backend: EmbeddingBackend,
    max_tokens: int = 300,
    extra_metadata: Optional[dict] = None,
) -> list[KnowledgeSnippet]:
    """Expand one document into embedded, tagged, budgeted snippets."""
    metadata = {key: None for key in METADATA_KEYS}
    metadata["uri"] = doc.uri
    if extra_metadata:
        metadata.update(extra_metadata)

    snippets: list[KnowledgeSnippet] = []
    counts: dict[BloomTag, int] = {tag: 0 for tag in BloomTag}
    for tag, item in expand_document(doc, completion_backend):
        for piece in chunk(item, max_tokens=max_tokens):
            sid = f"{_sanitize_id(doc.doc_id)}:{tag.value.lower()}:{counts[tag]}"
            counts[tag] += 1
            snippets.append(
                KnowledgeSnippet(
                    snippet_id=sid,
                    doc_id=doc.doc_id,
                    text=piece,
                    bloom_tag=tag,
                    metadata=dict(metadata),
                    embedding=embed_backend.embed(piece),
                )
            )
    return snippets


def load_corpus_dir(corpus_dir: str | Path) -> list[SourceDocument]:
    """Read a corpus directory into source documents.

    Accepted files: .txt/.md (an optional first line "uri: <address>" names
    the source), .json (a record or array of records with doc_id/uri/text),
    and .jsonl (one record per line).
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    docs: list[SourceDocument] = []
    for path in sorted(corpus_dir.iterdir()):
        if path.suffix in (".txt", ".md"):
            text = path.read_text(encoding="utf-8")
            uri = ""
            first, _, rest = text.partition("\n")
            if first.lower().startswith("uri:"):
                uri = first[4:].strip()
                text = rest
            docs.append(SourceDocument(doc_id=path.stem, uri=uri, text=text.strip()))
        elif path.suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
            records = data if isinstance(data, list) else [data]
            for i, rec in enumerate(records):
                docs.append(
                    SourceDocument(
                        doc_id=str(rec.get("doc_id", f"{path.stem}-{i}")),
                        uri=str(rec.get("uri", "")),
                        text=str(rec.get("text", "")),
                    )
                )
        elif path.suffix == ".jsonl":
            for i, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
                if not line.strip():
                    continue
                rec = json.loads(line)
                docs.append(
                    SourceDocument(
                        doc_id=str(rec.get("doc_id", f"{path.stem}-{i}")),
                        uri=str(rec.get("uri", "")),
                        text=str(rec.get("text", "")),
                    )
                )
    return docs


def build_corpus_index(
    corpus_dir: str | Path,
    completion_backend: CompletionBackend,
    embed_backend: EmbeddingBackend,
    max_tokens: int = 300,
    on_progress: Optional[Callable[[str, int], None]] = None,
) -> tuple[VectorIndex, list[tuple[str, str]]]:
    """Offline stage over a whole corpus directory.

    Returns the built index and a list of (doc_id, error) for documents that
    failed; failures do not stop the pipeline.
    """
    index = VectorIndex(dim=embed_backend.dim)
    failures: list[tuple[str, str]] = []
    for doc in load_corpus_dir(corpus_dir):
        try:
            snippets = expand_to_snippets(
                doc, completion_backend, embed_backend, max_tokens=max_tokens
            )
            for snippet in snippets:
                index.add(snippet)
            if on_progress:
                on_progress(doc.doc_id, len(snippets))
        except (EmptyDocument, BackendError, OSError, ValueError) as exc:
            failures.append((doc.doc_id, str(exc)))
    return index, failures
