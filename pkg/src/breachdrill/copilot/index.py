"""Cosine-similarity vector index over knowledge snippets.

Search is an exact scan over all stored embeddings, ranked by descending
cosine score with ties broken by lexicographic snippet id. At corpus scales
of a few thousand snippets the scan is comfortably sub-millisecond, so no
approximate structure is used.

On disk an index is a versioned manifest line followed by one JSON record
per snippet (embeddings stored as full-precision JSON floats, which
round-trip exactly).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

INDEX_FORMAT = "breachdrill-index"
INDEX_VERSION = 1

# Metadata keys every snippet record carries; values may be None.
METADATA_KEYS = ("card_id", "name", "type", "description", "tools", "detection")


class BloomTag(str, Enum):
    FACTUAL = "Factual"
    CONCEPTUAL = "Conceptual"
    PROCEDURAL = "Procedural"
    METACOGNITIVE = "Metacognitive"


class DimensionMismatch(Exception):
    pass


class ZeroVector(Exception):
    pass


class DuplicateSnippetId(Exception):
    def __init__(self, snippet_id: str):
        self.snippet_id = snippet_id
        super().__init__(f"snippet id {snippet_id!r} already indexed")


class CorruptIndex(Exception):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"corrupt index file: {detail}")


class VersionMismatch(Exception):
    def __init__(self, found: object, expected: int = INDEX_VERSION):
        super().__init__(f"index file version {found!r}, this build reads version {expected}")


@dataclass
class KnowledgeSnippet:
    snippet_id: str
    doc_id: str
    text: str
    bloom_tag: BloomTag
    metadata: dict = field(default_factory=dict)
    embedding: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.embedding = np.asarray(self.embedding, dtype=float)

    def to_record(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "bloom_tag": self.bloom_tag.value,
            "metadata": self.metadata,
            "embedding": self.embedding.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "KnowledgeSnippet":
        return cls(
            snippet_id=rec["snippet_id"],
            doc_id=rec["doc_id"],
            text=rec["text"],
            bloom_tag=BloomTag(rec["bloom_tag"]),
            metadata=rec.get("metadata", {}),
            embedding=np.asarray(rec["embedding"], dtype=float),
        )


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two equal-dimension nonzero vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


class VectorIndex:
    def __init__(self, dim: int = 1536):
        self.dim = dim
        self._snippets: dict[str, KnowledgeSnippet] = {}
        self._matrix: Optional[np.ndarray] = None
        self._norms: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._snippets)

    def __contains__(self, snippet_id: str) -> bool:
        return snippet_id in self._snippets

    @property
    def snippets(self) -> list[KnowledgeSnippet]:
        return list(self._snippets.values())

    def get(self, snippet_id: str) -> KnowledgeSnippet:
        return self._snippets[snippet_id]

    def add(self, snippet: KnowledgeSnippet) -> None:
        if snippet.snippet_id in self._snippets:
            raise DuplicateSnippetId(snippet.snippet_id)
        if snippet.embedding.shape != (self.dim,):
            raise DimensionMismatch(
                f"snippet {snippet.snippet_id!r} embedding {snippet.embedding.shape} "
                f"does not match index dimension ({self.dim},)"
            )
        self._snippets[snippet.snippet_id] = snippet
        self._matrix = None
        self._norms = None

    def _ensure_matrix(self) -> None:
        if self._matrix is None:
            if self._snippets:
                self._matrix = np.stack([s.embedding for s in self._snippets.values()])
                self._norms = np.linalg.norm(self._matrix, axis=1)
            else:
                self._matrix = np.zeros((0, self.dim))
                self._norms = np.zeros(0)

    def search(
        self,
        query_vec: np.ndarray,
        k: int = 10,
        bloom_filter: Optional[BloomTag] = None,
    ) -> list[tuple[str, float]]:
        """Top-k snippet ids with cosine scores, highest first.

        The bloom filter restricts the candidate set before ranking. Equal
        scores order by snippet id.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query = np.asarray(query_vec, dtype=float)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query {query.shape} vs index ({self.dim},)")
        qnorm = float(np.linalg.norm(query))
        if qnorm == 0.0:
            raise ZeroVector("cannot search with a zero query vector")
        if not self._snippets:
            return []

        self._ensure_matrix()
        ids = list(self._snippets.keys())
        scores = (self._matrix @ query) / (self._norms * qnorm)
        pairs = [
            (sid, float(score))
            for sid, score in zip(ids, scores)
            if bloom_filter is None or self._snippets[sid].bloom_tag is bloom_filter
        ]
        pairs.sort(key=lambda p: (-p[1], p[0]))
        return pairs[:k]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "dim": self.dim,
            "count": len(self._snippets),
        }
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest) + "\n")
            for snippet in self._snippets.values():
                fh.write(json.dumps(snippet.to_record()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            header = fh.readline()
            if not header.strip():
                raise CorruptIndex("empty file")
            try:
                manifest = json.loads(header)
            except json.JSONDecodeError as exc:
                raise CorruptIndex(f"bad manifest line: {exc}") from exc
            if not isinstance(manifest, dict) or manifest.get("format") != INDEX_FORMAT:
                raise CorruptIndex("not an index file (missing format marker)")
            if manifest.get("version") != INDEX_VERSION:
                raise VersionMismatch(manifest.get("version"))
            try:
                dim = int(manifest["dim"])
                count = int(manifest["count"])
            except (KeyError, TypeError, ValueError) as exc:
                raise CorruptIndex(f"bad manifest fields: {exc}") from exc

            index = cls(dim=dim)
            for lineno, line in enumerate(fh, start=2):
                if not line.endswith("\n") and lineno - 1 <= count:
                    raise CorruptIndex(f"truncated record at line {lineno}")
                if not line.strip():
                    continue
                try:
                    snippet = KnowledgeSnippet.from_record(json.loads(line))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise CorruptIndex(f"bad record at line {lineno}: {exc}") from exc
                index.add(snippet)
        if len(index) != count:
            raise CorruptIndex(f"manifest promises {count} snippets, file has {len(index)}")
        return index


def build_index(snippets: Iterable[KnowledgeSnippet], dim: int = 1536) -> VectorIndex:
    index = VectorIndex(dim=dim)
    for snippet in snippets:
        index.add(snippet)
    return index


def index_add(index: VectorIndex, snippet: KnowledgeSnippet) -> VectorIndex:
    index.add(snippet)
    return index


def save_index(index: VectorIndex, path: str | Path) -> None:
    index.save(path)


def load_index(path: str | Path) -> VectorIndex:
    return VectorIndex.load(path)
