"""Retrieval support: chunking, deterministic local embedding, cosine top-k.

The default embedder is a signed hashing n-gram model (unigrams + bigrams
into 256 buckets), which is fully deterministic and needs no network, so
ranking behavior is unit-testable.  A remote embedding endpoint stays
pluggable for fidelity.  The store is an in-memory list with a JSON
snapshot; at the corpus sizes this suite handles, a linear scan is plenty.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyQueryError

EMBEDDING_DIM = 256
DEFAULT_CHUNK_CHARS = 800
DEFAULT_OVERLAP_CHARS = 100
_SNAP_CHARS = 80

AUGMENT_HEADER = "Retrieved context:"
NO_CONTEXT_SENTINEL = "(no relevant context found)"


@dataclass(frozen=True)
class DocumentChunk:
    id: str
    source: str
    position: int
    text: str
    embedding: np.ndarray

    def __post_init__(self):
        if self.position < 0:
            raise ValueError("position must be >= 0")

    @property
    def searchable(self) -> bool:
        return bool(np.any(self.embedding))


class HashingNgramEmbedder:
    """Signed feature hashing over lowercase word unigrams and bigrams."""

    name = "hashing_ngram"

    def __init__(self, dim: int = EMBEDDING_DIM):
        self.dim = dim

    def _tokens(self, text: str) -> list[str]:
        words = text.lower().split()
        return words + [f"{a} {b}" for a, b in zip(words, words[1:])]

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in self._tokens(text):
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 else -1.0
            vec[(value >> 1) % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


class RemoteEmbedder:
    """POSTs ``{"input": text}`` to an embedding endpoint; result is normalized."""

    name = "remote"

    def __init__(self, endpoint_url: str, timeout_s: float = 30.0):
        self.endpoint_url = endpoint_url
        self.timeout_s = timeout_s
        self.dim = EMBEDDING_DIM

    def embed(self, text: str) -> np.ndarray:
        import httpx

        response = httpx.post(self.endpoint_url, json={"input": text}, timeout=self.timeout_s)
        response.raise_for_status()
        vec = np.asarray(response.json()["embedding"], dtype=np.float64)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def embed_text(text: str, embedder=None) -> np.ndarray:
    """Unit-norm embedding of ``text`` (zero vector for token-free text)."""
    return (embedder or HashingNgramEmbedder()).embed(text)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine over unit vectors; identical embeddings score exactly 1.0."""
    if not np.any(a) or not np.any(b):
        return 0.0
    if np.array_equal(a, b):
        return 1.0
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def chunk_document(text: str, chunk_chars: int = DEFAULT_CHUNK_CHARS,
                   overlap_chars: int = DEFAULT_OVERLAP_CHARS) -> list[str]:
    """Split text into ordered chunks that overlap by exactly
    ``overlap_chars`` (except the last), snapping each boundary back to the
    nearest whitespace within 80 chars when that keeps the chunk long
    enough to preserve coverage.

    Dropping the first ``overlap_chars`` characters of every chunk after
    the first reconstructs the source text exactly.
    """
    if not 0 <= overlap_chars < chunk_chars:
        raise ValueError("need 0 <= overlap_chars < chunk_chars")
    if not text:
        return []

    chunks = []
    pos = 0
    n = len(text)
    while True:
        end = min(pos + chunk_chars, n)
        if end < n:
            snapped = _snap_to_whitespace(text, pos, end, overlap_chars)
            if snapped is not None:
                end = snapped
        chunks.append(text[pos:end])
        if end >= n:
            return chunks
        pos = end - overlap_chars


def _snap_to_whitespace(text: str, start: int, end: int, overlap: int) -> int | None:
    floor = max(start + overlap + 1, end - _SNAP_CHARS)
    for i in range(end - 1, floor - 1, -1):
        if text[i].isspace():
            return i + 1
    return None


@dataclass
class VectorStore:
    chunks: list[DocumentChunk] = field(default_factory=list)
    embedder: object = field(default_factory=HashingNgramEmbedder)

    def add_document(self, source: str, text: str,
                     chunk_chars: int = DEFAULT_CHUNK_CHARS,
                     overlap_chars: int = DEFAULT_OVERLAP_CHARS) -> list[DocumentChunk]:
        """Chunk, embed, and index one document; returns the new chunks."""
        added = []
        for position, piece in enumerate(chunk_document(text, chunk_chars, overlap_chars)):
            chunk = DocumentChunk(
                id=f"{source}#{position}", source=source, position=position,
                text=piece, embedding=self.embedder.embed(piece))
            self.chunks.append(chunk)
            added.append(chunk)
        return added

    def ingest_dir(self, corpus_dir: str | Path, suffixes=(".txt", ".md")) -> int:
        """Index every plain-text/markdown file under a directory."""
        count = 0
        for path in sorted(Path(corpus_dir).rglob("*")):
            if path.is_file() and path.suffix.lower() in suffixes:
                self.add_document(path.name, path.read_text(encoding="utf-8"))
                count += 1
        return count

    def save(self, path: str | Path) -> None:
        doc = {
            "dim": getattr(self.embedder, "dim", EMBEDDING_DIM),
            "embedder": getattr(self.embedder, "name", "hashing_ngram"),
            "chunks": [
                {"id": c.id, "source": c.source, "position": c.position,
                 "text": c.text, "embedding": c.embedding.tolist()}
                for c in self.chunks
            ],
        }
        Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "VectorStore":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        store = cls()
        for raw in doc["chunks"]:
            store.chunks.append(DocumentChunk(
                id=raw["id"], source=raw["source"], position=raw["position"],
                text=raw["text"], embedding=np.asarray(raw["embedding"], dtype=np.float64)))
        return store


def search(store: VectorStore, query: str, k: int) -> list[tuple[DocumentChunk, float]]:
    """Top-k chunks by cosine score, nonincreasing; ties by (source, position)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query or not query.strip():
        raise EmptyQueryError("query must be non-empty")
    query_vec = embed_text(query, store.embedder)
    if not np.any(query_vec):
        raise EmptyQueryError("query has no indexable tokens")

    scored = [
        (chunk, cosine(query_vec, chunk.embedding))
        for chunk in store.chunks if chunk.searchable
    ]
    scored.sort(key=lambda cs: (-cs[1], cs[0].source, cs[0].position))
    return scored[:k]


def augment_prompt(store: VectorStore, query: str, top_k: int) -> str:
    """Byte-deterministic context block of the top-k hits with attributions."""
    hits = search(store, query, top_k)
    if not hits:
        return f"{AUGMENT_HEADER}\n{NO_CONTEXT_SENTINEL}"
    sections = [f"[{chunk.source}:{chunk.position}]\n{chunk.text}" for chunk, _ in hits]
    return AUGMENT_HEADER + "\n\n" + "\n\n".join(sections)
