"""Vector retrieval over corpus chunks.

The index is exact (flat cosine search; corpus scale never justifies an
approximate structure) and persists as line-delimited JSON: one header
line recording dimension and embedder identity, then one entry per line
with the vector as a decimal array, so files are diffable and portable.

The default embedder is fully offline and deterministic: character
trigrams hashed into a signed 256-bin histogram, L2-normalized. It is not
a semantic model, but it gives stable, meaningful-enough similarity for
tests and demos with zero network dependence; any remote embedder can be
swapped in and is recorded by id so queries always use the same one.
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Protocol, Sequence

import numpy as np
import requests

from .charts import StoreWriteFailed
from .corpus import Chunk
from .llm import UpstreamError

__all__ = [
    "DEFAULT_CONTEXT_BUDGET",
    "DEFAULT_K",
    "EmbedderMismatch",
    "EmptyInput",
    "HttpEmbedder",
    "SearchHit",
    "TrigramEmbedder",
    "VectorIndex",
    "assemble_context",
    "build_index",
    "load_index",
    "save_index",
    "score_all",
    "search",
]

DEFAULT_K = 5
DEFAULT_CONTEXT_BUDGET = 4000


class EmptyInput(ValueError):
    pass


class EmbedderMismatch(ValueError):
    pass


class Embedder(Protocol):
    embedder_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class TrigramEmbedder:
    embedder_id = "trigram-crc32-256"
    dim = 256

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise EmptyInput("nothing to embed")
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            s = text.lower()
            grams = [s[j : j + 3] for j in range(len(s) - 2)] or [s]
            row = out[i]
            for gram in grams:
                h = zlib.crc32(gram.encode("utf-8"))
                row[h % self.dim] += -1.0 if h & 0x80000000 else 1.0
            norm = float(np.linalg.norm(row))
            if norm > 0.0:
                row /= norm
            else:
                row[0] = 1.0  # signs cancelled exactly; keep unit norm
        return out


class HttpEmbedder:
    """Single-batch client for a remote embeddings endpoint."""

    def __init__(self, base_url: str, model: str, dim: int, api_key: str | None = None, timeout: float = 60.0):
        self._url = base_url.rstrip("/") + "/embeddings"
        self._model = model
        self.dim = dim
        self.embedder_id = f"http:{model}"
        self._api_key = api_key
        self._timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise EmptyInput("nothing to embed")
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = requests.post(
                self._url,
                json={"model": self._model, "input": list(texts)},
                headers=headers,
                timeout=self._timeout,
            )
            resp.raise_for_status()
            rows = [item["embedding"] for item in resp.json()["data"]]
        except (requests.RequestException, ValueError, KeyError, TypeError) as err:
            raise UpstreamError(f"embedding backend failure: {err}") from err
        out = np.asarray(rows, dtype=np.float64)
        if out.shape != (len(texts), self.dim):
            raise UpstreamError(f"expected {(len(texts), self.dim)} embeddings, got {out.shape}")
        return out


class SearchHit(NamedTuple):
    chunk_id: str
    score: float
    rank: int


@dataclass
class VectorIndex:
    embedder_id: str
    dim: int
    chunk_ids: list[str]
    sources: list[tuple[str, str]]  # (source_doc, source_kind) per entry
    matrix: np.ndarray  # (n, dim)

    def __post_init__(self):
        n = len(self.chunk_ids)
        if self.matrix.shape != (n, self.dim) or len(self.sources) != n:
            raise ValueError("index arrays disagree on entry count")
        self._norms = np.linalg.norm(self.matrix, axis=1)
        self._norms[self._norms == 0.0] = 1.0

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.embedder_id == other.embedder_id
            and self.dim == other.dim
            and self.chunk_ids == other.chunk_ids
            and self.sources == other.sources
            and np.array_equal(self.matrix, other.matrix)
        )


def build_index(
    chunks: Sequence[Chunk], embedder: Embedder, path: str | Path | None = None
) -> VectorIndex:
    """Embed all chunks into one index; persists it when a path is given."""
    if not chunks:
        raise EmptyInput("no chunks to index")
    matrix = embedder.embed([c.text for c in chunks])
    index = VectorIndex(
        embedder_id=embedder.embedder_id,
        dim=embedder.dim,
        chunk_ids=[c.chunk_id for c in chunks],
        sources=[(c.source_doc, c.source_kind) for c in chunks],
        matrix=matrix,
    )
    if path is not None:
        save_index(index, path)
    return index


_FORMAT_KIND = "vector-index"
_FORMAT_VERSION = 1


def save_index(index: VectorIndex, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "kind": _FORMAT_KIND,
                        "version": _FORMAT_VERSION,
                        "dim": index.dim,
                        "embedder_id": index.embedder_id,
                    }
                )
                + "\n"
            )
            for cid, (doc, kind), row in zip(
                index.chunk_ids, index.sources, index.matrix
            ):
                fh.write(
                    json.dumps(
                        {
                            "chunk_id": cid,
                            "source_doc": doc,
                            "source_kind": kind,
                            "vector": row.tolist(),
                        }
                    )
                    + "\n"
                )
        os.replace(tmp, path)
    except OSError as err:
        raise StoreWriteFailed(f"cannot write index: {err}") from err


def load_index(path: str | Path) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != _FORMAT_KIND or header.get("version") != _FORMAT_VERSION:
            raise ValueError(f"{path}: not a recognized vector-index file")
        dim = int(header["dim"])
        ids: list[str] = []
        sources: list[tuple[str, str]] = []
        rows: list[list[float]] = []
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            vec = entry["vector"]
            if len(vec) != dim:
                raise ValueError(f"{path}: entry {entry['chunk_id']} has wrong dimension")
            ids.append(entry["chunk_id"])
            sources.append((entry["source_doc"], entry["source_kind"]))
            rows.append(vec)
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, dim))
    return VectorIndex(header["embedder_id"], dim, ids, sources, matrix)


def score_all(index: VectorIndex, query: str, embedder: Embedder) -> np.ndarray:
    """Cosine similarity of the query against every entry, in entry order."""
    if embedder.embedder_id != index.embedder_id:
        raise EmbedderMismatch(
            f"index built with {index.embedder_id!r}, queried with {embedder.embedder_id!r}"
        )
    q = embedder.embed([query])[0]
    qnorm = float(np.linalg.norm(q)) or 1.0
    return (index.matrix @ q) / (index._norms * qnorm)


def search(
    index: VectorIndex, query: str, k: int, embedder: Embedder
) -> list[SearchHit]:
    """Exact top-k by cosine similarity; ties break on chunk_id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = score_all(index, query, embedder)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunk_ids[i]))
    return [
        SearchHit(index.chunk_ids[i], float(scores[i]), rank)
        for rank, i in enumerate(order[:k], start=1)
    ]


def assemble_context(
    hits: Sequence[SearchHit],
    chunks: Mapping[str, Chunk],
    budget: int = DEFAULT_CONTEXT_BUDGET,
) -> str:
    """Concatenate hit chunks in rank order with source attribution.

    Whole chunks only: assembly stops at the first block that would push
    the output past `budget` characters.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    parts: list[str] = []
    used = 0
    for hit in hits:
        chunk = chunks[hit.chunk_id]
        block = (
            f"[{hit.rank}] ({chunk.source_kind}: {chunk.source_doc})\n{chunk.text}"
        )
        cost = len(block) + (2 if parts else 0)
        if used + cost > budget:
            break
        parts.append(block)
        used += cost
    return "\n\n".join(parts)
