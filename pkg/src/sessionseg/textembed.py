"""Text embedding providers for item titles and brands.

The production-quality vectors come from a precomputed file exported by
any external embedding model; the hashed character-n-gram provider is a
deterministic offline stand-in so the full pipeline runs with no network
dependency.  Every provider is total: any input text yields a vector.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable

import numpy as np

from sessionseg.corpus import Item
from sessionseg.fileio import FileFormatError, format_float, read_header, write_header

FIELDS = ("title", "brand")
DEFAULT_DIM = 256


class TextEmbeddingProvider:
    """Base provider: maps (item, field) to a vector of fixed dim."""

    name: str
    dim: int

    def embed_text(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_field(self, item: Item, field: str) -> np.ndarray:
        """Vector for one display field, cached by (item id, field)."""
        if field not in FIELDS:
            raise ValueError(f"unknown field {field!r}, expected one of {FIELDS}")
        key = (item.id, field)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        vec = self._field_vector(item, field)
        # setdefault keeps the first inserted vector under concurrent use
        return self._cache.setdefault(key, vec)

    def _field_vector(self, item: Item, field: str) -> np.ndarray:
        return self.embed_text(getattr(item, field))

    def __init__(self) -> None:
        self._cache: dict[tuple[str, str], np.ndarray] = {}


def _ngrams(text: str, sizes: Iterable[int] = (2, 3)) -> list[str]:
    grams = []
    for n in sizes:
        grams.extend(text[i : i + n] for i in range(len(text) - n + 1))
    return grams


class HashedNgramProvider(TextEmbeddingProvider):
    """Character n-grams (n = 2, 3) hashed into sign buckets, L2-normalized.

    Empty text maps to the zero vector; downstream cosine against it is
    defined as 0.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0) -> None:
        super().__init__()
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.name = "hashed-ngram"
        self.dim = dim
        self.seed = seed

    def embed_text(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        if not text:
            return vec
        for gram in _ngrams(text):
            digest = hashlib.blake2b(
                gram.encode("utf-8"), digest_size=8, salt=str(self.seed).encode()
            ).digest()
            h = int.from_bytes(digest, "little")
            bucket = (h >> 1) % self.dim
            sign = 1.0 if h & 1 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


class PrecomputedProvider(TextEmbeddingProvider):
    """File-backed vectors with fallback for unknown (item, field) keys."""

    def __init__(
        self,
        vectors: dict[tuple[str, str], np.ndarray],
        dim: int,
        fallback: TextEmbeddingProvider | None = None,
    ) -> None:
        super().__init__()
        self.name = "precomputed-file"
        self.dim = dim
        self.vectors = vectors
        self.fallback = fallback if fallback is not None else HashedNgramProvider(dim)
        if self.fallback.dim != dim:
            raise FileFormatError(
                f"fallback dim {self.fallback.dim} != precomputed dim {dim}"
            )

    def embed_text(self, text: str) -> np.ndarray:
        return self.fallback.embed_text(text)

    def _field_vector(self, item: Item, field: str) -> np.ndarray:
        stored = self.vectors.get((item.id, field))
        if stored is not None:
            return stored
        return self.fallback.embed_text(getattr(item, field))


def load_precomputed(
    path: str | Path, fallback: TextEmbeddingProvider | None = None
) -> PrecomputedProvider:
    """Load a precomputed-vector file; all rows must share one dim.

    Format: a header line, then one tab-separated record per line:
    ``item_id<TAB>field<TAB>v1 v2 ... vd``.
    """
    vectors: dict[tuple[str, str], np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        meta = read_header(fh, "text-vectors", 1)
        dim = int(meta.get("dim", 0))
        if dim < 1:
            raise FileFormatError(f"{path}: header dim must be >= 1")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FileFormatError(f"{path}:{lineno}: expected 3 tab fields")
            item_id, field, raw = parts
            if field not in FIELDS:
                raise FileFormatError(f"{path}:{lineno}: unknown field {field!r}")
            values = np.array([float(tok) for tok in raw.split()], dtype=np.float64)
            if values.shape[0] != dim:
                raise FileFormatError(
                    f"{path}:{lineno}: vector length {values.shape[0]} != dim {dim}"
                )
            vectors[(item_id, field)] = values
    return PrecomputedProvider(vectors, dim, fallback)


def save_precomputed(
    path: str | Path, vectors: dict[tuple[str, str], np.ndarray], dim: int
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "text-vectors", 1, {"dim": dim, "count": len(vectors)})
        for (item_id, field), vec in vectors.items():
            if vec.shape[0] != dim:
                raise FileFormatError(
                    f"vector for ({item_id}, {field}) has length "
                    f"{vec.shape[0]}, expected {dim}"
                )
            fh.write(f"{item_id}\t{field}\t{' '.join(format_float(v) for v in vec)}\n")
