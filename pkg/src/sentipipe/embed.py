"""Word vectors in the plain-text word2vec/fastText format.

The first line is ``<vocab_count> <dim>``; each following line is a token and
``dim`` space-separated floats.  Unknown tokens map to the zero vector.
"""

from __future__ import annotations

import hashlib
import logging
import warnings
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "MASK"
MARKER_TOKENS = ("url", "user", "hashtag", "email", "phone", "sad", "happy", "neutral")
SPECIAL_TOKENS = MARKER_TOKENS + (MASK, CLS, SEP, PAD, UNK)
# These resolve to zeros when the file does not define them.
ZERO_SPECIALS = (PAD, UNK)


class EmbeddingError(ValueError):
    pass


def special_vector(token: str, dim: int) -> np.ndarray:
    """Deterministic pseudo-random unit vector derived from the token string."""
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


class EmbeddingTable:
    """Immutable token -> vector map of fixed dimension."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray, add_specials: bool = True):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise EmbeddingError("vectors must be a (len(tokens), dim) matrix")
        if vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be positive")
        self.dim = int(vectors.shape[1])
        index: dict[str, int] = {}
        rows = []
        for tok, vec in zip(tokens, vectors):
            if tok in index:
                rows[index[tok]] = vec
            else:
                index[tok] = len(rows)
                rows.append(vec)
        self.n_base = len(rows)
        if add_specials:
            for tok in SPECIAL_TOKENS:
                if tok not in index:
                    index[tok] = len(rows)
                    rows.append(np.zeros(self.dim) if tok in ZERO_SPECIALS else special_vector(tok, self.dim))
        self.index = index
        self.tokens = tuple(index)
        self.vectors = np.array(rows, dtype=np.float64).reshape(len(rows), self.dim)
        self.vectors.setflags(write=False)
        self._zero = np.zeros(self.dim)
        self._zero.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def lookup(self, token: str) -> np.ndarray:
        i = self.index.get(token)
        return self._zero if i is None else self.vectors[i]

    def average(self, tokens: Iterable[str]) -> np.ndarray:
        return average_sentence(self, tokens)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such embedding file: {path}")
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}:1: expected '<vocab_count> <dim>' header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingError(f"{path}:1: non-integer header") from None
        if dim < 1:
            raise EmbeddingError(f"{path}:1: dimension must be positive")
        tokens: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").rstrip(" ").split(" ")
            if fields == [""]:
                continue
            if len(fields) != dim + 1:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim} values, got {len(fields) - 1}"
                )
            try:
                rows.append([float(x) for x in fields[1:]])
            except ValueError:
                raise EmbeddingError(f"{path}:{lineno}: non-numeric value") from None
            tok = fields[0]
            if tok in seen:
                warnings.warn(f"{path}:{lineno}: duplicate token {tok!r}, keeping the last vector")
            seen.add(tok)
            tokens.append(tok)
    if len(seen) != count:
        log.warning("%s: header declares %d tokens, found %d", path, count, len(seen))
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingTable(tokens, vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    lines = [f"{len(table)} {table.dim}"]
    for tok, vec in zip(table.tokens, table.vectors):
        lines.append(tok + " " + " ".join(repr(float(x)) for x in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    return table.lookup(token)


def average_sentence(table: EmbeddingTable, tokens: Iterable[str]) -> np.ndarray:
    tokens = list(tokens)
    if not tokens:
        return np.zeros(table.dim)
    total = np.zeros(table.dim)
    for tok in tokens:
        total += table.lookup(tok)
    return total / len(tokens)
