"""Word-vector-averaging baseline.

Reads the standard one-entry-per-line text format ("word v1 v2 ... vd"),
tokenizes on whitespace, and averages the vectors of a sentence's tokens.
Out-of-vocabulary tokens contribute a zero vector inside the mean, so the
divisor counts every token; ``count_oov=False`` switches to averaging over
found tokens only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptyInputError, FormatError


@dataclass
class WordVectorTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)


def load_word_vectors(lines: Iterable[str]) -> WordVectorTable:
    """Parse word-vector text lines; the first line fixes the dimension.

    Words are lowercased; a repeated word overwrites its earlier entry.
    Raises FormatError carrying the 1-based line number on a width mismatch
    or an unparsable float.
    """
    dim: int | None = None
    vectors: dict[str, np.ndarray] = {}
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0].lower()
        values = parts[1:]
        if dim is None:
            if not values:
                raise FormatError("entry has no vector components", line=lineno)
            dim = len(values)
        elif len(values) != dim:
            raise FormatError(
                f"entry has {len(values)} components, expected {dim}", line=lineno
            )
        try:
            vec = np.array([float(x) for x in values], dtype=np.float64)
        except ValueError:
            raise FormatError("unparsable vector component", line=lineno) from None
        vectors[word] = vec
    if dim is None:
        raise EmptyInputError("word-vector stream contains no entries")
    return WordVectorTable(dim=dim, vectors=vectors)


def load_word_vectors_file(path: str) -> WordVectorTable:
    with open(path, "r", encoding="utf-8") as fh:
        return load_word_vectors(fh)


def tokenize_whitespace(text: str) -> list[str]:
    """Lowercased tokens split on runs of whitespace; empty text gives []."""
    return text.lower().split()


def embed_sentence_avg(table: WordVectorTable, text: str, count_oov: bool = True) -> np.ndarray:
    """Mean word vector of the sentence.

    Unknown words count as zero vectors.  A sentence with no tokens (or,
    with count_oov=False, no known tokens) comes back as the zero vector;
    downstream cosine similarity raises ZeroVectorError on it.
    """
    tokens = tokenize_whitespace(text)
    total = np.zeros(table.dim)
    found = 0
    for tok in tokens:
        vec = table.vectors.get(tok)
        if vec is not None:
            total += vec
            found += 1
    divisor = len(tokens) if count_oov else found
    if divisor == 0:
        return total
    return total / divisor
