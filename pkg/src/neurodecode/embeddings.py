"""Pretrained word-vector tables: loading, stimulus lookup, linear mixing.

Two text formats are supported:

* ``headered-vec``: first line ``<count> <dim>``, then one word per line
  followed by ``dim`` space-separated floats.
* ``headerless-vec``: every line is ``<word> <f1> ... <fdim>``; the
  dimensionality is inferred from the first line and enforced after that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, VocabularyError

log = logging.getLogger(__name__)

FORMATS = ("headered-vec", "headerless-vec")

_Z_FLOOR = 1e-8


@dataclass(frozen=True)
class EmbeddingTable:
    """word -> vector mapping with a declared dimensionality."""

    model_name: str
    dim: int
    entries: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        for word, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {word!r} has length {len(vec)}, expected {self.dim}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"non-finite vector entry for {word!r}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Vectors stacked in a fixed word order."""

    rows: np.ndarray
    source_model: str


def load_embedding_table(path: str | Path, format: str, model_name: str) -> EmbeddingTable:
    """Parse a word-vector text file.

    Duplicate words keep the last occurrence; the number of replaced entries
    is logged as a warning. Inconsistent vector lengths and empty files are
    format errors.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    expected_count = None
    dim = None
    if format == "headered-vec":
        if not lines:
            raise FormatError(f"{path}: empty file")
        head = lines[0].split()
        if len(head) != 2:
            raise FormatError(f"{path}: header must be '<count> <dim>'")
        try:
            expected_count, dim = int(head[0]), int(head[1])
        except ValueError:
            raise FormatError(f"{path}: non-integer header fields") from None
        if dim < 1:
            raise FormatError(f"{path}: dim must be positive")
        lines = lines[1:]
        if len(lines) != expected_count:
            raise FormatError(f"{path}: header declares {expected_count} rows, found {len(lines)}")
    if not lines:
        raise FormatError(f"{path}: no vector rows")

    entries: dict[str, np.ndarray] = {}
    duplicates = 0
    for lineno, line in enumerate(lines, start=1 if format == "headerless-vec" else 2):
        parts = line.split()
        word = parts[0]
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise FormatError(f"{path}:{lineno}: first row has no vector values")
        if len(parts) - 1 != dim:
            raise FormatError(
                f"{path}:{lineno}: vector length {len(parts) - 1} does not match dim {dim}"
            )
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad value: {exc}") from None
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"{path}:{lineno}: non-finite vector entry")
        if word in entries:
            duplicates += 1
        entries[word] = vec
    if duplicates:
        log.warning("%s: %d duplicate words, keeping the last occurrence of each", path, duplicates)
    return EmbeddingTable(model_name=model_name, dim=int(dim), entries=entries)


def write_embedding_table(table: EmbeddingTable, path: str | Path, format: str = "headered-vec") -> None:
    """Write a table in one of the supported text formats (full float round trip)."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")
    path = Path(path)
    lines = []
    if format == "headered-vec":
        lines.append(f"{len(table.entries)} {table.dim}")
    for word, vec in table.entries.items():
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def lookup_matrix(table: EmbeddingTable, words: Sequence[str]) -> EmbeddingMatrix:
    """Stack the vectors for ``words`` in order; missing words are a hard error."""
    missing = [w for w in words if w not in table.entries]
    if missing:
        raise VocabularyError(
            f"model {table.model_name!r} is missing {len(missing)} words: {', '.join(missing)}"
        )
    rows = np.stack([table.entries[w] for w in words]) if words else np.empty((0, table.dim))
    return EmbeddingMatrix(rows=rows, source_model=table.model_name)


def combine_tables(
    a: EmbeddingTable,
    b: EmbeddingTable,
    method: str = "concat",
    alpha: float | None = None,
) -> EmbeddingTable:
    """Mix two embedding spaces into one table over their shared vocabulary.

    Each block is z-scored per dimension over the shared words, then
    concatenated. ``weighted-concat`` additionally scales the z-scored
    blocks by ``alpha`` and ``1 - alpha``.
    """
    if method not in ("concat", "weighted-concat"):
        raise ValueError(f"unknown combination method {method!r}")
    if method == "weighted-concat":
        if alpha is None or not 0.0 <= alpha <= 1.0:
            raise ValueError("weighted-concat needs alpha in [0, 1]")
        weights = (alpha, 1.0 - alpha)
        name = f"{a.model_name}+{b.model_name}:weighted-concat(alpha={alpha})"
    else:
        weights = (1.0, 1.0)
        name = f"{a.model_name}+{b.model_name}:concat"
    shared = [w for w in a.entries if w in b.entries]
    if not shared:
        raise ValueError(
            f"models {a.model_name!r} and {b.model_name!r} share no vocabulary"
        )
    block_a = _zscore_block(np.stack([a.entries[w] for w in shared])) * weights[0]
    block_b = _zscore_block(np.stack([b.entries[w] for w in shared])) * weights[1]
    rows = np.concatenate([block_a, block_b], axis=1)
    return EmbeddingTable(
        model_name=name,
        dim=a.dim + b.dim,
        entries={w: rows[i] for i, w in enumerate(shared)},
    )


def _zscore_block(rows: np.ndarray) -> np.ndarray:
    stds = np.maximum(rows.std(axis=0), _Z_FLOOR)
    return (rows - rows.mean(axis=0)) / stds
