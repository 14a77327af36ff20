"""Per-subject stimulus data: loading, trial averaging, voxel stability, z-scoring.

Canonical on-disk formats:

* word list: CSV with header ``word,category,subsets``, one row per stimulus
  word; ``subsets`` is a ``;``-separated list of named-subset memberships,
  possibly empty.
* subject file: TSV whose first line is ``#neurodecode-subject v1``, second
  line ``subject=<id>\\tvoxels=<V>\\tpresentations=<P>``, optional third line
  ``coords=<path>`` pointing at a TSV of ``x y z`` grid coordinates (one row
  per voxel, relative to the subject file), then one row per trial:
  ``word \\t presentation \\t v0 ... v{V-1}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, VocabularyError

SUBJECT_MAGIC = "#neurodecode-subject v1"

# Columns whose spread across words is below this relative level are treated
# as zero-variance when scoring stability.
_ZERO_VAR_REL = 1e-12

_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class StimulusVocabulary:
    """Ordered stimulus words with category labels and named subsets."""

    words: tuple[str, ...]
    categories: dict[str, str]
    subsets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        for w in self.words:
            if not w or w != w.lower():
                raise ValueError(f"word identifiers must be lowercase and nonempty: {w!r}")
        if set(self.categories) != set(self.words):
            raise ValueError("every word needs exactly one category")
        known = set(self.words)
        for name, members in self.subsets.items():
            unknown = [m for m in members if m not in known]
            if unknown:
                raise ValueError(f"subset {name!r} contains unknown words: {unknown}")

    def __len__(self) -> int:
        return len(self.words)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise VocabularyError(f"unknown word: {word!r}") from None

    def subset_words(self, name: str | None) -> tuple[str, ...]:
        """Words of a named subset, or all words when ``name`` is None."""
        if name is None:
            return self.words
        if name not in self.subsets:
            raise VocabularyError(f"unknown subset: {name!r}")
        return self.subsets[name]


@dataclass(frozen=True)
class SubjectDataset:
    """All trials for one participant.

    ``trials`` is T x V (trial by voxel), ``trial_word`` holds vocabulary
    indices and ``trial_presentation`` 0-based presentation indices. Every
    word present appears with the same number of presentations P.
    """

    subject_id: str
    trials: np.ndarray
    trial_word: np.ndarray
    trial_presentation: np.ndarray
    voxel_coords: np.ndarray | None = None

    def __post_init__(self) -> None:
        t, v = self.trials.shape
        if v < 1:
            raise ValueError("dataset needs at least one voxel")
        if len(self.trial_word) != t or len(self.trial_presentation) != t:
            raise ValueError("trial label lengths do not match trial count")
        if not np.all(np.isfinite(self.trials)):
            raise ValueError("non-finite activation values")
        pairs = list(zip(self.trial_word.tolist(), self.trial_presentation.tolist()))
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate (word, presentation) trial")
        counts = {}
        for w in self.trial_word.tolist():
            counts[w] = counts.get(w, 0) + 1
        if len(set(counts.values())) > 1:
            raise ValueError("words differ in presentation count")
        if self.voxel_coords is not None and self.voxel_coords.shape != (v, 3):
            raise ValueError("voxel_coords must be V x 3")

    @property
    def n_voxels(self) -> int:
        return self.trials.shape[1]

    @property
    def presentations(self) -> int:
        return int(np.max(self.trial_presentation)) + 1 if len(self.trial_word) else 0

    @cached_property
    def words_present(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.trial_word.tolist())))

    @cached_property
    def _row_of(self) -> dict[tuple[int, int], int]:
        return {
            (int(w), int(p)): r
            for r, (w, p) in enumerate(zip(self.trial_word, self.trial_presentation))
        }

    def trial_row(self, word_index: int, presentation: int) -> int:
        try:
            return self._row_of[(word_index, presentation)]
        except KeyError:
            raise VocabularyError(
                f"no trial for word index {word_index}, presentation {presentation}"
            ) from None


@dataclass(frozen=True)
class WordResponseMatrix:
    """Per-word mean activation: one row per word, averaged over presentations."""

    rows: np.ndarray
    word_order: np.ndarray


@dataclass(frozen=True)
class VoxelSelection:
    """The k highest-stability voxel column indices, ties broken by lower index."""

    indices: np.ndarray
    scores: np.ndarray
    k: int

    def __post_init__(self) -> None:
        if len(self.indices) != self.k:
            raise ValueError("selection size does not match k")
        if np.any(np.diff(self.indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if len(self.indices) and self.indices[-1] >= len(self.scores):
            raise ValueError("index out of range")


@dataclass(frozen=True)
class Standardizer:
    """Column means and stds; stds are floored at 1e-8 so apply never divides by zero."""

    means: np.ndarray
    stds: np.ndarray


def load_word_list(path: str | Path) -> StimulusVocabulary:
    """Read the word-list CSV into a vocabulary.

    Raises FormatError on duplicate words, malformed rows, or a bad header.
    """
    path = Path(path)
    words: list[str] = []
    categories: dict[str, str] = {}
    subset_members: dict[str, list[str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["word", "category", "subsets"]:
            raise FormatError(f"{path}: expected header 'word,category,subsets', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            word, category, subsets = row
            if word in categories:
                raise FormatError(f"{path}:{lineno}: duplicate word {word!r}")
            if not word or word != word.lower():
                raise FormatError(f"{path}:{lineno}: word must be lowercase and nonempty: {word!r}")
            if not category:
                raise FormatError(f"{path}:{lineno}: missing category for {word!r}")
            words.append(word)
            categories[word] = category
            for name in filter(None, subsets.split(";")):
                subset_members.setdefault(name, []).append(word)
    if not words:
        raise FormatError(f"{path}: no words")
    return StimulusVocabulary(
        words=tuple(words),
        categories=categories,
        subsets={name: tuple(ws) for name, ws in subset_members.items()},
    )


def write_word_list(vocab: StimulusVocabulary, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word,category,subsets\n")
        for w in vocab.words:
            names = ";".join(name for name, members in vocab.subsets.items() if w in members)
            fh.write(f"{w},{vocab.categories[w]},{names}\n")


def load_subject_dataset(path: str | Path, vocab: StimulusVocabulary) -> SubjectDataset:
    """Parse a canonical subject TSV.

    Values are parsed exactly as written (plain ``float``). Raises
    FormatError for structural problems and VocabularyError for trial words
    missing from ``vocab``.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != SUBJECT_MAGIC:
        raise FormatError(f"{path}: missing '{SUBJECT_MAGIC}' header line")
    if len(lines) < 2:
        raise FormatError(f"{path}: missing subject metadata line")
    meta = _parse_meta(path, lines[1])
    try:
        subject_id = meta["subject"]
        n_voxels = int(meta["voxels"])
        n_pres = int(meta["presentations"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad metadata line: {exc}") from None
    if n_voxels < 1 or n_pres < 1:
        raise FormatError(f"{path}: voxels and presentations must be positive")

    body_start = 2
    coords = None
    if len(lines) > 2 and lines[2].startswith("coords="):
        coords_path = path.parent / lines[2][len("coords="):]
        coords = _load_coords(coords_path, n_voxels)
        body_start = 3

    rows: list[np.ndarray] = []
    trial_word: list[int] = []
    trial_pres: list[int] = []
    seen: set[tuple[int, int]] = set()
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2 + n_voxels:
            raise FormatError(
                f"{path}:{lineno}: expected {2 + n_voxels} fields, got {len(parts)}"
            )
        word, pres_str = parts[0], parts[1]
        if word not in vocab.categories:
            raise VocabularyError(f"{path}:{lineno}: unknown word {word!r}")
        try:
            pres = int(pres_str)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad presentation index {pres_str!r}") from None
        if not 0 <= pres < n_pres:
            raise FormatError(f"{path}:{lineno}: presentation {pres} outside 0..{n_pres - 1}")
        widx = vocab.index(word)
        if (widx, pres) in seen:
            raise FormatError(f"{path}:{lineno}: duplicate trial for {word!r} presentation {pres}")
        seen.add((widx, pres))
        try:
            values = np.array([float(x) for x in parts[2:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad value: {exc}") from None
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}:{lineno}: non-finite activation value")
        rows.append(values)
        trial_word.append(widx)
        trial_pres.append(pres)

    if not rows:
        raise FormatError(f"{path}: no trials")
    word_counts: dict[int, int] = {}
    for w in trial_word:
        word_counts[w] = word_counts.get(w, 0) + 1
    short = {w: c for w, c in word_counts.items() if c != n_pres}
    if short:
        names = ", ".join(vocab.words[w] for w in sorted(short))
        raise FormatError(f"{path}: words with trial count != presentations={n_pres}: {names}")

    return SubjectDataset(
        subject_id=subject_id,
        trials=np.array(rows),
        trial_word=np.array(trial_word, dtype=np.int64),
        trial_presentation=np.array(trial_pres, dtype=np.int64),
        voxel_coords=coords,
    )


def _parse_meta(path: Path, line: str) -> dict[str, str]:
    fields = {}
    for kv in line.split("\t"):
        if "=" not in kv:
            raise FormatError(f"{path}: malformed metadata field {kv!r}")
        key, value = kv.split("=", 1)
        fields[key] = value
    return fields


def _load_coords(path: Path, n_voxels: int) -> np.ndarray:
    if not path.exists():
        raise FormatError(f"coordinate file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        rows = [line.split() for line in fh.read().splitlines() if line]
    if len(rows) != n_voxels:
        raise FormatError(f"{path}: expected {n_voxels} coordinate rows, got {len(rows)}")
    try:
        coords = np.array([[int(x) for x in row] for row in rows], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: bad coordinate: {exc}") from None
    if coords.shape != (n_voxels, 3):
        raise FormatError(f"{path}: coordinate rows must have 3 entries")
    return coords


def write_subject_dataset(
    ds: SubjectDataset, path: str | Path, vocab: StimulusVocabulary
) -> None:
    """Write a dataset in the canonical TSV format (full float round trip)."""
    path = Path(path)
    n_pres = ds.presentations
    lines = [SUBJECT_MAGIC]
    lines.append(f"subject={ds.subject_id}\tvoxels={ds.n_voxels}\tpresentations={n_pres}")
    coords_name = None
    if ds.voxel_coords is not None:
        coords_name = path.stem + "_coords.tsv"
        lines.append(f"coords={coords_name}")
    for r in range(ds.trials.shape[0]):
        word = vocab.words[int(ds.trial_word[r])]
        values = "\t".join(repr(float(x)) for x in ds.trials[r])
        lines.append(f"{word}\t{int(ds.trial_presentation[r])}\t{values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if coords_name is not None:
        coord_lines = [
            "\t".join(str(int(x)) for x in row) for row in ds.voxel_coords
        ]
        (path.parent / coords_name).write_text(
            "\n".join(coord_lines) + "\n", encoding="utf-8", newline="\n"
        )


def average_presentations(ds: SubjectDataset, words: Sequence[int]) -> WordResponseMatrix:
    """Mean activation per word over its presentations, rows in ``words`` order."""
    words = [int(w) for w in words]
    n_pres = ds.presentations
    rows = np.empty((len(words), ds.n_voxels))
    for i, w in enumerate(words):
        trial_rows = [ds.trial_row(w, p) for p in range(n_pres)]
        rows[i] = ds.trials[trial_rows].mean(axis=0)
    return WordResponseMatrix(rows=rows, word_order=np.array(words, dtype=np.int64))


def response_tensor(ds: SubjectDataset, words: Sequence[int]) -> np.ndarray:
    """P x W x V activation tensor for the given words."""
    words = [int(w) for w in words]
    n_pres = ds.presentations
    out = np.empty((n_pres, len(words), ds.n_voxels))
    for i, w in enumerate(words):
        for p in range(n_pres):
            out[p, i] = ds.trials[ds.trial_row(w, p)]
    return out


def compute_stability_scores(ds: SubjectDataset, training_words: Sequence[int]) -> np.ndarray:
    """Per-voxel stability: mean cross-presentation Pearson correlation.

    For every unordered presentation pair (a, b), correlate voxel v's
    response profile over ``training_words`` under presentation a with the
    profile under presentation b, then average over pairs. Voxels whose
    profile has zero variance under any presentation score -1 so they are
    never selected.
    """
    training_words = list(training_words)
    if len(training_words) < 2:
        raise ValueError("need at least 2 training words for stability scoring")
    if ds.presentations < 2:
        raise ValueError("need at least 2 presentations for stability scoring")
    tensor = response_tensor(ds, training_words)  # P x W x V
    n_pres, n_words, n_vox = tensor.shape
    centered = tensor - tensor.mean(axis=1, keepdims=True)
    sq = (centered**2).sum(axis=1)  # P x V
    raw_sq = (tensor**2).sum(axis=1)
    # Relative zero-variance cutoff: spread below _ZERO_VAR_REL of the raw
    # magnitude counts as constant (sq > rel^2 * raw_sq  <=>  std > rel * rms).
    var_floor = (_ZERO_VAR_REL**2) * raw_sq
    degenerate = np.zeros(n_vox, dtype=bool)
    corr_sum = np.zeros(n_vox)
    n_pairs = 0
    for a in range(n_pres):
        for b in range(a + 1, n_pres):
            n_pairs += 1
            cov = (centered[a] * centered[b]).sum(axis=0)
            good = (sq[a] > var_floor[a]) & (sq[b] > var_floor[b])
            degenerate |= ~good
            denom = np.sqrt(np.maximum(sq[a], 1e-300) * np.maximum(sq[b], 1e-300))
            corr_sum += np.divide(cov, denom, out=np.zeros_like(cov), where=good)
    scores = corr_sum / n_pairs
    scores[degenerate] = -1.0
    return np.clip(scores, -1.0, 1.0)


class StabilityAccumulator:
    """Incremental stability scores for leave-two-out folds.

    Keeps per-presentation-pair running sums (values, squares, cross
    products) over the full word set, so excluding a fold's two held-out
    words costs O(V * P^2) instead of a recomputation over all words.
    Correlations are computed on mean-shifted values (shift invariant).
    """

    def __init__(self, ds: SubjectDataset, words: Sequence[int]):
        tensor = response_tensor(ds, words)
        if tensor.shape[0] < 2:
            raise ValueError("need at least 2 presentations for stability scoring")
        self._raw_sq = (tensor**2).sum(axis=1)  # P x V
        self._raw_sq_w = tensor**2  # P x W x V, for excluding words
        self._shifted = tensor - tensor.mean(axis=1, keepdims=True)
        self._n_words = tensor.shape[1]
        self._sum = self._shifted.sum(axis=1)  # P x V
        self._sumsq = (self._shifted**2).sum(axis=1)
        n_pres = tensor.shape[0]
        self._pairs = [(a, b) for a in range(n_pres) for b in range(a + 1, n_pres)]
        self._cross = np.stack(
            [(self._shifted[a] * self._shifted[b]).sum(axis=0) for a, b in self._pairs]
        )

    def scores_excluding(self, i: int, j: int) -> np.ndarray:
        """Scores over all words except the two at positions ``i`` and ``j``."""
        if i == j:
            raise ValueError("held-out positions must differ")
        xi = self._shifted[:, i, :]
        xj = self._shifted[:, j, :]
        n = self._n_words - 2
        if n < 2:
            raise ValueError("need at least 2 remaining training words")
        s = self._sum - xi - xj
        q = self._sumsq - xi**2 - xj**2
        raw = self._raw_sq - self._raw_sq_w[:, i, :] - self._raw_sq_w[:, j, :]
        # var_a below equals n^2 * sigma^2; the cutoff matches
        # compute_stability_scores (std > _ZERO_VAR_REL * rms).
        var_floor = n * (_ZERO_VAR_REL**2) * raw
        n_vox = s.shape[1]
        degenerate = np.zeros(n_vox, dtype=bool)
        corr_sum = np.zeros(n_vox)
        for k, (a, b) in enumerate(self._pairs):
            cross = self._cross[k] - xi[a] * xi[b] - xj[a] * xj[b]
            var_a = n * q[a] - s[a] ** 2
            var_b = n * q[b] - s[b] ** 2
            cov = n * cross - s[a] * s[b]
            good = (var_a > var_floor[a]) & (var_b > var_floor[b])
            degenerate |= ~good
            denom = np.sqrt(np.maximum(var_a, 1e-300) * np.maximum(var_b, 1e-300))
            corr_sum += np.divide(cov, denom, out=np.zeros_like(cov), where=good)
        scores = corr_sum / len(self._pairs)
        scores[degenerate] = -1.0
        return np.clip(scores, -1.0, 1.0)


def select_top_voxels(scores: np.ndarray, k: int) -> VoxelSelection:
    """The k highest-scoring voxels; ties go to the lower column index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 1 <= k <= len(scores):
        raise ValueError(f"k must be in 1..{len(scores)}, got {k}")
    order = np.argsort(-scores, kind="stable")
    chosen = np.sort(order[:k])
    return VoxelSelection(indices=chosen, scores=scores, k=k)


def fit_standardizer(rows: np.ndarray) -> Standardizer:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] < 2:
        raise ValueError("standardizer needs at least 2 rows")
    stds = rows.std(axis=0)
    return Standardizer(means=rows.mean(axis=0), stds=np.maximum(stds, _STD_FLOOR))


def apply_standardizer(s: Standardizer, rows: np.ndarray) -> np.ndarray:
    return (np.asarray(rows, dtype=np.float64) - s.means) / s.stds


def invert_standardizer(s: Standardizer, rows: np.ndarray) -> np.ndarray:
    return np.asarray(rows, dtype=np.float64) * s.stds + s.means
