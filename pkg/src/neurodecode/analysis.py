"""Post-hoc error analysis of completed leave-two-out runs.

Mismatch matrices record which word pairs a model failed to discriminate;
overlap reports compare error sets (or top-voxel sets) between two models;
voxel predictability ranks voxels by how well their held-out predictions
track the measured responses across words.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FormatError
from .evaluation import WORD_TO_BRAIN, EvalResult


@dataclass(frozen=True)
class MismatchMatrix:
    """Symmetric word x word pair-discrimination failures.

    Binary for a single subject, fractional after averaging over subjects.
    """

    values: np.ndarray
    word_order: tuple[str, ...]
    model_name: str
    subjects: tuple[str, ...]

    def __post_init__(self) -> None:
        w = len(self.word_order)
        if self.values.shape != (w, w):
            raise ValueError("matrix shape must match word count")
        if np.any(np.diagonal(self.values) != 0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(self.values, self.values.T):
            raise ValueError("matrix must be symmetric")

    @property
    def error_mass(self) -> float:
        """Number of error pairs (sum of upper triangle)."""
        return float(self.values.sum() / 2.0)


@dataclass(frozen=True)
class OverlapReport:
    """Partition of two models' error items; jaccard of 0/0 is defined as 1."""

    common: tuple
    only_a: tuple
    only_b: tuple
    jaccard: float


@dataclass(frozen=True)
class VoxelPredictability:
    """Per-voxel correlation between averaged held-out predictions and truth.

    NaN marks voxels never selected (or with fewer than 2 contributing
    words); they are excluded from top-k rankings.
    """

    scores: np.ndarray
    model_name: str
    subject_id: str


def mismatch_matrix(result: EvalResult) -> MismatchMatrix:
    """Entry (i, j) is 1 iff the fold holding out words i and j was incorrect."""
    w = len(result.words)
    values = np.zeros((w, w))
    for fold in result.folds:
        if not fold.correct:
            i, j = fold.pair
            values[i, j] = values[j, i] = 1.0
    return MismatchMatrix(
        values=values,
        word_order=result.words,
        model_name=result.model_name,
        subjects=(result.subject_id,),
    )


def average_mismatch(ms: Sequence[MismatchMatrix]) -> MismatchMatrix:
    """Elementwise mean over subjects; word order and model must agree."""
    if not ms:
        raise ValueError("nothing to average")
    first = ms[0]
    for m in ms[1:]:
        if m.word_order != first.word_order:
            raise ValueError("word orders differ")
        if m.model_name != first.model_name:
            raise ValueError("model names differ")
    values = np.mean([m.values for m in ms], axis=0)
    subjects = tuple(s for m in ms for s in m.subjects)
    return MismatchMatrix(
        values=values, word_order=first.word_order, model_name=first.model_name, subjects=subjects
    )


def _error_pairs(m: MismatchMatrix, threshold: float) -> set[tuple[str, str]]:
    pairs = set()
    w = len(m.word_order)
    for i in range(w):
        for j in range(i + 1, w):
            if m.values[i, j] > threshold:
                pairs.add((m.word_order[i], m.word_order[j]))
    return pairs


def matrix_overlap(a: MismatchMatrix, b: MismatchMatrix, threshold: float = 0.0) -> OverlapReport:
    """Partition error pairs (value > threshold) into common / only_a / only_b."""
    if a.word_order != b.word_order:
        raise ValueError("word orders differ")
    ea = _error_pairs(a, threshold)
    eb = _error_pairs(b, threshold)
    return _report(ea, eb)


def _report(ea: set, eb: set) -> OverlapReport:
    common = ea & eb
    union = ea | eb
    jaccard = (len(common) / len(union)) if union else 1.0
    return OverlapReport(
        common=tuple(sorted(common)),
        only_a=tuple(sorted(ea - eb)),
        only_b=tuple(sorted(eb - ea)),
        jaccard=jaccard,
    )


def per_word_error(m: MismatchMatrix) -> list[tuple[str, float]]:
    """Row sums, highest first; ties keep word order."""
    masses = m.values.sum(axis=1)
    order = sorted(range(len(m.word_order)), key=lambda i: (-masses[i], i))
    return [(m.word_order[i], float(masses[i])) for i in order]


def per_category_error(m: MismatchMatrix, categories: Mapping[str, str]) -> list[tuple[str, float]]:
    """Per-word error mass grouped by category, highest first."""
    totals: dict[str, float] = {}
    for word, mass in per_word_error(m):
        cat = categories[word]
        totals[cat] = totals.get(cat, 0.0) + mass
    return sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))


def voxel_predictability(result: EvalResult) -> VoxelPredictability:
    """Correlate averaged held-out predictions with measured responses.

    Each word's predictions are averaged over the folds that held it out,
    per voxel and only over folds where that voxel was selected; the score
    is the Pearson correlation across words. Voxels with fewer than 2
    contributing words stay NaN.
    """
    if result.direction != WORD_TO_BRAIN:
        raise ValueError("voxel predictability needs a word2brain run")
    if not result.folds or result.folds[0].predictions is None:
        raise ValueError("run with keep_predictions=True to retain held-out predictions")
    w = len(result.words)
    v = result.n_voxels
    sum_pred = np.zeros((w, v))
    sum_true = np.zeros((w, v))
    count = np.zeros((w, v))
    for fold in result.folds:
        sel = fold.selected_voxels if fold.selected_voxels is not None else slice(None)
        for side, word in enumerate(fold.pair):
            sum_pred[word, sel] += fold.predictions[side]
            sum_true[word, sel] += fold.targets[side]
            count[word, sel] += 1.0
    seen = count > 0
    avg_pred = np.divide(sum_pred, count, out=np.zeros_like(sum_pred), where=seen)
    avg_true = np.divide(sum_true, count, out=np.zeros_like(sum_true), where=seen)

    n = seen.sum(axis=0)  # contributing words per voxel
    sp = (avg_pred * seen).sum(axis=0)
    st = (avg_true * seen).sum(axis=0)
    spp = (avg_pred**2 * seen).sum(axis=0)
    stt = (avg_true**2 * seen).sum(axis=0)
    spt = (avg_pred * avg_true * seen).sum(axis=0)
    var_p = n * spp - sp**2
    var_t = n * stt - st**2
    cov = n * spt - sp * st
    scores = np.full(v, np.nan)
    ok = (n >= 2) & (var_p > 0) & (var_t > 0)
    scores[ok] = np.clip(cov[ok] / np.sqrt(var_p[ok] * var_t[ok]), -1.0, 1.0)
    return VoxelPredictability(
        scores=scores, model_name=result.model_name, subject_id=result.subject_id
    )


def top_k_voxels(vp: VoxelPredictability, k: int) -> tuple[int, ...]:
    """Indices of the k best-scoring voxels (NaN excluded, ties by lower index)."""
    scored = np.flatnonzero(np.isfinite(vp.scores))
    if k < 1 or k > len(scored):
        raise ValueError(f"k must be in 1..{len(scored)} (scored voxels), got {k}")
    order = sorted(scored.tolist(), key=lambda i: (-vp.scores[i], i))
    return tuple(sorted(order[:k]))


def top_k_overlap(a: VoxelPredictability, b: VoxelPredictability, k: int) -> OverlapReport:
    """Compare the two models' top-k voxel sets."""
    if len(a.scores) != len(b.scores):
        raise ValueError("voxel spaces differ")
    if a.subject_id != b.subject_id:
        raise ValueError(f"subjects differ: {a.subject_id!r} vs {b.subject_id!r}")
    return _report(set(top_k_voxels(a, k)), set(top_k_voxels(b, k)))


def write_mismatch_csv(m: MismatchMatrix, path: str | Path) -> None:
    """Header row of words, then W rows of W values."""
    lines = [",".join(m.word_order)]
    lines.extend(",".join(repr(float(v)) for v in row) for row in m.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_mismatch_csv(path: str | Path, model_name: str | None = None) -> MismatchMatrix:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty mismatch file")
    words = tuple(lines[0].split(","))
    rows = [line.split(",") for line in lines[1:] if line]
    if len(rows) != len(words) or any(len(r) != len(words) for r in rows):
        raise FormatError(f"{path}: expected a {len(words)} x {len(words)} matrix")
    try:
        values = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: bad value: {exc}") from None
    return MismatchMatrix(
        values=values,
        word_order=words,
        model_name=model_name if model_name is not None else path.stem,
        subjects=(),
    )


def write_voxelpred_csv(
    vp: VoxelPredictability, path: str | Path, coords: np.ndarray | None = None
) -> None:
    """``voxel,x,y,z,score`` rows; coordinates and unscored entries stay blank."""
    lines = ["voxel,x,y,z,score"]
    for v, score in enumerate(vp.scores):
        xyz = (
            f"{coords[v, 0]},{coords[v, 1]},{coords[v, 2]}" if coords is not None else ",,"
        )
        text = repr(float(score)) if np.isfinite(score) else ""
        lines.append(f"{v},{xyz},{text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_voxelpred_csv(
    path: str | Path, model_name: str | None = None, subject_id: str = ""
) -> VoxelPredictability:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "voxel,x,y,z,score":
        raise FormatError(f"{path}: expected header 'voxel,x,y,z,score'")
    scores = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise FormatError(f"{path}:{lineno}: expected 5 columns")
        scores.append(float(parts[4]) if parts[4] else np.nan)
    return VoxelPredictability(
        scores=np.array(scores),
        model_name=model_name if model_name is not None else path.stem,
        subject_id=subject_id,
    )


def write_overlap_csv(report: OverlapReport, path: str | Path) -> None:
    """``item,membership`` rows plus a trailing ``#jaccard`` line."""
    lines = ["item,membership"]
    for items, label in ((report.common, "common"), (report.only_a, "only_a"), (report.only_b, "only_b")):
        for item in items:
            lines.append(f"{_item_text(item)},{label}")
    lines.append(f"#jaccard,{report.jaccard!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _item_text(item) -> str:
    if isinstance(item, tuple):
        return "|".join(str(x) for x in item)
    return str(item)
