"""The leave-two-out protocol.

Every unordered pair of stimulus words becomes one fold: train a regressor
on the remaining words, predict the two held-out items, and score the
pairwise match. A fold is correct when the identity assignment beats the
crossed one on summed cosine similarity (ties count as incorrect). The
same protocol runs in both directions: embeddings to voxel activations
(``word2brain``) or activations to embeddings (``brain2word``).

Per fold: stability-based voxel selection fitted on the training words
only (optional), separate input/target z-scoring fitted on the training
rows, regressor training with a fold-derived seed (base seed XOR fold
index, so results do not depend on execution order), prediction and
matching in standardized space.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dataset import (
    StabilityAccumulator,
    StimulusVocabulary,
    SubjectDataset,
    apply_standardizer,
    average_presentations,
    fit_standardizer,
    select_top_voxels,
)
from .embeddings import EmbeddingMatrix, EmbeddingTable, lookup_matrix
from .errors import DivergenceError, FormatError
from .regressor import RegressorConfig, init_model, predict, ridge_closed_form, train

WORD_TO_BRAIN = "word2brain"
BRAIN_TO_WORD = "brain2word"
DIRECTIONS = (WORD_TO_BRAIN, BRAIN_TO_WORD)

_DIRECTION_ALIASES = {
    "word2brain": WORD_TO_BRAIN,
    "word->brain": WORD_TO_BRAIN,
    "brain2word": BRAIN_TO_WORD,
    "brain->word": BRAIN_TO_WORD,
}

SOLVERS = ("gradient", "ridge")


def normalize_direction(direction: str) -> str:
    try:
        return _DIRECTION_ALIASES[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}, expected one of {DIRECTIONS}") from None


@dataclass(frozen=True)
class EvalConfig:
    """Everything a leave-two-out run needs besides the data itself.

    ``select_voxels`` is the per-fold stability selection size, or None to
    use every voxel. ``solver`` picks gradient training or the closed-form
    ridge fast path (linear only). ``keep_predictions`` retains held-out
    predictions, standardized targets, and the fold's voxel selection for
    downstream voxel analysis.
    """

    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    select_voxels: int | None = None
    solver: str = "gradient"
    keep_predictions: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.select_voxels is not None and self.select_voxels < 1:
            raise ValueError("select_voxels must be positive or None")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}, expected one of {SOLVERS}")
        if self.solver == "ridge" and not self.regressor.linear_mode:
            raise ValueError("the ridge solver requires linear_mode")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class FoldResult:
    """Outcome of one held-out pair.

    ``similarities`` holds (s_ii, s_jj, s_ij, s_ji). ``predictions``,
    ``targets`` (both standardized, rows ordered like ``pair``) and
    ``selected_voxels`` are retained only when requested.
    """

    pair: tuple[int, int]
    correct: bool
    similarities: tuple[float, float, float, float]
    predictions: np.ndarray | None = None
    targets: np.ndarray | None = None
    selected_voxels: np.ndarray | None = None


@dataclass(frozen=True)
class EvalResult:
    subject_id: str
    model_name: str
    direction: str
    words: tuple[str, ...]
    n_voxels: int
    folds: tuple[FoldResult, ...]
    accuracy: float
    config: EvalConfig


def enumerate_pairs(n: int) -> list[tuple[int, int]]:
    """All unordered index pairs (i < j), lexicographic; n*(n-1)/2 of them."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def match_pair(
    p1: np.ndarray, p2: np.ndarray, t1: np.ndarray, t2: np.ndarray
) -> tuple[bool, tuple[float, float, float, float]]:
    """Score the assignment of two predictions to two targets.

    Correct iff cos(p1,t1) + cos(p2,t2) strictly beats cos(p1,t2) +
    cos(p2,t1). Zero-norm vectors contribute similarity 0.
    """
    p1, p2, t1, t2 = (np.asarray(v, dtype=np.float64) for v in (p1, p2, t1, t2))
    if not (p1.shape == p2.shape == t1.shape == t2.shape):
        raise ValueError("all four vectors must have the same length")
    s_ii = _cosine(p1, t1)
    s_jj = _cosine(p2, t2)
    s_ij = _cosine(p1, t2)
    s_ji = _cosine(p2, t1)
    return (s_ii + s_jj) > (s_ij + s_ji), (s_ii, s_jj, s_ij, s_ji)


def run_fold(
    pair: tuple[int, int],
    ds: SubjectDataset,
    word_indices: Sequence[int],
    emb: EmbeddingMatrix,
    direction: str,
    cfg: EvalConfig,
    fold_index: int | None = None,
) -> FoldResult:
    """One leave-two-out fold, built from scratch (tests and one-off use).

    ``word_indices`` are vocabulary indices aligned with ``emb`` rows;
    ``pair`` indexes positions within that list. Batch runs go through
    run_leave_two_out, which shares the per-fold setup.
    """
    word_indices = list(word_indices)
    responses = average_presentations(ds, word_indices).rows
    acc = (
        StabilityAccumulator(ds, word_indices) if cfg.select_voxels is not None else None
    )
    if fold_index is None:
        fold_index = enumerate_pairs(len(word_indices)).index((min(pair), max(pair)))
    return _run_single_fold(pair, fold_index, responses, emb.rows, acc, direction, cfg)


def _run_single_fold(
    pair: tuple[int, int],
    fold_index: int,
    responses: np.ndarray,
    emb_rows: np.ndarray,
    stability: StabilityAccumulator | None,
    direction: str,
    cfg: EvalConfig,
) -> FoldResult:
    direction = normalize_direction(direction)
    i, j = pair
    if i == j:
        raise ValueError("held-out pair must contain two distinct words")
    n_words = responses.shape[0]
    train_mask = np.ones(n_words, dtype=bool)
    train_mask[[i, j]] = False

    if stability is not None:
        scores = stability.scores_excluding(i, j)
        selection = select_top_voxels(scores, cfg.select_voxels).indices
        resp = responses[:, selection]
    else:
        selection = None
        resp = responses

    if direction == WORD_TO_BRAIN:
        x_all, y_all = emb_rows, resp
    else:
        x_all, y_all = resp, emb_rows

    sx = fit_standardizer(x_all[train_mask])
    sy = fit_standardizer(y_all[train_mask])
    xs = apply_standardizer(sx, x_all)
    ys = apply_standardizer(sy, y_all)

    rcfg = replace(cfg.regressor, seed=cfg.regressor.seed ^ fold_index)
    if cfg.solver == "ridge":
        model = ridge_closed_form(xs[train_mask], ys[train_mask], rcfg.l2_lambda)
    else:
        model = train(
            init_model(rcfg, xs.shape[1], ys.shape[1]), xs[train_mask], ys[train_mask], rcfg
        )
    preds = predict(model, xs[[i, j]])
    correct, sims = match_pair(preds[0], preds[1], ys[i], ys[j])
    keep = cfg.keep_predictions
    return FoldResult(
        pair=(i, j),
        correct=correct,
        similarities=sims,
        predictions=preds if keep else None,
        targets=ys[[i, j]] if keep else None,
        selected_voxels=selection if keep else None,
    )


def run_leave_two_out(
    ds: SubjectDataset,
    vocab: StimulusVocabulary,
    words: Sequence[str],
    table: EmbeddingTable,
    direction: str,
    cfg: EvalConfig,
    progress: Callable[[int, int], None] | None = None,
) -> EvalResult:
    """Run every fold over ``words`` and aggregate.

    Folds may run on a thread pool (``cfg.workers``); results are collected
    in fold order and per-fold seeds derive from the base seed, so the
    outcome is identical for any worker count.
    """
    direction = normalize_direction(direction)
    words = list(words)
    if len(words) < 4:
        raise ValueError("need at least 4 words (training folds need 2 rows)")
    word_indices = [vocab.index(w) for w in words]
    emb = lookup_matrix(table, words)
    responses = average_presentations(ds, word_indices).rows
    if cfg.select_voxels is not None:
        if cfg.select_voxels > ds.n_voxels:
            raise ValueError(
                f"select_voxels={cfg.select_voxels} exceeds voxel count {ds.n_voxels}"
            )
        stability = StabilityAccumulator(ds, word_indices)
    else:
        stability = None
    pairs = enumerate_pairs(len(words))

    def one(args: tuple[int, tuple[int, int]]) -> FoldResult:
        idx, pair = args
        try:
            return _run_single_fold(pair, idx, responses, emb.rows, stability, direction, cfg)
        except DivergenceError as exc:
            wi, wj = words[pair[0]], words[pair[1]]
            raise DivergenceError(f"fold {idx} (held-out {wi!r}, {wj!r}): {exc}") from exc

    folds: list[FoldResult] = []
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(one, item) for item in enumerate(pairs)]
            for done, fut in enumerate(futures, start=1):
                folds.append(fut.result())
                if progress is not None:
                    progress(done, len(pairs))
    else:
        for done, item in enumerate(enumerate(pairs), start=1):
            folds.append(one(item))
            if progress is not None:
                progress(done, len(pairs))

    n_correct = sum(f.correct for f in folds)
    accuracy = n_correct / len(pairs) if pairs else 0.0
    return EvalResult(
        subject_id=ds.subject_id,
        model_name=table.model_name,
        direction=direction,
        words=tuple(words),
        n_voxels=ds.n_voxels,
        folds=tuple(folds),
        accuracy=accuracy,
        config=cfg,
    )


def write_eval_csv(result: EvalResult, path: str | Path) -> None:
    """One row per fold plus a trailing ``#summary`` row."""
    lines = ["word_i,word_j,correct,s_ii,s_jj,s_ij,s_ji"]
    for f in result.folds:
        wi, wj = result.words[f.pair[0]], result.words[f.pair[1]]
        sims = ",".join(repr(s) for s in f.similarities)
        lines.append(f"{wi},{wj},{int(f.correct)},{sims}")
    n_correct = sum(f.correct for f in result.folds)
    lines.append(f"#summary,{result.accuracy!r},{n_correct},{len(result.folds)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def eval_csv_name(subject_id: str, model_name: str, direction: str) -> str:
    return f"eval_{_safe(subject_id)}_{_safe(model_name)}_{direction}.csv"


def _safe(name: str) -> str:
    return "".join(c if (c.isalnum() or c in "-.") else "_" for c in name)


def read_eval_summary(path: str | Path) -> tuple[float, int, int]:
    """(accuracy, n_correct, n_folds) from a written eval CSV."""
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#summary,"):
            _, acc, n_correct, n_folds = line.split(",")
            return float(acc), int(n_correct), int(n_folds)
    raise FormatError(f"{path}: no #summary row")
