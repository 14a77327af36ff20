"""Synthetic datasets with planted ground-truth maps, and a brute-force
reference scorer used to cross-check the evaluation pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import StimulusVocabulary, SubjectDataset
from .embeddings import EmbeddingTable

MAP_KINDS = ("linear", "tanh", "dual-block")


@dataclass(frozen=True)
class SynthSpec:
    n_words: int
    n_voxels: int
    emb_dim: int
    presentations: int = 6
    noise_sigma: float = 0.0
    map_kind: str = "linear"
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n_words", "n_voxels", "emb_dim", "presentations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.map_kind not in MAP_KINDS:
            raise ValueError(f"map_kind must be one of {MAP_KINDS}")
        if self.map_kind == "dual-block" and self.emb_dim % 2 != 0:
            raise ValueError("dual-block needs an even emb_dim")
        if self.map_kind == "dual-block" and self.n_voxels < 2:
            raise ValueError("dual-block needs at least 2 voxels")


@dataclass(frozen=True)
class PlantedMap:
    """The ground-truth embedding -> response map used to build a dataset."""

    kind: str
    blocks: tuple[np.ndarray, ...]

    def apply(self, emb: np.ndarray) -> np.ndarray:
        if self.kind == "tanh":
            return np.tanh(emb @ self.blocks[0])
        if self.kind == "dual-block":
            half = emb.shape[1] // 2
            return np.concatenate(
                [emb[:, :half] @ self.blocks[0], emb[:, half:] @ self.blocks[1]], axis=1
            )
        return emb @ self.blocks[0]


@dataclass(frozen=True)
class SyntheticData:
    vocab: StimulusVocabulary
    dataset: SubjectDataset
    table: EmbeddingTable
    true_map: PlantedMap


def _planted_matrix(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    """Random map; rows orthonormalized when d_in <= d_out so it stays
    well conditioned (and exactly orthogonal for noiseless round trips)."""
    g = rng.standard_normal((d_in, d_out))
    if d_in <= d_out:
        q, _ = np.linalg.qr(g.T)
        return q[:, :d_in].T
    return g / np.sqrt(d_in)


def generate_synthetic(spec: SynthSpec) -> SyntheticData:
    """Standard-normal embeddings pushed through a planted map, plus
    per-presentation Gaussian noise; fully determined by spec.seed."""
    rng = np.random.default_rng(spec.seed)
    words = tuple(f"w{i:03d}" for i in range(spec.n_words))
    categories = {w: ("groupa" if i < spec.n_words // 2 else "groupb") for i, w in enumerate(words)}
    vocab = StimulusVocabulary(words=words, categories=categories)

    emb = rng.standard_normal((spec.n_words, spec.emb_dim))
    if spec.map_kind == "dual-block":
        half_d = spec.emb_dim // 2
        half_v = spec.n_voxels // 2
        blocks = (
            _planted_matrix(rng, half_d, half_v),
            _planted_matrix(rng, half_d, spec.n_voxels - half_v),
        )
    else:
        blocks = (_planted_matrix(rng, spec.emb_dim, spec.n_voxels),)
    true_map = PlantedMap(kind=spec.map_kind, blocks=blocks)
    clean = true_map.apply(emb)

    n_trials = spec.n_words * spec.presentations
    trials = np.empty((n_trials, spec.n_voxels))
    trial_word = np.empty(n_trials, dtype=np.int64)
    trial_pres = np.empty(n_trials, dtype=np.int64)
    row = 0
    for w in range(spec.n_words):
        for p in range(spec.presentations):
            noise = rng.standard_normal(spec.n_voxels)
            trials[row] = clean[w] + spec.noise_sigma * noise
            trial_word[row] = w
            trial_pres[row] = p
            row += 1
    dataset = SubjectDataset(
        subject_id=f"synth{spec.seed}",
        trials=trials,
        trial_word=trial_word,
        trial_presentation=trial_pres,
    )
    table = EmbeddingTable(
        model_name="planted",
        dim=spec.emb_dim,
        entries={w: emb[i].copy() for i, w in enumerate(words)},
    )
    return SyntheticData(vocab=vocab, dataset=dataset, table=table, true_map=true_map)


def slice_table(table: EmbeddingTable, columns: Sequence[int], model_name: str) -> EmbeddingTable:
    """A new table keeping only the given vector columns (block experiments)."""
    cols = list(columns)
    return EmbeddingTable(
        model_name=model_name,
        dim=len(cols),
        entries={w: v[cols].copy() for w, v in table.entries.items()},
    )


def oracle_leave_two_out(
    ds: SubjectDataset,
    vocab: StimulusVocabulary,
    table: EmbeddingTable,
    direction: str,
    lam: float,
    fold_outcomes: list[bool] | None = None,
) -> float:
    """Straight-line reference leave-two-out accuracy.

    Deliberately independent of the evaluation and regressor modules: ridge
    via plain normal equations on centered data, no voxel selection, no
    z-scoring, cosine matching written out inline. Intended for small
    instances. Per-fold correctness is appended to ``fold_outcomes`` (pairs
    in lexicographic order) when a list is passed.
    """
    word_ids = sorted(set(int(w) for w in ds.trial_word))
    n_words = len(word_ids)
    means = np.stack([ds.trials[ds.trial_word == w].mean(axis=0) for w in word_ids])
    emb = np.stack([table.entries[vocab.words[w]] for w in word_ids])
    if direction in ("word2brain", "word->brain"):
        x_all, y_all = emb, means
    elif direction in ("brain2word", "brain->word"):
        x_all, y_all = means, emb
    else:
        raise ValueError(f"unknown direction {direction!r}")

    n_correct = 0
    n_pairs = 0
    for i in range(n_words):
        for j in range(i + 1, n_words):
            keep = [k for k in range(n_words) if k != i and k != j]
            x_tr = x_all[keep]
            y_tr = y_all[keep]
            x_mean = x_tr.mean(axis=0)
            y_mean = y_tr.mean(axis=0)
            xc = x_tr - x_mean
            yc = y_tr - y_mean
            w = np.linalg.solve(xc.T @ xc + lam * np.eye(xc.shape[1]), xc.T @ yc)
            pred_i = (x_all[i] - x_mean) @ w + y_mean
            pred_j = (x_all[j] - x_mean) @ w + y_mean

            def cos(u, v):
                nu = np.linalg.norm(u)
                nv = np.linalg.norm(v)
                return (u @ v) / (nu * nv) if nu > 0 and nv > 0 else 0.0

            same = cos(pred_i, y_all[i]) + cos(pred_j, y_all[j])
            crossed = cos(pred_i, y_all[j]) + cos(pred_j, y_all[i])
            correct = same > crossed
            if fold_outcomes is not None:
                fold_outcomes.append(bool(correct))
            n_correct += int(correct)
            n_pairs += 1
    return n_correct / n_pairs if n_pairs else 0.0
