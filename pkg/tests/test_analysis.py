from __future__ import annotations

import numpy as np
import pytest

from neurodecode.analysis import (
    MismatchMatrix,
    VoxelPredictability,
    average_mismatch,
    matrix_overlap,
    mismatch_matrix,
    per_category_error,
    per_word_error,
    read_mismatch_csv,
    read_voxelpred_csv,
    top_k_overlap,
    top_k_voxels,
    voxel_predictability,
    write_mismatch_csv,
    write_overlap_csv,
    write_voxelpred_csv,
)
from neurodecode.dataset import SubjectDataset
from neurodecode.evaluation import EvalConfig, EvalResult, FoldResult, enumerate_pairs, run_leave_two_out
from neurodecode.regressor import RegressorConfig
from neurodecode.synth import SynthSpec, generate_synthetic

RIDGE_CFG = EvalConfig(
    regressor=RegressorConfig(linear_mode=True, keep_rate=1.0, seed=1), solver="ridge"
)


def fake_result(words, wrong_pairs, subject="s1", model="m", direction="word2brain"):
    pairs = enumerate_pairs(len(words))
    folds = tuple(
        FoldResult(pair=p, correct=p not in wrong_pairs, similarities=(1.0, 1.0, 0.0, 0.0))
        for p in pairs
    )
    accuracy = sum(f.correct for f in folds) / len(folds)
    return EvalResult(
        subject_id=subject,
        model_name=model,
        direction=direction,
        words=tuple(words),
        n_voxels=3,
        folds=folds,
        accuracy=accuracy,
        config=RIDGE_CFG,
    )


WORDS = ("bear", "cat", "arm", "door")


# ---------------------------------------------------------------------
# mismatch matrices
# ---------------------------------------------------------------------


def test_mismatch_perfect_run_is_zero():
    m = mismatch_matrix(fake_result(WORDS, wrong_pairs=set()))
    assert np.all(m.values == 0.0)
    assert m.error_mass == 0.0


def test_mismatch_single_error_sets_symmetric_cells():
    m = mismatch_matrix(fake_result(WORDS, wrong_pairs={(1, 3)}))
    expected = np.zeros((4, 4))
    expected[1, 3] = expected[3, 1] = 1.0
    assert np.array_equal(m.values, expected)


def test_mismatch_sum_identity():
    wrong = {(0, 1), (2, 3), (0, 3)}
    res = fake_result(WORDS, wrong_pairs=wrong)
    m = mismatch_matrix(res)
    assert m.error_mass == len(wrong)
    assert res.accuracy == 1.0 - m.error_mass / len(enumerate_pairs(4))


def test_mismatch_type_invariants():
    with pytest.raises(ValueError):
        MismatchMatrix(np.ones((2, 2)), ("a", "b"), "m", ())  # nonzero diagonal
    bad = np.zeros((2, 2))
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        MismatchMatrix(bad, ("a", "b"), "m", ())  # asymmetric


def test_average_mismatch():
    a = mismatch_matrix(fake_result(WORDS, {(0, 1)}, subject="s1"))
    b = mismatch_matrix(fake_result(WORDS, {(0, 1)}, subject="s2"))
    avg = average_mismatch([a, b])
    assert np.array_equal(avg.values, a.values)
    assert avg.subjects == ("s1", "s2")

    nine = [mismatch_matrix(fake_result(WORDS, {(0, 1)} if i == 0 else set(), subject=f"s{i}"))
            for i in range(9)]
    avg9 = average_mismatch(nine)
    assert avg9.values[0, 1] == pytest.approx(1 / 9)
    assert np.array_equal(avg9.values, avg9.values.T)
    assert np.all(np.diagonal(avg9.values) == 0)


def test_average_mismatch_requires_same_words():
    a = mismatch_matrix(fake_result(WORDS, set()))
    b = mismatch_matrix(fake_result(("x", "y", "z", "q"), set()))
    with pytest.raises(ValueError):
        average_mismatch([a, b])


# ---------------------------------------------------------------------
# overlap
# ---------------------------------------------------------------------


def test_matrix_overlap_identical():
    a = mismatch_matrix(fake_result(WORDS, {(0, 1), (1, 2)}))
    report = matrix_overlap(a, a)
    assert report.jaccard == 1.0
    assert report.only_a == () and report.only_b == ()
    assert len(report.common) == 2


def test_matrix_overlap_disjoint():
    a = mismatch_matrix(fake_result(WORDS, {(0, 1)}))
    b = mismatch_matrix(fake_result(WORDS, {(2, 3)}))
    report = matrix_overlap(a, b)
    assert report.jaccard == 0.0
    assert report.common == ()


def test_matrix_overlap_subset():
    a = mismatch_matrix(fake_result(WORDS, {(0, 1)}))
    b = mismatch_matrix(fake_result(WORDS, {(0, 1), (1, 2)}))
    report = matrix_overlap(a, b)
    assert report.only_a == ()
    assert report.only_b == (("cat", "arm"),)


def test_matrix_overlap_zero_errors_jaccard_one():
    a = mismatch_matrix(fake_result(WORDS, set()))
    assert matrix_overlap(a, a).jaccard == 1.0


def test_matrix_overlap_word_order_mismatch():
    a = mismatch_matrix(fake_result(WORDS, set()))
    b = mismatch_matrix(fake_result(("x", "y", "z", "q"), set()))
    with pytest.raises(ValueError):
        matrix_overlap(a, b)


# ---------------------------------------------------------------------
# per-word / per-category errors
# ---------------------------------------------------------------------


def test_per_word_error_zero_matrix():
    ranked = per_word_error(mismatch_matrix(fake_result(WORDS, set())))
    assert all(mass == 0.0 for _, mass in ranked)
    assert [w for w, _ in ranked] == list(WORDS)  # ties keep word order


def test_per_word_error_single_pair():
    ranked = per_word_error(mismatch_matrix(fake_result(WORDS, {(1, 2)})))
    top_two = {w for w, mass in ranked[:2]}
    assert top_two == {"cat", "arm"}
    assert ranked[0][1] == 1.0 and ranked[2][1] == 0.0


def test_per_category_error_conserves_mass():
    categories = {"bear": "animal", "cat": "animal", "arm": "bodypart", "door": "object"}
    m = mismatch_matrix(fake_result(WORDS, {(0, 1), (2, 3)}))
    per_cat = per_category_error(m, categories)
    assert sum(mass for _, mass in per_cat) == 2.0 * m.error_mass
    assert dict(per_cat)["animal"] == 2.0


# ---------------------------------------------------------------------
# voxel predictability
# ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def noiseless_run():
    data = generate_synthetic(
        SynthSpec(n_words=20, n_voxels=10, emb_dim=4, presentations=4, noise_sigma=0.0, seed=3)
    )
    nrng = np.random.default_rng(100)
    trials = np.hstack([data.dataset.trials, nrng.standard_normal((80, 1))])
    ds = SubjectDataset("s1", trials, data.dataset.trial_word, data.dataset.trial_presentation)
    cfg = EvalConfig(
        regressor=RegressorConfig(linear_mode=True, keep_rate=1.0, seed=1),
        solver="ridge",
        keep_predictions=True,
    )
    result = run_leave_two_out(ds, data.vocab, list(data.vocab.words), data.table, "word2brain", cfg)
    return result


def test_voxel_predictability_planted_voxels_near_one(noiseless_run):
    vp = voxel_predictability(noiseless_run)
    assert np.all(vp.scores[:10] > 0.99)


def test_voxel_predictability_noise_voxel_near_zero(noiseless_run):
    vp = voxel_predictability(noiseless_run)
    assert abs(vp.scores[10]) < 0.3


def test_voxel_predictability_fold_counting(noiseless_run):
    counts = np.zeros(20)
    for fold in noiseless_run.folds:
        counts[list(fold.pair)] += 1
    assert np.all(counts == 19)  # each word held out in W-1 folds


def test_voxel_predictability_requires_word2brain():
    res = fake_result(WORDS, set(), direction="brain2word")
    with pytest.raises(ValueError, match="word2brain"):
        voxel_predictability(res)


def test_voxel_predictability_requires_predictions():
    res = fake_result(WORDS, set())
    with pytest.raises(ValueError, match="keep_predictions"):
        voxel_predictability(res)


def test_voxel_predictability_unselected_voxels_missing():
    data = generate_synthetic(
        SynthSpec(n_words=8, n_voxels=6, emb_dim=3, presentations=3, noise_sigma=0.0, seed=4)
    )
    cfg = EvalConfig(
        regressor=RegressorConfig(linear_mode=True, keep_rate=1.0, seed=1),
        solver="ridge",
        select_voxels=2,
        keep_predictions=True,
    )
    res = run_leave_two_out(data.dataset, data.vocab, list(data.vocab.words), data.table, "word2brain", cfg)
    vp = voxel_predictability(res)
    ever_selected = sorted({int(v) for f in res.folds for v in f.selected_voxels})
    never_selected = [v for v in range(6) if v not in ever_selected]
    assert all(np.isnan(vp.scores[v]) for v in never_selected)


def test_voxel_predictability_word_order_invariant(noiseless_run):
    # rerunning with permuted word order gives the same per-voxel scores
    data = generate_synthetic(
        SynthSpec(n_words=12, n_voxels=8, emb_dim=4, presentations=3, noise_sigma=0.3, seed=9)
    )
    cfg = EvalConfig(
        regressor=RegressorConfig(linear_mode=True, keep_rate=1.0, seed=1),
        solver="ridge",
        keep_predictions=True,
    )
    words = list(data.vocab.words)
    base = voxel_predictability(
        run_leave_two_out(data.dataset, data.vocab, words, data.table, "word2brain", cfg)
    )
    rng = np.random.default_rng(2)
    shuffled = [words[i] for i in rng.permutation(len(words))]
    other = voxel_predictability(
        run_leave_two_out(data.dataset, data.vocab, shuffled, data.table, "word2brain", cfg)
    )
    assert np.allclose(base.scores, other.scores, atol=1e-9)


# ---------------------------------------------------------------------
# top-k overlap
# ---------------------------------------------------------------------


def vp_of(scores, model="m", subject="s1"):
    return VoxelPredictability(np.asarray(scores, dtype=float), model, subject)


def test_top_k_voxels_ties_and_nan():
    vp = vp_of([0.5, np.nan, 0.5, 0.9])
    assert top_k_voxels(vp, 2) == (0, 3)
    with pytest.raises(ValueError):
        top_k_voxels(vp, 4)  # only 3 scored


def test_top_k_overlap_identical():
    vp = vp_of(np.linspace(-1, 1, 60))
    report = top_k_overlap(vp, vp, 50)
    assert len(report.common) == 50
    assert report.jaccard == 1.0


def test_top_k_overlap_disjoint():
    a = vp_of([0.9, 0.8, 0.1, 0.2])
    b = vp_of([0.1, 0.2, 0.9, 0.8])
    report = top_k_overlap(a, b, 2)
    assert report.common == ()
    assert report.jaccard == 0.0


def test_top_k_overlap_requires_same_space():
    with pytest.raises(ValueError):
        top_k_overlap(vp_of([1.0, 0.0]), vp_of([1.0, 0.0, 0.5]), 1)
    with pytest.raises(ValueError):
        top_k_overlap(vp_of([1.0]), vp_of([1.0], subject="other"), 1)


# ---------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------


def test_mismatch_csv_round_trip(tmp_path):
    m = mismatch_matrix(fake_result(WORDS, {(0, 2), (1, 3)}))
    path = tmp_path / "mm.csv"
    write_mismatch_csv(m, path)
    loaded = read_mismatch_csv(path, model_name="m")
    assert loaded.word_order == m.word_order
    assert np.array_equal(loaded.values, m.values)


def test_voxelpred_csv_round_trip(tmp_path):
    vp = vp_of([0.25, np.nan, -0.5])
    path = tmp_path / "vp.csv"
    coords = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    write_voxelpred_csv(vp, path, coords=coords)
    text = path.read_text(encoding="utf-8").splitlines()
    assert text[0] == "voxel,x,y,z,score"
    assert text[2] == "1,4,5,6,"  # missing score stays blank
    loaded = read_voxelpred_csv(path)
    assert np.isnan(loaded.scores[1])
    assert loaded.scores[2] == -0.5


def test_overlap_csv_contents(tmp_path):
    a = mismatch_matrix(fake_result(WORDS, {(0, 1), (1, 2)}))
    b = mismatch_matrix(fake_result(WORDS, {(1, 2), (2, 3)}))
    report = matrix_overlap(a, b)
    path = tmp_path / "overlap.csv"
    write_overlap_csv(report, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "item,membership"
    assert "cat|arm,common" in lines
    assert "bear|cat,only_a" in lines
    assert "arm|door,only_b" in lines
    assert lines[-1].startswith("#jaccard,")
    assert float(lines[-1].split(",")[1]) == pytest.approx(1 / 3)
