"""Benchmark harness for regressing between word embeddings and fMRI voxel
activations, scored with the leave-two-out pairwise matching protocol."""

from .analysis import (
    MismatchMatrix,
    OverlapReport,
    VoxelPredictability,
    average_mismatch,
    matrix_overlap,
    mismatch_matrix,
    per_category_error,
    per_word_error,
    top_k_overlap,
    voxel_predictability,
)
from .dataset import (
    StimulusVocabulary,
    SubjectDataset,
    Standardizer,
    VoxelSelection,
    WordResponseMatrix,
    apply_standardizer,
    average_presentations,
    compute_stability_scores,
    fit_standardizer,
    invert_standardizer,
    load_subject_dataset,
    load_word_list,
    select_top_voxels,
)
from .embeddings import (
    EmbeddingMatrix,
    EmbeddingTable,
    combine_tables,
    load_embedding_table,
    lookup_matrix,
)
from .errors import DivergenceError, FormatError, NeurodecodeError, VocabularyError
from .evaluation import (
    BRAIN_TO_WORD,
    WORD_TO_BRAIN,
    EvalConfig,
    EvalResult,
    FoldResult,
    enumerate_pairs,
    match_pair,
    run_fold,
    run_leave_two_out,
)
from .regressor import (
    RegressionModel,
    RegressorConfig,
    init_model,
    load_model,
    loss_and_gradients,
    predict,
    ridge_closed_form,
    save_model,
    train,
)
from .synth import SynthSpec, SyntheticData, generate_synthetic, oracle_leave_two_out

__version__ = "0.1.0"
