"""Acceptance: converting the committed fixture yields a TSV the dataset
loader reproduces exactly, and conversion is byte-stable.

The converter itself has no runtime dependency on the analysis package;
the loader is imported here purely to verify the round trip.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from matconvert.converter import convert_subject
from neurodecode.dataset import StimulusVocabulary, load_subject_dataset

FIXTURES = Path(__file__).parent / "fixtures"

FIXTURE_VALUES = np.array(
    [
        [0.1, -2.5, 1e-07],
        [1234.5678901234567, 0.30000000000000004, -0.0],
        [0.3333333333333333, -9.87e-05, 2.718281828459045],
        [3.5, 7.25, 42.0],
    ]
)


def test_criterion_11_converter_round_trip(tmp_path):
    first = convert_subject(FIXTURES / "tiny_subject.mat", tmp_path / "run1")
    vocab = StimulusVocabulary(
        words=("bear", "door"), categories={"bear": "fixture", "door": "fixture"}
    )
    ds = load_subject_dataset(first.output, vocab)
    order = {("bear", 0): 0, ("door", 0): 1, ("bear", 1): 2, ("door", 1): 3}
    loaded = np.empty_like(FIXTURE_VALUES)
    for row in range(4):
        key = (vocab.words[ds.trial_word[row]], int(ds.trial_presentation[row]))
        loaded[order[key]] = ds.trials[row]
    values_exact = np.array_equal(loaded, FIXTURE_VALUES)
    coords_exact = np.array_equal(ds.voxel_coords, [[1, 2, 3], [4, 5, 6], [7, 8, 9]])

    second = convert_subject(FIXTURES / "tiny_subject.mat", tmp_path / "run2")
    stable = Path(first.output).read_bytes() == Path(second.output).read_bytes()

    ok = values_exact and coords_exact and stable
    print(f"[criterion 11] {'PASS' if ok else 'FAIL'}: fixture values load exactly "
          f"({values_exact}), coords exact ({coords_exact}), reconversion byte-identical ({stable})")
    assert ok
