from __future__ import annotations

import numpy as np
import pytest

from neurodecode.dataset import StimulusVocabulary, SubjectDataset


def make_vocab(n: int = 4, categories: dict[str, str] | None = None) -> StimulusVocabulary:
    words = tuple(f"w{i:03d}" for i in range(n))
    cats = categories or {w: "thing" for w in words}
    return StimulusVocabulary(words=words, categories=cats)


def make_dataset(
    responses: np.ndarray,
    presentations: int = 2,
    noise: float = 0.0,
    seed: int = 0,
    subject_id: str = "s1",
) -> SubjectDataset:
    """Dataset whose per-word means equal ``responses`` (W x V) when noise=0."""
    rng = np.random.default_rng(seed)
    n_words, n_vox = responses.shape
    trials, words, pres = [], [], []
    for w in range(n_words):
        draws = noise * rng.standard_normal((presentations, n_vox))
        draws -= draws.mean(axis=0)  # keep the word mean exact
        for p in range(presentations):
            trials.append(responses[w] + draws[p])
            words.append(w)
            pres.append(p)
    return SubjectDataset(
        subject_id=subject_id,
        trials=np.array(trials),
        trial_word=np.array(words),
        trial_presentation=np.array(pres),
    )


@pytest.fixture
def tiny_vocab() -> StimulusVocabulary:
    return make_vocab(4)
