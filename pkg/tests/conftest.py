import os
from pathlib import Path

import pytest

from synthcorpus import build_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> Path:
    """8 clips per class; enough to drive the CLI end to end quickly."""
    root = tmp_path_factory.mktemp("corpus_small")
    return build_corpus(root, per_class=8, seed=2024)


@pytest.fixture(scope="session")
def medium_corpus(tmp_path_factory) -> Path:
    """120 clips per class for the dataset-level acceptance checks."""
    root = tmp_path_factory.mktemp("corpus_medium")
    return build_corpus(root, per_class=120, seed=7)


@pytest.fixture(scope="session")
def dataset_for_acceptance(tmp_path_factory):
    """The real dataset when ESAD_DATA_DIR points at it, else the synthetic twin.

    Returns (root_path, is_real). The accuracy-style acceptance criteria run
    against whichever corpus this provides; the pass/fail lines say which.
    """
    real = os.environ.get("ESAD_DATA_DIR")
    if real and Path(real).is_dir():
        return Path(real), True
    root = tmp_path_factory.mktemp("corpus_acceptance")
    return build_corpus(root, per_class=120, seed=7), False
