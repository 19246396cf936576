"""Shared fixtures: tiny corpora and one session-scoped pipeline run."""

import time

import numpy as np
import pytest

from lexiport.cli import parse_config, run_pipeline
from lexiport.fixtures import make_cipher_fixture


@pytest.fixture
def tmp_corpus(tmp_path):
    """A small deterministic corpus file with a known token census."""
    lines = [
        "the cat sat on the mat",
        "the dog sat on the log",
        "a cat and a dog met",
        "",
        "the end",
    ]
    path = tmp_path / "corpus.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def mini_fixture(tmp_path_factory):
    """A scaled-down two-language fixture for fast CLI and unit tests."""
    out = tmp_path_factory.mktemp("mini_fixture")
    paths = make_cipher_fixture(out, seed=1, n_words=60, n_tokens=15_000,
                                lexicon_size=25, heldout_size=10,
                                base_dim=32, base_fillers=8)
    return paths


@pytest.fixture(scope="session")
def cipher_fixture(tmp_path_factory):
    """The full-size cipher benchmark fixture at its default settings."""
    out = tmp_path_factory.mktemp("cipher_fixture")
    return make_cipher_fixture(out, seed=0)


@pytest.fixture(scope="session")
def cipher_run(cipher_fixture):
    """One full pipeline run over the benchmark fixture, timed."""
    cfg = parse_config(cipher_fixture["config"])
    start = time.monotonic()
    transplant_dir = run_pipeline(cfg, echo=lambda *_: None)
    elapsed = time.monotonic() - start
    return {"fixture": cipher_fixture, "config": cfg,
            "transplant_dir": transplant_dir,
            "out_root": transplant_dir.parent, "elapsed": elapsed}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
