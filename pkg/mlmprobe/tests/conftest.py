"""Shared fixtures: a hand-built export directory and a real pipeline run.

The synthetic export exercises the file contract in isolation; the session
fixture produces a genuine export by invoking the exporter's own CLI, which
is the only coupling this package is allowed.
"""

import json
import shutil
import subprocess

import numpy as np
import pytest

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
BASE_WORDS = ["red", "blue", "green"]
APPENDED_WORDS = ["rot", "blau"]


def build_export(out_dir, dim=8):
    """Write a minimal export: 8 base rows, 2 appended rows."""
    tokens = SPECIALS + BASE_WORDS + APPENDED_WORDS
    rng = np.random.default_rng(1234)
    matrix = rng.standard_normal((len(tokens), dim)).astype(np.float32)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "vocab.txt").write_text(
        "\n".join(tokens) + "\n", encoding="utf-8")
    matrix.tofile(out_dir / "matrix.bin")
    (out_dir / "matrix.json").write_text(
        json.dumps({"rows": len(tokens), "dim": dim}), encoding="utf-8")
    records = [
        {"token": "rot", "id": 8, "provenance": "weighted",
         "neighbors": [{"src": "red", "sim": 0.91, "weight": 0.7},
                       {"src": "blue", "sim": 0.42, "weight": 0.3}]},
        {"token": "blau", "id": 9, "provenance": "fallback_sampled",
         "neighbors": []},
    ]
    (out_dir / "provenance.jsonl").write_text(
        "\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return {"dir": out_dir, "tokens": tokens, "matrix": matrix,
            "records": records, "base_count": len(SPECIALS) + len(BASE_WORDS)}


@pytest.fixture
def synth_export(tmp_path):
    return build_export(tmp_path / "export")


@pytest.fixture
def color_corpus(tmp_path):
    """Corpus over the synthetic vocabulary, large enough to blockify."""
    rng = np.random.default_rng(99)
    words = BASE_WORDS + APPENDED_WORDS
    lines = []
    for _ in range(80):
        count = int(rng.integers(10, 20))
        picks = rng.integers(0, len(words), count)
        lines.append(" ".join(words[int(i)] for i in picks))
    path = tmp_path / "corpus.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def cipher_run(tmp_path_factory):
    """Build a real export by running the exporter CLI end to end."""
    exe = shutil.which("lexiport")
    assert exe is not None, "exporter CLI not on PATH; install lexiport"
    root = tmp_path_factory.mktemp("cipher")
    subprocess.run(
        [exe, "make-fixture", "--output-dir", str(root), "--seed", "0"],
        check=True, capture_output=True, text=True)
    subprocess.run(
        [exe, "run", "--config", str(root / "config.yaml")],
        check=True, capture_output=True, text=True)
    export = root / "out" / "transplant"
    assert (export / "vocab.txt").exists()
    return {"root": root, "export": export,
            "source": root / "source.txt", "target": root / "target.txt"}
