"""Masking, arm training, fingerprints, and report reduction."""

import json
import math

import numpy as np
import pytest
import torch

from mlmprobe import (AdapterError, ToyMLM, ToyMLMConfig, load_artifacts,
                      make_checkpoint, patch_embeddings,
                      run_convergence_comparison)
from mlmprobe.harness import (SPECIAL_TOKENS, fingerprint_non_appended,
                              mask_batch, prepare_blocks,
                              randomize_appended, summarize, train_arm)
from mlmprobe.patch import EMBED_KEY
from mlmprobe.tokenizer import WordPieceTokenizer


def small_config(**kw):
    base = dict(hidden=8, heads=2, seq_len=16, batch=8, steps=100)
    base.update(kw)
    return ToyMLMConfig(**base)


def _blocks(art, corpus, seq_len=16):
    return prepare_blocks(corpus, WordPieceTokenizer(art.tokens), seq_len)


# ---------------------------------------------------------------- masking

def test_mask_batch_deterministic():
    batch = torch.randint(5, 20, (6, 16))
    a = mask_batch(batch, 0.3, 4, 20, {0, 4},
                   torch.Generator().manual_seed(11))
    b = mask_batch(batch, 0.3, 4, 20, {0, 4},
                   torch.Generator().manual_seed(11))
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])


def test_mask_batch_labels_and_specials():
    gen = torch.Generator().manual_seed(7)
    batch = torch.randint(0, 20, (8, 32))
    inputs, labels = mask_batch(batch, 0.4, 4, 20, {0, 4}, gen)
    selected = labels != -100
    # labels echo the original ids exactly where selected
    assert torch.equal(labels[selected], batch[selected])
    # special positions are never selected
    special_pos = (batch == 0) | (batch == 4)
    assert not (selected & special_pos).any()
    # unselected positions keep their input ids
    assert torch.equal(inputs[~selected], batch[~selected])


def test_mask_batch_action_split():
    gen = torch.Generator().manual_seed(3)
    batch = torch.randint(5, 20, (64, 64))
    inputs, labels = mask_batch(batch, 0.5, 4, 20, {0, 4}, gen)
    selected = labels != -100
    n = int(selected.sum())
    masked = int((inputs[selected] == 4).sum())
    kept = int((inputs[selected] == batch[selected]).sum())
    # 80/10/10 split, loose bounds (random ids may collide with originals)
    assert 0.75 < masked / n < 0.85
    assert 0.07 < kept / n < 0.18


def test_mask_batch_forces_one_position():
    gen = torch.Generator().manual_seed(0)
    batch = torch.full((1, 4), 7)
    inputs, labels = mask_batch(batch, 1e-9, 4, 20, {0, 4}, gen)
    assert int((labels != -100).sum()) >= 1


def test_mask_batch_all_specials_rejected():
    gen = torch.Generator().manual_seed(0)
    batch = torch.zeros((2, 4), dtype=torch.long)
    with pytest.raises(AdapterError, match="only special tokens"):
        mask_batch(batch, 0.5, 4, 20, {0, 4}, gen)


# ----------------------------------------------------------------- blocks

def test_prepare_blocks_shapes(synth_export, color_corpus):
    art = load_artifacts(synth_export["dir"])
    blocks = _blocks(art, color_corpus)
    assert blocks.ndim == 2 and blocks.shape[1] == 16
    assert blocks.shape[0] >= 4
    assert blocks.dtype == torch.long
    assert int(blocks.max()) < len(art.tokens)


def test_prepare_blocks_too_small(tmp_path, synth_export):
    art = load_artifacts(synth_export["dir"])
    corpus = tmp_path / "tiny.txt"
    corpus.write_text("red blue\n", encoding="utf-8")
    with pytest.raises(AdapterError, match="need at least 4"):
        _blocks(art, corpus)


# ------------------------------------------------------------ fingerprints

def test_fingerprint_ignores_appended_rows(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, small_config())), art)
    other = randomize_appended(ckpt, art, seed=5)
    assert (fingerprint_non_appended(ckpt, art.base_count)
            == fingerprint_non_appended(other, art.base_count))


def test_fingerprint_sees_everything_else(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, small_config())), art)
    fp = fingerprint_non_appended(ckpt, art.base_count)
    for name in ("norm.weight", EMBED_KEY):
        tampered = {"state": {k: v.clone() for k, v in ckpt["state"].items()},
                    "vocab_size": ckpt["vocab_size"],
                    "hidden": ckpt["hidden"], "tied": ckpt["tied"]}
        with torch.no_grad():
            tampered["state"][name].view(-1)[0] += 1.0
        assert fingerprint_non_appended(tampered, art.base_count) != fp, name


# ------------------------------------------------------- randomize_appended

def test_randomize_appended_swaps_only_appended(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, small_config())), art)
    rand = randomize_appended(ckpt, art, seed=1)
    n = art.base_count
    assert torch.equal(rand["state"][EMBED_KEY][:n],
                       ckpt["state"][EMBED_KEY][:n])
    assert not torch.equal(rand["state"][EMBED_KEY][n:],
                           ckpt["state"][EMBED_KEY][n:])


def test_randomize_appended_seeded(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, small_config())), art)
    a = randomize_appended(ckpt, art, seed=3)
    b = randomize_appended(ckpt, art, seed=3)
    c = randomize_appended(ckpt, art, seed=4)
    assert torch.equal(a["state"][EMBED_KEY], b["state"][EMBED_KEY])
    assert not torch.equal(a["state"][EMBED_KEY], c["state"][EMBED_KEY])


def test_randomize_appended_matches_base_moments(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, small_config())), art)
    draws = np.stack([
        randomize_appended(ckpt, art, seed=s)["state"][EMBED_KEY][
            art.base_count:].numpy()
        for s in range(200)])
    base = art.matrix[:art.base_count].astype(np.float64)
    sample_mean = draws.mean(axis=(0, 1))
    tol = 4 * np.sqrt(base.var(axis=0, ddof=0) / draws.shape[0]
                      / draws.shape[1])
    assert np.all(np.abs(sample_mean - base.mean(axis=0)) <= tol)


def test_randomize_requires_patched_checkpoint(synth_export):
    art = load_artifacts(synth_export["dir"])
    torch.manual_seed(0)
    base = make_checkpoint(ToyMLM(art.base_count, small_config()))
    with pytest.raises(AdapterError, match="not patched"):
        randomize_appended(base, art, seed=0)


# ---------------------------------------------------------------- control

def test_identical_checkpoints_give_identical_curves(synth_export,
                                                     color_corpus):
    """Same starting weights, same seed: the curves must match exactly."""
    art = load_artifacts(synth_export["dir"])
    config = small_config()
    torch.manual_seed(0)
    ckpt = patch_embeddings(
        make_checkpoint(ToyMLM(art.base_count, config)), art)
    blocks = _blocks(art, color_corpus)
    train, evl = blocks[:-8], blocks[-8:]
    mask_id = art.id_of("[MASK]")
    specials = {art.id_of(t) for t in SPECIAL_TOKENS if t in art}
    gen = torch.Generator().manual_seed(1)
    ev_in, ev_lab = mask_batch(evl, 0.15, mask_id, len(art.tokens),
                               specials, gen)
    runs = [train_arm(ckpt, config, train, ev_in, ev_lab, seed=2,
                      mask_id=mask_id, special_ids=specials, eval_every=25)
            for _ in range(2)]
    assert runs[0]["steps"] == runs[1]["steps"] == [0, 25, 50, 75, 100]
    assert runs[0]["losses"] == runs[1]["losses"]
    assert not runs[0]["diverged"]


# -------------------------------------------------------------- summarize

def _run(arm, seed, steps, losses, diverged=False):
    return {"arm": arm, "seed": seed, "steps": steps, "losses": losses,
            "diverged": diverged}


def test_summarize_ratio():
    runs = [
        _run("transplant", 0, [0, 50, 100], [5.0, 3.9, 3.0]),
        _run("random", 0, [0, 50, 100], [6.0, 5.0, 4.0]),
    ]
    rep = summarize(small_config(), runs, eval_every=50)
    entry = rep["per_seed"][0]
    assert entry["compared"]
    assert entry["random_final_loss"] == 4.0
    assert entry["transplant_steps_to_match"] == 50
    assert entry["random_steps_to_match"] == 100
    assert entry["ratio"] == 0.5
    assert rep["median_ratio"] == 0.5
    assert rep["seeds_compared"] == [0]


def test_summarize_divergence_excludes_seed():
    runs = [
        _run("transplant", 0, [0], [float("nan")], diverged=True),
        _run("random", 0, [0, 50, 100], [6.0, 5.0, 4.0]),
        _run("transplant", 1, [0, 50, 100], [5.0, 3.9, 3.0]),
        _run("random", 1, [0, 50, 100], [6.0, 5.0, 4.0]),
    ]
    rep = summarize(small_config(), runs, eval_every=50)
    assert rep["per_seed"][0] == {"seed": 0, "compared": False,
                                 "reason": "divergence"}
    assert rep["seeds_compared"] == [1]
    assert rep["median_ratio"] == 0.5


def test_summarize_missing_arm():
    runs = [_run("transplant", 0, [0, 50, 100], [5.0, 4.0, 3.0])]
    rep = summarize(small_config(), runs, eval_every=50)
    assert rep["per_seed"][0]["reason"] == "missing arm"
    assert rep["median_ratio"] is None


def test_summarize_never_reached():
    runs = [
        _run("transplant", 0, [0, 50, 100], [9.0, 8.0, 7.0]),
        _run("random", 0, [0, 50, 100], [6.0, 5.0, 4.0]),
    ]
    rep = summarize(small_config(), runs, eval_every=50)
    assert rep["per_seed"][0]["ratio"] is None
    assert rep["median_ratio"] is None


def test_summarize_median_over_seeds():
    runs = []
    for seed, t_loss in ((0, 3.9), (1, 4.0), (2, 5.0)):
        runs.append(_run("transplant", seed, [0, 50, 100],
                         [5.5, t_loss, 3.0]))
        runs.append(_run("random", seed, [0, 50, 100], [6.0, 5.0, 4.0]))
    rep = summarize(small_config(), runs, eval_every=50)
    ratios = [e["ratio"] for e in rep["per_seed"]]
    assert ratios == [0.5, 0.5, 1.0]
    assert rep["median_ratio"] == 0.5


# ------------------------------------------------------------- comparison

def test_comparison_rejects_width_mismatch(synth_export, color_corpus):
    with pytest.raises(AdapterError, match="must equal the export"):
        run_convergence_comparison(small_config(hidden=16),
                                   color_corpus, synth_export["dir"])


def test_comparison_report_structure(synth_export, color_corpus, tmp_path):
    out = tmp_path / "report.json"
    rep = run_convergence_comparison(
        small_config(seeds=[0, 1]), color_corpus, synth_export["dir"],
        eval_every=50, out_path=out)
    pairs = sorted((r["arm"], r["seed"]) for r in rep["runs"])
    assert pairs == [("random", 0), ("random", 1),
                     ("transplant", 0), ("transplant", 1)]
    for run in rep["runs"]:
        assert run["steps"][0] == 0 and run["steps"][-1] == 100
        assert len(run["steps"]) == len(run["losses"])
        assert all(math.isfinite(x) for x in run["losses"])
    assert rep["criterion"] == "steps_to_matched_loss"
    assert rep["config"]["hidden"] == 8
    assert rep["config"]["seeds"] == [0, 1]
    assert len(rep["per_seed"]) == 2
    on_disk = json.loads(out.read_text(encoding="utf-8"))
    assert on_disk["per_seed"] == rep["per_seed"]
    assert on_disk["median_ratio"] == rep["median_ratio"]
