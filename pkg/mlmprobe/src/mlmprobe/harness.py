"""Convergence comparison: transplant-initialized vs random-initialized rows.

Two copies of one checkpoint train on the same data with the same seeds;
they differ only in the appended embedding rows (one arm copies the export,
the other samples a diagonal Gaussian fitted on the exported base rows).
The report records eval-loss curves per (arm, seed) and the step at which
each arm first reaches the random arm's final eval loss.
"""

import hashlib
import json
import math
import os
import statistics
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .artifacts import TransplantArtifacts, load_artifacts
from .errors import AdapterError
from .model import ToyMLM, ToyMLMConfig, load_checkpoint, make_checkpoint
from .patch import DECODER_B_KEY, DECODER_W_KEY, EMBED_KEY, patch_embeddings
from .tokenizer import WordPieceTokenizer

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
EVAL_MASK_SEED = 9999
MAX_EVAL_BLOCKS = 128


def prepare_blocks(corpus_path: str | os.PathLike,
                   tokenizer: WordPieceTokenizer,
                   seq_len: int) -> torch.Tensor:
    """Tokenize the corpus into full-length training blocks."""
    stream: list[int] = []
    with open(corpus_path, encoding="utf-8") as fh:
        for line in fh:
            stream.extend(tokenizer.encode_line(line))
    n_blocks = len(stream) // seq_len
    if n_blocks < 4:
        raise AdapterError(
            f"corpus yields only {n_blocks} blocks of {seq_len} tokens; "
            f"need at least 4")
    ids = torch.tensor(stream[:n_blocks * seq_len], dtype=torch.long)
    return ids.view(n_blocks, seq_len)


def mask_batch(batch: torch.Tensor, mask_prob: float, mask_id: int,
               vocab_size: int, special_ids: set[int],
               generator: torch.Generator):
    """BERT-style masking: 80% mask token, 10% random token, 10% unchanged.

    Returns (inputs, labels); unselected positions carry label -100.
    """
    special = torch.zeros(vocab_size, dtype=torch.bool)
    special[list(special_ids)] = True
    candidates = ~special[batch]
    selected = (torch.rand(batch.shape, generator=generator)
                < mask_prob) & candidates
    if not selected.any():
        # degenerate tiny batch: force one position so the loss is defined
        flat = candidates.flatten().nonzero()
        if len(flat) == 0:
            raise AdapterError("batch contains only special tokens")
        selected.flatten()[flat[0]] = True
    labels = torch.where(selected, batch,
                         torch.full_like(batch, -100))
    action = torch.rand(batch.shape, generator=generator)
    inputs = batch.clone()
    inputs[selected & (action < 0.8)] = mask_id
    random_ids = torch.randint(vocab_size, batch.shape,
                               generator=generator)
    swap = selected & (action >= 0.8) & (action < 0.9)
    inputs[swap] = random_ids[swap]
    return inputs, labels


def fingerprint_non_appended(checkpoint: dict, base_count: int) -> dict:
    """Hash every tensor, restricting row-grown tensors to their base slice."""
    out = {}
    for name, tensor in checkpoint["state"].items():
        if name in (EMBED_KEY, DECODER_W_KEY):
            view = tensor[:base_count]
        elif name == DECODER_B_KEY:
            view = tensor[:base_count]
        else:
            view = tensor
        data = view.detach().contiguous().numpy().tobytes()
        out[name] = hashlib.sha256(data).hexdigest()
    return out


def randomize_appended(checkpoint: dict, artifacts: TransplantArtifacts,
                       seed: int) -> dict:
    """Replace appended embedding rows with draws from the base-row Gaussian.

    The Gaussian is fitted per dimension (mean, population variance) on the
    exported base rows, matching the exporter's own fallback family.
    """
    n_base = artifacts.base_count
    n_app = len(artifacts.appended)
    base = artifacts.matrix[:n_base].astype(np.float64)
    mean = base.mean(axis=0)
    std = np.sqrt(base.var(axis=0, ddof=0))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11]))
    rows = mean + std * rng.standard_normal((n_app, artifacts.dim))
    rows_t = torch.from_numpy(rows.astype(np.float32))

    new_state = {name: tensor.clone()
                 for name, tensor in checkpoint["state"].items()}
    new_embed = new_state[EMBED_KEY]
    if new_embed.shape[0] != n_base + n_app:
        raise AdapterError("checkpoint is not patched to the merged size")
    new_embed[n_base:] = rows_t
    if checkpoint["tied"]:
        new_state[DECODER_W_KEY] = new_embed
    else:
        new_state[DECODER_W_KEY][n_base:] = rows_t.clone()
    return {"state": new_state, "vocab_size": checkpoint["vocab_size"],
            "hidden": checkpoint["hidden"], "tied": checkpoint["tied"]}


def pretrain_base(corpus_path: str | os.PathLike,
                  artifacts: TransplantArtifacts, config: ToyMLMConfig,
                  steps: int, lr: float, seed: int,
                  tied: bool = True) -> dict:
    """Train a base-vocabulary model whose embedding rows stay frozen.

    The exported base rows ARE the checkpoint's embedding table; freezing
    them during base pre-training keeps that identity, so the encoder
    learns to read exactly the space the appended rows were built in.
    """
    n_base = artifacts.base_count
    base_tokens = artifacts.tokens[:n_base]
    tokenizer = WordPieceTokenizer(base_tokens)
    special_ids = {tokenizer.id_of(t) for t in SPECIAL_TOKENS
                   if t in tokenizer}
    if "[MASK]" not in tokenizer:
        raise AdapterError("base vocabulary lacks [MASK]")
    mask_id = tokenizer.id_of("[MASK]")
    blocks = prepare_blocks(corpus_path, tokenizer, config.seq_len)

    torch.manual_seed(seed)
    model = ToyMLM(n_base, config, tied=tied)
    with torch.no_grad():
        model.embed.weight.copy_(
            torch.from_numpy(artifacts.matrix[:n_base].copy()))
    model.embed.weight.requires_grad_(False)
    model.train()
    optimizer = torch.optim.AdamW(
        [p for p in model.parameters() if p.requires_grad], lr=lr)
    generator = torch.Generator().manual_seed(seed * 7_919 + 3)
    loss_fn = nn.CrossEntropyLoss()
    for _ in range(steps):
        picks = torch.randint(blocks.shape[0], (config.batch,),
                              generator=generator)
        inputs, labels = mask_batch(blocks[picks], config.mask_prob,
                                    mask_id, n_base, special_ids,
                                    generator)
        loss = loss_fn(model(inputs).flatten(0, 1), labels.flatten())
        if not torch.isfinite(loss):
            raise AdapterError(
                f"base pre-training diverged at lr {lr}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    model.embed.weight.requires_grad_(True)
    return make_checkpoint(model)


def _eval_loss(model: ToyMLM, inputs: torch.Tensor, labels: torch.Tensor,
               batch: int) -> float:
    model.eval()
    total, count = 0.0, 0
    loss_fn = nn.CrossEntropyLoss(reduction="sum")
    with torch.no_grad():
        for start in range(0, inputs.shape[0], batch):
            logits = model(inputs[start:start + batch])
            chunk_labels = labels[start:start + batch]
            total += float(loss_fn(logits.flatten(0, 1),
                                   chunk_labels.flatten()))
            count += int((chunk_labels != -100).sum())
    model.train()
    return total / count


def train_arm(checkpoint: dict, config: ToyMLMConfig,
              train_blocks: torch.Tensor, eval_inputs: torch.Tensor,
              eval_labels: torch.Tensor, seed: int, mask_id: int,
              special_ids: set[int], eval_every: int) -> dict:
    """Train one arm; returns its eval curve and divergence flag."""
    torch.manual_seed(seed)
    model = load_checkpoint(checkpoint, config)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    generator = torch.Generator().manual_seed(seed * 1_000_003 + 17)
    vocab_size = checkpoint["vocab_size"]

    steps, losses = [], []
    diverged = False

    def record(step):
        loss = _eval_loss(model, eval_inputs, eval_labels, config.batch)
        steps.append(step)
        losses.append(loss)
        return math.isnan(loss)

    if record(0):
        return {"steps": steps, "losses": losses, "diverged": True}
    loss_fn = nn.CrossEntropyLoss()
    for step in range(1, config.steps + 1):
        picks = torch.randint(train_blocks.shape[0], (config.batch,),
                              generator=generator)
        batch = train_blocks[picks]
        inputs, labels = mask_batch(batch, config.mask_prob, mask_id,
                                    vocab_size, special_ids, generator)
        logits = model(inputs)
        loss = loss_fn(logits.flatten(0, 1), labels.flatten())
        if not torch.isfinite(loss):
            diverged = True
            break
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        if step % eval_every == 0 or step == config.steps:
            if record(step):
                diverged = True
                break
    return {"steps": steps, "losses": losses, "diverged": diverged}


def _first_reach(curve: dict, target: float):
    for step, loss in zip(curve["steps"], curve["losses"]):
        if loss <= target:
            return step
    return None


def summarize(config: ToyMLMConfig, runs: list[dict],
              eval_every: int) -> dict:
    """Reduce per-run curves to steps-to-matched-loss ratios."""
    by_seed: dict[int, dict[str, dict]] = {}
    for run in runs:
        by_seed.setdefault(run["seed"], {})[run["arm"]] = run
    per_seed, ratios = [], []
    for seed in sorted(by_seed):
        arms = by_seed[seed]
        entry = {"seed": seed}
        transplant, random_arm = arms.get("transplant"), arms.get("random")
        if (transplant is None or random_arm is None
                or transplant["diverged"] or random_arm["diverged"]):
            entry["compared"] = False
            entry["reason"] = "divergence" if (
                transplant and random_arm) else "missing arm"
            per_seed.append(entry)
            continue
        target = random_arm["losses"][-1]
        t_steps = _first_reach(transplant, target)
        r_steps = _first_reach(random_arm, target)
        entry.update({
            "compared": True,
            "random_final_loss": target,
            "transplant_steps_to_match": t_steps,
            "random_steps_to_match": r_steps,
        })
        if t_steps is None:
            entry["ratio"] = None
            ratios.append(math.inf)
        elif r_steps == 0:
            # the random arm never improves on its own starting loss
            entry["ratio"] = 0.0 if t_steps == 0 else None
            ratios.append(0.0 if t_steps == 0 else math.inf)
        else:
            entry["ratio"] = t_steps / r_steps
            ratios.append(t_steps / r_steps)
        per_seed.append(entry)
    median = statistics.median(ratios) if ratios else None
    if median is not None and math.isinf(median):
        median = None
    return {
        "criterion": "steps_to_matched_loss",
        "note": ("steps for the transplant arm to first reach the random "
                 "arm's final eval loss; this operationalizes the "
                 "convergence-speed claim, since no reference loss curves "
                 "exist to compare against"),
        "eval_every": eval_every,
        "config": {"layers": config.layers, "hidden": config.hidden,
                   "heads": config.heads, "seq_len": config.seq_len,
                   "batch": config.batch, "steps": config.steps,
                   "lr": config.lr, "mask_prob": config.mask_prob,
                   "seeds": list(config.seeds)},
        "runs": runs,
        "per_seed": per_seed,
        "seeds_compared": [e["seed"] for e in per_seed if e["compared"]],
        "median_ratio": median,
    }


def run_convergence_comparison(config: ToyMLMConfig,
                               corpus_path: str | os.PathLike,
                               export_dir: str | os.PathLike,
                               eval_every: int = 20,
                               out_path: str | os.PathLike | None = None,
                               tied: bool = True,
                               base_corpus: str | os.PathLike | None = None,
                               pretrain_steps: int = 400,
                               pretrain_lr: float = 1e-3) -> dict:
    """Run both arms over every seed and write report.json if asked.

    With `base_corpus` given, each seed's starting checkpoint is first
    pre-trained on it over the base vocabulary (embedding rows frozen at
    the exported base rows), which is what makes the appended-row
    comparison a continued-training experiment rather than training from
    scratch. Without it the base checkpoint is freshly initialized.
    """
    artifacts = load_artifacts(export_dir)
    if config.hidden != artifacts.dim:
        raise AdapterError(
            f"config.hidden {config.hidden} must equal the export "
            f"dimension {artifacts.dim} (the embedding table is shared)")
    tokenizer = WordPieceTokenizer(artifacts.tokens)
    if "[MASK]" not in artifacts:
        raise AdapterError("vocabulary lacks [MASK]")
    mask_id = artifacts.id_of("[MASK]")
    special_ids = {artifacts.id_of(t) for t in SPECIAL_TOKENS
                   if t in artifacts}

    blocks = prepare_blocks(corpus_path, tokenizer, config.seq_len)
    n_eval = min(MAX_EVAL_BLOCKS, max(1, blocks.shape[0] // 10))
    train_blocks, eval_blocks = blocks[:-n_eval], blocks[-n_eval:]
    eval_gen = torch.Generator().manual_seed(EVAL_MASK_SEED)
    eval_inputs, eval_labels = mask_batch(
        eval_blocks, config.mask_prob, mask_id, len(artifacts.tokens),
        special_ids, eval_gen)

    runs = []
    for seed in config.seeds:
        if base_corpus is not None:
            base_ckpt = pretrain_base(base_corpus, artifacts, config,
                                      pretrain_steps, pretrain_lr, seed,
                                      tied=tied)
        else:
            torch.manual_seed(seed)
            base_model = ToyMLM(artifacts.base_count, config, tied=tied)
            base_ckpt = make_checkpoint(base_model)
        arm_t = patch_embeddings(base_ckpt, artifacts)
        arm_r = randomize_appended(arm_t, artifacts, seed)
        fp_t = fingerprint_non_appended(arm_t, artifacts.base_count)
        fp_r = fingerprint_non_appended(arm_r, artifacts.base_count)
        if fp_t != fp_r:
            bad = [k for k in fp_t if fp_t[k] != fp_r[k]]
            raise AdapterError(
                f"arms differ outside the appended rows: {bad}")
        n_base = artifacts.base_count
        if torch.equal(arm_t["state"][EMBED_KEY][n_base:],
                       arm_r["state"][EMBED_KEY][n_base:]):
            raise AdapterError("arms have identical appended rows; "
                               "nothing is being compared")
        for arm_name, ckpt in (("transplant", arm_t), ("random", arm_r)):
            curve = train_arm(ckpt, config, train_blocks, eval_inputs,
                              eval_labels, seed, mask_id, special_ids,
                              eval_every)
            runs.append({"arm": arm_name, "seed": seed, **curve})

    report = summarize(config, runs, eval_every)
    report["export_dir"] = str(export_dir)
    report["corpus"] = str(corpus_path)
    report["base_corpus"] = None if base_corpus is None else str(base_corpus)
    report["pretrain_steps"] = 0 if base_corpus is None else pretrain_steps
    report["pretrain_lr"] = None if base_corpus is None else pretrain_lr
    report["base_count"] = artifacts.base_count
    report["appended_count"] = len(artifacts.appended)
    if out_path is not None:
        Path(out_path).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    return report
