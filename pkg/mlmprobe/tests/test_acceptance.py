"""Acceptance gate: continued training must favor transplanted rows.

The patched model (transplant arm) must reach the random arm's final eval
loss in at most 0.9x the steps the random arm used, median over three
seeds, on a real export produced by the exporter CLI. The base checkpoint
is pre-trained past the point where it reads its frozen embedding space;
without that no initialization of new rows can matter.
"""

import contextlib
import json
import sys

import torch

from mlmprobe import ToyMLMConfig, run_convergence_comparison

RATIO_BOUND = 0.9
SEEDS = [0, 1, 2]
CONTINUED_STEPS = 200
CONTINUED_LR = 3e-4
PRETRAIN_STEPS = 4000
PRETRAIN_LR = 1e-3
EVAL_EVERY = 10


@contextlib.contextmanager
def _gate(name):
    try:
        yield
    except BaseException:
        print(f"acceptance {name}: FAIL", file=sys.__stdout__)
        raise
    print(f"acceptance {name}: PASS", file=sys.__stdout__)


def test_transplant_convergence_advantage(cipher_run, tmp_path):
    with _gate("transplant-convergence-advantage"):
        torch.set_num_threads(4)
        sidecar = json.loads(
            (cipher_run["export"] / "matrix.json").read_text(
                encoding="utf-8"))
        config = ToyMLMConfig(hidden=int(sidecar["dim"]),
                              steps=CONTINUED_STEPS, lr=CONTINUED_LR,
                              seeds=SEEDS)
        out_path = tmp_path / "report.json"
        report = run_convergence_comparison(
            config, cipher_run["target"], cipher_run["export"],
            eval_every=EVAL_EVERY, out_path=out_path,
            base_corpus=cipher_run["source"],
            pretrain_steps=PRETRAIN_STEPS, pretrain_lr=PRETRAIN_LR)

        # one curve per (arm, seed), none lost
        pairs = sorted((r["arm"], r["seed"]) for r in report["runs"])
        assert pairs == sorted(
            (arm, seed) for arm in ("transplant", "random")
            for seed in SEEDS)
        # every seed survived to comparison
        assert report["seeds_compared"] == SEEDS

        on_disk = json.loads(out_path.read_text(encoding="utf-8"))
        assert on_disk["median_ratio"] == report["median_ratio"]

        median = report["median_ratio"]
        for entry in report["per_seed"]:
            print(f"  seed {entry['seed']}: ratio {entry['ratio']}",
                  file=sys.__stdout__)
        print(f"  median ratio: {median} (bound {RATIO_BOUND})",
              file=sys.__stdout__)
        assert median is not None
        assert median <= RATIO_BOUND
