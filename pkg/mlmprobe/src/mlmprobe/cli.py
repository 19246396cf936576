"""Command line entry: run the convergence comparison and write report.json."""

import argparse
import json
import sys
from pathlib import Path

from .errors import AdapterError
from .harness import run_convergence_comparison
from .model import ToyMLMConfig


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mlmprobe",
        description="Measure continued-training convergence of a patched "
                    "toy masked-LM: transplant-initialized vs "
                    "random-initialized appended rows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="train both arms and write a report")
    p.add_argument("--export-dir", required=True,
                   help="directory with vocab.txt, matrix.bin, "
                        "provenance.jsonl")
    p.add_argument("--corpus", required=True,
                   help="continued-training corpus (new language)")
    p.add_argument("--base-corpus", default=None,
                   help="pre-training corpus for the base checkpoint; "
                        "without it the base model starts untrained")
    p.add_argument("--pretrain-steps", type=int, default=400)
    p.add_argument("--pretrain-lr", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="report.json path")
    p.add_argument("--steps", type=int, default=ToyMLMConfig().steps)
    p.add_argument("--hidden", type=int, default=None,
                   help="model width; defaults to the export's dimension")
    p.add_argument("--lr", type=float, default=ToyMLMConfig().lr)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--eval-every", type=int, default=20)
    p.add_argument("--batch", type=int, default=ToyMLMConfig().batch)
    p.add_argument("--seq-len", type=int, default=ToyMLMConfig().seq_len)
    p.add_argument("--untied", action="store_true",
                   help="use a separate output projection")
    p.set_defaults(func=cmd_compare)
    return parser


def cmd_compare(args) -> int:
    hidden = args.hidden
    if hidden is None:
        sidecar = Path(args.export_dir) / "matrix.json"
        try:
            hidden = int(json.loads(
                sidecar.read_text(encoding="utf-8"))["dim"])
        except (OSError, ValueError, KeyError):
            raise AdapterError(
                f"cannot read export dimension from {sidecar}; "
                f"pass --hidden") from None
    config = ToyMLMConfig(steps=args.steps, lr=args.lr, seeds=args.seeds,
                          batch=args.batch, seq_len=args.seq_len,
                          hidden=hidden)
    report = run_convergence_comparison(
        config, args.corpus, args.export_dir,
        eval_every=args.eval_every, out_path=args.out,
        tied=not args.untied, base_corpus=args.base_corpus,
        pretrain_steps=args.pretrain_steps, pretrain_lr=args.pretrain_lr)
    for entry in report["per_seed"]:
        if entry["compared"]:
            print(f"seed {entry['seed']}: transplant "
                  f"{entry['transplant_steps_to_match']} vs random "
                  f"{entry['random_steps_to_match']} steps "
                  f"(ratio {entry['ratio']})")
        else:
            print(f"seed {entry['seed']}: not compared "
                  f"({entry['reason']})")
    print(f"median ratio: {report['median_ratio']}")
    print(f"report written to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
