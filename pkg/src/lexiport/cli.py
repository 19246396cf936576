"""Command-line pipeline and per-stage subcommands.

`lexiport run` chains screen -> induce target vocab -> train/ingest
embeddings -> fit+apply alignment -> build static tables -> transplant ->
export, with every inter-stage artifact persisted under the output dir and
cached by content digest, so an unchanged rerun executes nothing. The
individual stages are also exposed as their own subcommands. Exit codes:
0 success, 1 usage or config error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields as dc_fields
from pathlib import Path

import yaml

from . import __version__
from .align import apply_map, fit_alignment, load_map, parse_lexicon, save_map
from .corpus import CorpusStream
from .errors import ConfigError, LexiportError, StageError
from .fixtures import make_cipher_fixture
from .synth import SynthConfig, VocabEmbeddingTable, build_table
from .trainer import (MODEL_MAGIC, TrainerConfig, load_model, save_model,
                      train_cbow_subword)
from .transplant import (TransplantConfig, export_result, run_transplant,
                         sha256_file)
from .vecio import load_matrix, load_vec, save_vec
from .vocab import (Vocabulary, induce_wordpiece_vocab, load_source_set,
                    save_source_set, screen_source_vocab)

_PATH_KEYS = ("source_corpus", "target_corpus", "base_vocab", "base_matrix",
              "source_vocab", "lexicon", "source_vectors", "output_dir")
_FLAG_KEYS = ("normalize_before_align", "ngram_mean", "ngram_markers")
_TRAINER_KEYS = tuple(f.name for f in dc_fields(TrainerConfig))
_TRANSPLANT_KEYS = ("k", "tau", "seed")
_TOP_KEYS = ("paths", "vocab_size", "seed", "flags", "trainer", "transplant")


@dataclass
class PipelineConfig:
    """Fully resolved run configuration; all paths absolute."""

    paths: dict[str, Path | None]
    vocab_size: int = 30000
    seed: int = 1
    normalize_before_align: bool = False
    ngram_mean: bool = False
    ngram_markers: bool = True
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    transplant: TransplantConfig = field(default_factory=TransplantConfig)

    def to_dict(self) -> dict:
        return {
            "paths": {k: None if v is None else str(v)
                      for k, v in self.paths.items()},
            "vocab_size": self.vocab_size,
            "seed": self.seed,
            "flags": {
                "normalize_before_align": self.normalize_before_align,
                "ngram_mean": self.ngram_mean,
                "ngram_markers": self.ngram_markers,
            },
            "trainer": asdict(self.trainer),
            "transplant": {"k": self.transplant.k, "tau": self.transplant.tau,
                           "seed": self.transplant.seed},
        }


def _expect_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return value


def _expect_number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _expect_bool(value, name: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{name}: expected a boolean, got {value!r}")
    return value


def _expect_section(value, name: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping, got {value!r}")
    return value


def _reject_unknown(section: dict, known, prefix: str) -> None:
    for key in section:
        qualified = f"{prefix}.{key}" if prefix else str(key)
        if key not in known:
            raise ConfigError(f"unknown config key '{qualified}'")


def parse_config(config_path: str | os.PathLike | None = None,
                 overrides: argparse.Namespace | None = None
                 ) -> PipelineConfig:
    """Load the config file, apply flag overrides, and resolve defaults.

    Unknown keys are rejected by their dotted path. Paths from the file are
    resolved relative to the file; paths from flags relative to the cwd.
    Stage seeds default to the top-level seed unless set explicitly.
    """
    data: dict = {}
    base = Path.cwd()
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        base = config_path.parent
        try:
            data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {config_path}: {exc}") from None
        data = _expect_section(data, "config")
    _reject_unknown(data, _TOP_KEYS, "")
    paths_in = _expect_section(data.get("paths"), "paths")
    _reject_unknown(paths_in, _PATH_KEYS, "paths")
    flags_in = _expect_section(data.get("flags"), "flags")
    _reject_unknown(flags_in, _FLAG_KEYS, "flags")
    trainer_in = dict(_expect_section(data.get("trainer"), "trainer"))
    _reject_unknown(trainer_in, _TRAINER_KEYS, "trainer")
    transplant_in = dict(_expect_section(data.get("transplant"), "transplant"))
    _reject_unknown(transplant_in, _TRANSPLANT_KEYS, "transplant")

    paths: dict[str, Path | None] = {k: None for k in _PATH_KEYS}
    for key, value in paths_in.items():
        if value is None:
            continue
        if not isinstance(value, str):
            raise ConfigError(f"paths.{key}: expected a path string, "
                              f"got {value!r}")
        paths[key] = (base / value).absolute()

    vocab_size = _expect_int(data.get("vocab_size", 30000), "vocab_size")
    seed = _expect_int(data.get("seed", 1), "seed")
    flag_values = {k: _expect_bool(flags_in[k], f"flags.{k}")
                   for k in flags_in}

    ov = overrides or argparse.Namespace()

    def over(name):
        return getattr(ov, name, None)

    for key in _PATH_KEYS:
        if over(key) is not None:
            paths[key] = Path(over(key)).absolute()
    if over("vocab_size") is not None:
        vocab_size = _expect_int(over("vocab_size"), "vocab_size")
    if over("seed") is not None:
        seed = _expect_int(over("seed"), "seed")
    for key in _FLAG_KEYS:
        if over(key) is not None:
            flag_values[key] = bool(over(key))
    for key in ("dim", "epochs", "negatives", "window", "min_count",
                "workers", "bucket_count", "n_min", "n_max"):
        if over(key) is not None:
            trainer_in[key] = _expect_int(over(key), f"trainer.{key}")
    if over("initial_lr") is not None:
        trainer_in["initial_lr"] = over("initial_lr")
    if over("k") is not None:
        transplant_in["k"] = _expect_int(over("k"), "transplant.k")
    if over("tau") is not None:
        transplant_in["tau"] = over("tau")

    for key in ("dim", "epochs", "negatives", "window", "min_count",
                "seed", "workers", "bucket_count", "n_min", "n_max"):
        if key in trainer_in:
            trainer_in[key] = _expect_int(trainer_in[key], f"trainer.{key}")
    if "initial_lr" in trainer_in:
        trainer_in["initial_lr"] = _expect_number(
            trainer_in["initial_lr"], "trainer.initial_lr")
    trainer_in.setdefault("seed", seed)
    try:
        trainer = TrainerConfig(**trainer_in)
    except LexiportError as exc:
        raise ConfigError(f"trainer: {exc}") from None

    if "k" in transplant_in:
        transplant_in["k"] = _expect_int(transplant_in["k"], "transplant.k")
    if "tau" in transplant_in:
        transplant_in["tau"] = _expect_number(transplant_in["tau"],
                                              "transplant.tau")
    if "seed" in transplant_in:
        transplant_in["seed"] = _expect_int(transplant_in["seed"],
                                            "transplant.seed")
    transplant_in.setdefault("seed", seed)
    try:
        transplant = TransplantConfig(**transplant_in)
    except LexiportError as exc:
        raise ConfigError(f"transplant: {exc}") from None

    if vocab_size < 1:
        raise ConfigError(f"vocab_size: must be >= 1, got {vocab_size}")
    return PipelineConfig(paths, vocab_size, seed,
                          flag_values.get("normalize_before_align", False),
                          flag_values.get("ngram_mean", False),
                          flag_values.get("ngram_markers", True),
                          trainer, transplant)


def _load_embedding_source(path: Path):
    """Open a trained model dump or a .vec table, detected by magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(MODEL_MAGIC))
    if head == MODEL_MAGIC:
        return load_model(path)
    return load_vec(path)


def _run_stage(name: str, stage_dir: Path, inputs: list[Path], params: dict,
               outputs: list[str], fn, force: bool, echo) -> int:
    """Execute one cached stage; returns 1 if it ran, 0 if up-to-date."""
    for p in inputs:
        if not Path(p).exists():
            raise StageError(name, f"missing input path: {p}")
    key_src = {
        "stage": name,
        "params": params,
        "inputs": {str(p): sha256_file(p) for p in sorted(inputs)},
    }
    key = hashlib.sha256(
        json.dumps(key_src, sort_keys=True).encode("utf-8")).hexdigest()
    stamp_path = stage_dir / "stamp.json"
    if not force and stamp_path.exists():
        try:
            stamp = json.loads(stamp_path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            stamp = None
        if (stamp and stamp.get("key") == key
                and all((stage_dir / o).exists() for o in outputs)):
            echo(f"stage {name}: up-to-date")
            return 0
    echo(f"stage {name}: running")
    stage_dir.mkdir(parents=True, exist_ok=True)
    if stamp_path.exists():
        stamp_path.unlink()
    try:
        fn()
    except StageError:
        raise
    except LexiportError as exc:
        raise StageError(name, str(exc)) from exc
    for o in outputs:
        if not (stage_dir / o).exists():
            raise StageError(name, f"stage did not produce {o}")
    stamp_path.write_text(
        json.dumps({"key": key, "outputs": outputs}, indent=2) + "\n",
        encoding="utf-8")
    return 1


def run_pipeline(cfg: PipelineConfig, force: bool = False,
                 echo=print) -> Path:
    """Run every stage, skipping those whose inputs and params are unchanged.

    Returns the transplant output directory. Concurrent runs on one output
    dir are rejected via a lock file.
    """
    out_root = cfg.paths.get("output_dir")
    if out_root is None:
        raise ConfigError("paths.output_dir is required")
    out_root.mkdir(parents=True, exist_ok=True)
    lock_path = out_root / ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise StageError(
            "lock", f"output dir {out_root} is in use by another run "
                    f"(remove {lock_path} if stale)") from None
    os.write(fd, f"{os.getpid()}\n".encode())
    os.close(fd)

    screen_dir = out_root / "screen"
    vocab_dir = out_root / "vocab"
    emb_src_dir = out_root / "emb_src"
    emb_tgt_dir = out_root / "emb_tgt"
    align_dir = out_root / "align"
    tables_dir = out_root / "tables"
    transplant_dir = out_root / "transplant"
    src_is_vec = cfg.paths.get("source_vectors") is not None
    emb_src_file = emb_src_dir / ("vectors.vec" if src_is_vec else "model.bin")
    emb_tgt_file = emb_tgt_dir / "model.bin"
    synth_cfg = SynthConfig(cfg.trainer.n_min, cfg.trainer.n_max,
                            cfg.ngram_mean, cfg.ngram_markers)

    def _need(key: str) -> Path:
        p = cfg.paths.get(key)
        if p is None:
            raise ConfigError(f"paths.{key} is required")
        return p

    def do_screen():
        mono = Vocabulary.load(_need("source_vocab"))
        base_vocab = Vocabulary.load(_need("base_vocab"))
        base_matrix = load_matrix(_need("base_matrix"))
        save_source_set(screen_source_vocab(mono, base_vocab, base_matrix),
                        screen_dir)

    def do_vocab():
        stream = CorpusStream(_need("target_corpus"))
        vocab = induce_wordpiece_vocab(stream, cfg.vocab_size,
                                       min_frequency=1)
        vocab.save(vocab_dir / "vocab.txt")

    def do_emb_src():
        if src_is_vec:
            save_vec(load_vec(_need("source_vectors")), emb_src_file)
        else:
            model = train_cbow_subword(CorpusStream(_need("source_corpus")),
                                       cfg.trainer)
            save_model(model, emb_src_file)

    def do_emb_tgt():
        model = train_cbow_subword(CorpusStream(_need("target_corpus")),
                                   cfg.trainer)
        save_model(model, emb_tgt_file)

    def do_align():
        lexicon = parse_lexicon(_need("lexicon"))
        source = _load_embedding_source(emb_src_file)
        target = _load_embedding_source(emb_tgt_file)
        omap = fit_alignment(lexicon, source, target,
                             normalize=cfg.normalize_before_align)
        save_map(omap, align_dir / "map.bin")
        (align_dir / "stats.json").write_text(json.dumps(
            {"pairs_used": omap.fit_stats[0],
             "residual": omap.fit_stats[1]}, indent=2) + "\n",
            encoding="utf-8")

    def do_tables():
        source_set = load_source_set(screen_dir)
        source = _load_embedding_source(emb_src_file)
        u_s = build_table(source_set.tokens, source, synth_cfg)
        save_vec(u_s.as_vector_table(), tables_dir / "u_s.vec")
        omap = load_map(align_dir / "map.bin")
        target = apply_map(omap, _load_embedding_source(emb_tgt_file))
        new_vocab = Vocabulary.load(vocab_dir / "vocab.txt")
        u_t = build_table(new_vocab, target, synth_cfg)
        save_vec(u_t.as_vector_table(), tables_dir / "u_t.vec")

    def do_transplant():
        base_vocab = Vocabulary.load(_need("base_vocab"))
        base_matrix = load_matrix(_need("base_matrix"))
        source_set = load_source_set(screen_dir)
        vt_s = load_vec(tables_dir / "u_s.vec")
        vt_t = load_vec(tables_dir / "u_t.vec")
        new_vocab = Vocabulary.load(vocab_dir / "vocab.txt")
        digests = {
            "base_vocab": sha256_file(_need("base_vocab")),
            "base_matrix": sha256_file(_need("base_matrix")),
            "source_rows": sha256_file(screen_dir / "rows.bin"),
            "u_s": sha256_file(tables_dir / "u_s.vec"),
            "u_t": sha256_file(tables_dir / "u_t.vec"),
            "new_vocab": sha256_file(vocab_dir / "vocab.txt"),
        }
        result = run_transplant(
            base_vocab, base_matrix, source_set,
            VocabEmbeddingTable.from_vectors(vt_s.tokens, vt_s.matrix),
            VocabEmbeddingTable.from_vectors(vt_t.tokens, vt_t.matrix),
            new_vocab, cfg.transplant, input_digests=digests)
        result.manifest["pipeline"] = cfg.to_dict()
        export_result(result, transplant_dir)

    executed = 0
    try:
        executed += _run_stage(
            "screen", screen_dir,
            [_need("source_vocab"), _need("base_vocab"), _need("base_matrix"),
             _need("base_matrix").with_suffix(".json")],
            {"seed": cfg.seed}, ["tokens.txt", "rows.bin", "rows.json"],
            do_screen, force, echo)
        executed += _run_stage(
            "induce-vocab", vocab_dir, [_need("target_corpus")],
            {"vocab_size": cfg.vocab_size, "min_frequency": 1},
            ["vocab.txt"], do_vocab, force, echo)
        executed += _run_stage(
            "train-src", emb_src_dir,
            [_need("source_vectors") if src_is_vec
             else _need("source_corpus")],
            {"mode": "ingest" if src_is_vec else "train",
             "trainer": asdict(cfg.trainer)},
            [emb_src_file.name], do_emb_src, force, echo)
        executed += _run_stage(
            "train-tgt", emb_tgt_dir, [_need("target_corpus")],
            {"trainer": asdict(cfg.trainer)},
            ["model.bin"], do_emb_tgt, force, echo)
        executed += _run_stage(
            "align", align_dir, [_need("lexicon"), emb_src_file, emb_tgt_file],
            {"normalize_before_align": cfg.normalize_before_align},
            ["map.bin", "map.json", "stats.json"], do_align, force, echo)
        executed += _run_stage(
            "build-tables", tables_dir,
            [screen_dir / "tokens.txt", screen_dir / "rows.bin",
             vocab_dir / "vocab.txt", emb_src_file, emb_tgt_file,
             align_dir / "map.bin"],
            {"ngram_mean": cfg.ngram_mean, "ngram_markers": cfg.ngram_markers,
             "n_min": cfg.trainer.n_min, "n_max": cfg.trainer.n_max},
            ["u_s.vec", "u_t.vec"], do_tables, force, echo)
        executed += _run_stage(
            "transplant", transplant_dir,
            [_need("base_vocab"), _need("base_matrix"),
             screen_dir / "tokens.txt", screen_dir / "rows.bin",
             tables_dir / "u_s.vec", tables_dir / "u_t.vec",
             vocab_dir / "vocab.txt"],
            {"k": cfg.transplant.k, "tau": cfg.transplant.tau,
             "seed": cfg.transplant.seed},
            ["vocab.txt", "matrix.bin", "matrix.json", "provenance.jsonl",
             "manifest.json"],
            do_transplant, force, echo)
    finally:
        lock_path.unlink(missing_ok=True)
    if executed == 0:
        echo("all stages up-to-date")
    else:
        echo(f"pipeline complete: {executed} stage(s) executed")
    return transplant_dir


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_trainer_flags(p: argparse.ArgumentParser,
                       concrete: bool) -> None:
    d = TrainerConfig() if concrete else None

    def dv(name):
        return getattr(d, name) if d is not None else None

    p.add_argument("--dim", type=int, default=dv("dim"))
    p.add_argument("--epochs", type=int, default=dv("epochs"))
    p.add_argument("--negatives", type=int, default=dv("negatives"))
    p.add_argument("--window", type=int, default=dv("window"))
    p.add_argument("--min-count", type=int, default=dv("min_count"))
    p.add_argument("--initial-lr", type=float, default=dv("initial_lr"))
    p.add_argument("--workers", type=int, default=dv("workers"))
    p.add_argument("--bucket-count", type=int, default=dv("bucket_count"))
    p.add_argument("--n-min", type=int, default=dv("n_min"))
    p.add_argument("--n-max", type=int, default=dv("n_max"))


def cmd_run(args) -> int:
    cfg = parse_config(args.config, args)
    run_pipeline(cfg, force=args.force)
    return 0


def cmd_induce_vocab(args) -> int:
    stream = CorpusStream(args.corpus)
    vocab = induce_wordpiece_vocab(stream, args.vocab_size,
                                   min_frequency=args.min_frequency)
    vocab.save(args.output)
    print(f"wrote {len(vocab)} tokens to {args.output}")
    return 0


def cmd_screen(args) -> int:
    mono = Vocabulary.load(args.mono_vocab)
    base_vocab = Vocabulary.load(args.base_vocab)
    base_matrix = load_matrix(args.base_matrix)
    source_set = screen_source_vocab(mono, base_vocab, base_matrix,
                                     subsample=args.subsample,
                                     seed=args.seed)
    save_source_set(source_set, args.output_dir)
    print(f"screened {len(source_set.tokens)} shared tokens "
          f"into {args.output_dir}")
    return 0


def cmd_train_embeddings(args) -> int:
    config = TrainerConfig(
        dim=args.dim, epochs=args.epochs, negatives=args.negatives,
        window=args.window, min_count=args.min_count,
        initial_lr=args.initial_lr, seed=args.seed, workers=args.workers,
        bucket_count=args.bucket_count, n_min=args.n_min, n_max=args.n_max)
    model = train_cbow_subword(CorpusStream(args.corpus), config)
    save_model(model, args.output)
    print(f"trained {len(model)} words (dim {model.dim}), "
          f"final epoch loss {model.epoch_losses[-1]:.4f}")
    if args.export_vec:
        save_vec(model.as_vector_table(), args.export_vec)
        print(f"exported vectors to {args.export_vec}")
    return 0


def cmd_align(args) -> int:
    lexicon = parse_lexicon(args.lexicon)
    source = _load_embedding_source(Path(args.source))
    target = _load_embedding_source(Path(args.target))
    omap = fit_alignment(lexicon, source, target,
                         normalize=args.normalize_before_align)
    save_map(omap, args.output)
    pairs, residual = omap.fit_stats
    print(f"fitted map on {pairs} pairs, residual {residual:.6f}")
    return 0


def cmd_build_tables(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    model = _load_embedding_source(Path(args.model))
    if args.map:
        model = apply_map(load_map(args.map), model)
    config = SynthConfig(args.n_min, args.n_max, args.ngram_mean,
                         args.ngram_markers)
    table = build_table(vocab, model, config)
    save_vec(table.as_vector_table(), args.output)
    masked = int(table.zero_mask.sum())
    print(f"built {len(table)} rows ({masked} zero-masked) "
          f"into {args.output}")
    return 0


def cmd_transplant(args) -> int:
    base_vocab = Vocabulary.load(args.base_vocab)
    base_matrix = load_matrix(args.base_matrix)
    source_set = load_source_set(args.source_set)
    vt_s = load_vec(args.u_s)
    vt_t = load_vec(args.u_t)
    new_vocab = Vocabulary.load(args.new_vocab)
    config = TransplantConfig(k=args.k, tau=args.tau, seed=args.seed)
    digests = {name: sha256_file(p) for name, p in (
        ("base_vocab", args.base_vocab), ("base_matrix", args.base_matrix),
        ("u_s", args.u_s), ("u_t", args.u_t),
        ("new_vocab", args.new_vocab))}
    result = run_transplant(
        base_vocab, base_matrix, source_set,
        VocabEmbeddingTable.from_vectors(vt_s.tokens, vt_s.matrix),
        VocabEmbeddingTable.from_vectors(vt_t.tokens, vt_t.matrix),
        new_vocab, config, input_digests=digests)
    export_result(result, args.output_dir)
    counts = result.manifest["counts"]
    print(f"transplanted: {counts['appended']} appended "
          f"({counts['weighted']} weighted, "
          f"{counts['fallback_sampled']} fallback), "
          f"{counts['overlap']} overlapping")
    return 0


def cmd_inspect(args) -> int:
    root = Path(args.dir)
    if (root / "transplant" / "provenance.jsonl").exists():
        root = root / "transplant"
    prov_path = root / "provenance.jsonl"
    vocab_path = root / "vocab.txt"
    if not prov_path.exists():
        raise StageError("inspect", f"no provenance.jsonl under {args.dir}")
    vocab = Vocabulary.load(vocab_path)
    if args.token not in vocab:
        print(f"{args.token!r} is not in the merged vocabulary",
              file=sys.stderr)
        return 1
    record = None
    with open(prov_path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if obj["token"] == args.token:
                record = obj
                break
    if record is None:
        print(f"{args.token}\tid={vocab.id_of(args.token)}\t"
              f"base row (preserved)")
        return 0
    print(f"{record['token']}\tid={record['id']}\t{record['provenance']}")
    for n in record["neighbors"]:
        print(f"  {n['src']}\tsim={n['sim']:.6f}\tweight={n['weight']:.6f}")
    return 0


def cmd_make_fixture(args) -> int:
    paths = make_cipher_fixture(
        args.output_dir, seed=args.seed, n_words=args.words,
        n_tokens=args.tokens, lexicon_size=args.lexicon_size,
        heldout_size=args.heldout_size)
    print(f"fixture written to {paths['dir']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexiport",
                     description="Vocabulary expansion pipeline: screen, "
                                 "train, align, synthesize, transplant.")
    parser.add_argument("--version", action="version",
                        version=f"lexiport {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full cached pipeline")
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument("--force", action="store_true",
                   help="rerun every stage, ignoring caches")
    for key in _PATH_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    for flag in _FLAG_KEYS:
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag,
                       action=argparse.BooleanOptionalAction, default=None)
    _add_trainer_flags(p, concrete=False)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("induce-vocab", help="train a WordPiece vocabulary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, default=30000)
    p.add_argument("--min-frequency", type=int, default=1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_induce_vocab)

    p = sub.add_parser("screen",
                       help="intersect a monolingual vocab with the base "
                            "model's and collect its rows")
    p.add_argument("--mono-vocab", required=True)
    p.add_argument("--base-vocab", required=True)
    p.add_argument("--base-matrix", required=True)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("train-embeddings",
                       help="train subword CBOW embeddings on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help="model dump path")
    p.add_argument("--export-vec", default=None)
    p.add_argument("--seed", type=int, default=TrainerConfig().seed)
    _add_trainer_flags(p, concrete=True)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("align",
                       help="fit the orthogonal target-to-source map")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--source", required=True,
                   help="source model dump or .vec file")
    p.add_argument("--target", required=True)
    p.add_argument("--output", required=True, help="map matrix path")
    p.add_argument("--normalize-before-align",
                   action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("build-tables",
                       help="synthesize per-token static vectors for a "
                            "vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--map", default=None,
                   help="orthogonal map to apply before synthesis")
    p.add_argument("--output", required=True, help=".vec output path")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--ngram-mean", action=argparse.BooleanOptionalAction,
                   default=False)
    p.add_argument("--ngram-markers", action=argparse.BooleanOptionalAction,
                   default=True)
    p.set_defaults(func=cmd_build_tables)

    p = sub.add_parser("transplant",
                       help="expand the base matrix with weighted-init rows")
    p.add_argument("--base-vocab", required=True)
    p.add_argument("--base-matrix", required=True)
    p.add_argument("--source-set", required=True,
                   help="directory written by the screen stage")
    p.add_argument("--u-s", required=True, help="source static table (.vec)")
    p.add_argument("--u-t", required=True, help="target static table (.vec)")
    p.add_argument("--new-vocab", required=True)
    p.add_argument("--k", type=int, default=TransplantConfig().k)
    p.add_argument("--tau", type=float, default=TransplantConfig().tau)
    p.add_argument("--seed", type=int, default=TransplantConfig().seed)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_transplant)

    p = sub.add_parser("inspect",
                       help="print a token's provenance and neighbors")
    p.add_argument("--dir", required=True,
                   help="pipeline output dir or transplant export dir")
    p.add_argument("token")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("make-fixture",
                       help="generate the bundled two-language cipher fixture")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--words", type=int, default=200)
    p.add_argument("--tokens", type=int, default=200_000)
    p.add_argument("--lexicon-size", type=int, default=50)
    p.add_argument("--heldout-size", type=int, default=50)
    p.set_defaults(func=cmd_make_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LexiportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
