"""Command-line behavior: config parsing, caching, exit codes, inspect."""

import argparse
import contextlib
import io
import json
from pathlib import Path

import pytest
import yaml

from lexiport.cli import main, parse_config
from lexiport.errors import ConfigError


def _write_config(tmp_path, data):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def _call_main(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def test_parse_config_defaults():
    cfg = parse_config(None)
    assert cfg.vocab_size == 30000
    assert cfg.seed == 1
    assert cfg.trainer.dim == 300
    assert cfg.trainer.epochs == 20
    assert cfg.trainer.negatives == 10
    assert cfg.transplant.k == 10
    assert cfg.transplant.tau == 0.1


def test_parse_config_unknown_keys_are_named(tmp_path):
    path = _write_config(tmp_path, {"trainer": {"bogus": 3}})
    with pytest.raises(ConfigError, match="trainer.bogus"):
        parse_config(path)
    path = _write_config(tmp_path, {"colour": 1})
    with pytest.raises(ConfigError, match="colour"):
        parse_config(path)
    path = _write_config(tmp_path, {"paths": {"sideways": "x"}})
    with pytest.raises(ConfigError, match="paths.sideways"):
        parse_config(path)


def test_parse_config_type_errors(tmp_path):
    for data in ({"vocab_size": "many"},
                 {"trainer": {"dim": True}},
                 {"flags": {"normalize_before_align": 3}},
                 {"transplant": {"tau": "warm"}},
                 {"paths": {"lexicon": 7}}):
        with pytest.raises(ConfigError):
            parse_config(_write_config(tmp_path, data))


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.yaml")


def test_parse_config_paths_resolve_against_file(tmp_path):
    sub = tmp_path / "sub"
    sub.mkdir()
    path = _write_config(sub, {"paths": {"lexicon": "lex.txt"}})
    cfg = parse_config(path)
    assert cfg.paths["lexicon"] == (sub / "lex.txt").absolute()


def test_parse_config_flag_overrides(tmp_path):
    path = _write_config(tmp_path, {"seed": 4, "trainer": {"dim": 40}})
    ov = argparse.Namespace(seed=9, dim=17, tau=0.5,
                            lexicon=str(tmp_path / "o.txt"))
    cfg = parse_config(path, ov)
    assert cfg.seed == 9
    assert cfg.trainer.dim == 17
    assert cfg.transplant.tau == 0.5
    assert cfg.paths["lexicon"] == (Path.cwd() / tmp_path / "o.txt")


def test_parse_config_stage_seeds_follow_top_seed(tmp_path):
    cfg = parse_config(_write_config(tmp_path, {"seed": 12}))
    assert cfg.trainer.seed == 12
    assert cfg.transplant.seed == 12
    cfg = parse_config(_write_config(
        tmp_path, {"seed": 12, "trainer": {"seed": 3}}))
    assert cfg.trainer.seed == 3
    assert cfg.transplant.seed == 12


def test_main_config_error_exit_code(tmp_path):
    code, _, err = _call_main(
        ["run", "--config", str(tmp_path / "missing.yaml")])
    assert code == 1
    assert "config error" in err


def test_main_usage_error_exits_one():
    with pytest.raises(SystemExit) as exc:
        _call_main(["induce-vocab"])  # missing required flags
    assert exc.value.code == 1


def test_main_missing_input_exit_code(tmp_path, mini_fixture):
    data = yaml.safe_load(mini_fixture["config"].read_text())
    data["paths"]["base_vocab"] = "absent.txt"
    data["paths"]["output_dir"] = str(tmp_path / "out")
    path = _write_config(tmp_path, dict(data))
    code, _, err = _call_main(["run", "--config", str(path)])
    assert code == 2
    assert "missing input path" in err


@pytest.fixture(scope="module")
def mini_run(mini_fixture):
    code, out, err = _call_main(
        ["run", "--config", str(mini_fixture["config"])])
    assert code == 0, err
    return {"out": out, "root": mini_fixture["dir"] / "out"}


def test_run_executes_stages_and_exports(mini_run):
    assert "stage screen: running" in mini_run["out"]
    assert "stage transplant: running" in mini_run["out"]
    transplant = mini_run["root"] / "transplant"
    for name in ("vocab.txt", "matrix.bin", "matrix.json",
                 "provenance.jsonl", "manifest.json"):
        assert (transplant / name).exists()
    assert not (mini_run["root"] / ".lock").exists()


def test_rerun_is_cached(mini_run, mini_fixture):
    code, out, _ = _call_main(
        ["run", "--config", str(mini_fixture["config"])])
    assert code == 0
    assert "all stages up-to-date" in out
    assert "running" not in out


def test_param_change_invalidates_only_downstream(mini_run, mini_fixture):
    code, out, _ = _call_main(
        ["run", "--config", str(mini_fixture["config"]), "--tau", "0.2"])
    assert code == 0
    assert "stage screen: up-to-date" in out
    assert "stage transplant: running" in out
    # restore the cached state for later tests
    code, out, _ = _call_main(
        ["run", "--config", str(mini_fixture["config"])])
    assert code == 0


def test_lock_file_rejects_concurrent_run(mini_run, mini_fixture):
    lock = mini_run["root"] / ".lock"
    lock.write_text("12345\n")
    try:
        code, _, err = _call_main(
            ["run", "--config", str(mini_fixture["config"])])
        assert code == 2
        assert "in use" in err
    finally:
        lock.unlink()


def test_force_reruns_everything(mini_run, mini_fixture):
    code, out, _ = _call_main(
        ["run", "--config", str(mini_fixture["config"]), "--force"])
    assert code == 0
    assert "up-to-date" not in out
    assert out.count("running") >= 7


def test_inspect_reports_provenance(mini_run):
    prov = (mini_run["root"] / "transplant" / "provenance.jsonl")
    first = json.loads(prov.read_text().splitlines()[0])
    code, out, _ = _call_main(
        ["inspect", "--dir", str(mini_run["root"]), first["token"]])
    assert code == 0
    assert first["token"] in out
    assert first["provenance"] in out
    if first["provenance"] == "weighted":
        assert "sim=" in out and "weight=" in out


def test_inspect_base_token(mini_run):
    code, out, _ = _call_main(
        ["inspect", "--dir", str(mini_run["root"]), "[PAD]"])
    assert code == 0
    assert "base row" in out


def test_inspect_unknown_token(mini_run):
    code, _, err = _call_main(
        ["inspect", "--dir", str(mini_run["root"]), "certainly-absent"])
    assert code == 1
    assert "not in the merged vocabulary" in err


def test_induce_vocab_command(tmp_corpus, tmp_path):
    out = tmp_path / "vocab.txt"
    code, stdout, _ = _call_main(
        ["induce-vocab", "--corpus", str(tmp_corpus),
         "--vocab-size", "40", "--output", str(out)])
    assert code == 0
    assert "wrote" in stdout
    tokens = out.read_text().splitlines()
    assert tokens[0] == "[PAD]"
    assert len(tokens) <= 40


def test_train_embeddings_command(tmp_corpus, tmp_path):
    model_path = tmp_path / "model.bin"
    vec_path = tmp_path / "vectors.vec"
    code, stdout, _ = _call_main(
        ["train-embeddings", "--corpus", str(tmp_corpus),
         "--output", str(model_path), "--export-vec", str(vec_path),
         "--dim", "8", "--epochs", "1", "--min-count", "1",
         "--bucket-count", "64"])
    assert code == 0
    assert model_path.exists() and vec_path.exists()
    assert "trained" in stdout
