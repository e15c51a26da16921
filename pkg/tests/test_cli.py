import json
import subprocess
import sys

import pytest

from stancekit.artifacts import read_csv, read_json
from stancekit.cli import main
from stancekit.config import CONFIG_ENV, RunConfig, build_config
from stancekit.errors import ConfigError
from stancekit.synthetic import generate, write_fixture


@pytest.fixture(scope="module")
def small_fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("fx")
    write_fixture(root, generate(n_tweets=1500, n_users=300, seed=1, n_labeled_per_class=40))
    ini = root / "stancekit.ini"
    ini.write_text(ini.read_text().replace("topics_iterations = 500", "topics_iterations = 30")
                   .replace("topics_k = 20", "topics_k = 4")
                   .replace("mention_threshold = 100", "mention_threshold = 20") + "n_boundaries = 1\n")
    return root


@pytest.fixture(scope="module")
def pipeline_out(small_fixture, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    assert main(["pipeline", "--config", str(small_fixture / "stancekit.ini"), "--out", str(out)]) == 0
    return out


def test_single_class_training_set(tmp_path, capsys):
    labeled = tmp_path / "labels.csv"
    labeled.write_text("tweet_id,text,label\n1,we stay,remain\n2,stay in,remain\n")
    code = main(["stance-train", "--set", f"labeled={labeled}", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "degenerate training set" in capsys.readouterr().err


def test_missing_artifact_exit_code(tmp_path, capsys):
    code = main(["stance-predict", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "corpus.jsonl" in err and "ingest" in err


def test_invalid_config_names_key(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("stance_leave_below = 1.7\n")
    assert main(["stats", "--config", str(ini), "--out", str(tmp_path)]) == 1
    assert "stance_leave_below" in capsys.readouterr().err
    ini.write_text("no_such_key = 3\n")
    assert main(["stats", "--config", str(ini), "--out", str(tmp_path)]) == 1
    assert "no_such_key" in capsys.readouterr().err
    assert main(["stats", "--set", "topics_k=abc", "--out", str(tmp_path)]) == 1
    assert "topics_k" in capsys.readouterr().err


def test_config_precedence(tmp_path, monkeypatch):
    ini = tmp_path / "c.ini"
    ini.write_text("seed = 5\ntopics_k = 7\ninput = data/t.jsonl  # relative\n")
    cfg = build_config(ini, {"seed": "9"})
    assert (cfg.seed, cfg.topics_k, cfg.svm_epochs) == (9, 7, RunConfig().svm_epochs)
    assert cfg.input == str((tmp_path / "data" / "t.jsonl").resolve())
    monkeypatch.setenv(CONFIG_ENV, str(ini))
    assert build_config(None, {}).topics_k == 7
    assert build_config(None, {"topics-k": "3", "from": "2016-01-01"}).topics_k == 3


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="bot_bin_width"):
        RunConfig(bot_bin_width=0.3).validate()
    with pytest.raises(ConfigError, match="date_to"):
        RunConfig(date_from="2017-01-01", date_to="2016-01-01").validate()


def test_config_hash_ignores_output_dir():
    assert RunConfig(out="a").config_hash() == RunConfig(out="b").config_hash()
    assert RunConfig(seed=1).config_hash() != RunConfig(seed=2).config_hash()


def test_artifacts_carry_metadata(pipeline_out):
    manifest = read_json(pipeline_out / "manifest.json")
    meta = manifest["meta"]
    assert meta["seed"] == 42 and len(meta["config_hash"]) == 16
    assert manifest["config_hash"] == meta["config_hash"]
    assert set(manifest["stages"]) >= {"ingest", "stance-train", "topics", "bots", "correlate"}
    for name in manifest["artifacts"]:
        path = pipeline_out / name
        first = path.read_text().splitlines()[0]
        if name.endswith(".csv"):
            assert first.startswith("# ") and json.loads(first[2:]) == meta
        elif name.endswith(".jsonl"):
            assert json.loads(first) == {"meta": meta}
        else:
            assert read_json(path)["meta"] == meta


def test_pipeline_outputs(pipeline_out):
    ingest = read_json(pipeline_out / "ingest.json")
    assert ingest["rejects"] == 1  # only the malformed line after tweet 1000 fits in 1500 tweets
    assert len(read_csv(pipeline_out / "periods.csv")) == 2
    langs = {r["lang"] for r in read_csv(pipeline_out / "language_shares.csv")}
    assert "en" in langs and len(langs) > 1
    summary = {r["method"]: r for r in read_csv(pipeline_out / "stance_summary.csv")}
    assert set(summary) == {"rule", "model", "merged"}
    assert -1.0 <= read_json(pipeline_out / "correlation.json")["pearson"] <= 1.0


def test_stage_rerun_uses_existing_artifacts(small_fixture, pipeline_out):
    before = (pipeline_out / "bot_bins.csv").read_bytes()
    assert main(["bots", "--config", str(small_fixture / "stancekit.ini"), "--out", str(pipeline_out)]) == 0
    assert (pipeline_out / "bot_bins.csv").read_bytes() == before


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stancekit", "stance-report", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "run stage" in proc.stderr
