"""CLI behavior: exit codes, fail-fast validation, manifest, reproducibility."""

import json
import subprocess
import sys

import pytest

from topicforge.cli import main
from topicforge.embedding import load_topic_specs
from topicforge.synth import cohort_corpus
from topicforge.util import sha256_file


@pytest.fixture(scope="module")
def proj(tmp_path_factory):
    """Synthetic cohort project + run config; shared by the command tests."""
    root = tmp_path_factory.mktemp("cliproj")
    src = root / "src"
    cohort_corpus(src, seed=5, n_per_group=40)
    out = root / "out"
    cfg = {
        "seed": 11,
        "out": str(out),
        "paths": {
            "corpus": str(src / "corpus.csv"),
            "vectors": str(src / "vectors.txt"),
            "topic_specs": str(src / "topics.json"),
        },
        "schema": {"doc_id": "id", "response_text": "text", "gender": "gender"},
        "lda": {"k": 3, "iterations": 30, "burn_in": 10},
        "sweep": {"k_min": 2, "k_max": 3, "runs_per_k": 1,
                  "iterations": 20, "burn_in": 5, "alpha": 0.1},
    }
    cfg_path = root / "run.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    return {"root": root, "config": cfg_path, "out": out, "cfg": cfg}


@pytest.fixture(scope="module")
def preprocessed(proj):
    assert main(["preprocess", str(proj["config"])]) == 0
    return proj


# -- validation failures (exit 1, before any work) --------------------------


def test_missing_config_is_validation_error(tmp_path, capsys):
    assert main(["preprocess", str(tmp_path / "nope.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_malformed_config_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json", encoding="utf-8")
    assert main(["preprocess", str(p)]) == 1
    assert "not valid JSON" in capsys.readouterr().err


@pytest.mark.parametrize("cfg,needle", [
    ({"out": "x"}, "seed"),
    ({"seed": "7", "out": "x"}, "seed must be an integer"),
    ({"seed": 7}, "out"),
])
def test_config_shape_checks(tmp_path, capsys, cfg, needle):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["preprocess", str(p)]) == 1
    assert needle in capsys.readouterr().err


def test_json_flag_emits_machine_readable_error(tmp_path, capsys):
    assert main(["--json", "preprocess", str(tmp_path / "nope.json")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "validation"
    assert "nope.json" in err["error"]["message"]


def test_usage_error_is_validation_not_argparse_exit(capsys):
    # argparse would sys.exit(2); the wrapper maps usage errors to 1
    assert main(["frobnicate", "cfg.json"]) == 1
    assert main([]) == 1


def test_threads_must_be_positive(proj, capsys):
    assert main(["--threads", "0", "preprocess", str(proj["config"])]) == 1
    assert "--threads" in capsys.readouterr().err


def test_unknown_facet_rejected_before_work(preprocessed, capsys):
    assert main(["analyze", "--facet", "shoe_size", str(preprocessed["config"])]) == 1
    assert "shoe_size" in capsys.readouterr().err


def test_stage_order_enforced(tmp_path, proj, capsys):
    # fresh out dir: fit must point the user at preprocess instead of crashing
    cfg = dict(proj["cfg"], out=str(tmp_path / "empty_out"))
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["fit", "--k", "3", str(p)]) == 1
    assert "preprocess" in capsys.readouterr().err


def test_serve_rejects_bad_listen(proj, capsys):
    cfg = dict(proj["cfg"])
    cfg["service"] = {"data_dir": str(proj["root"])}
    p = proj["root"] / "serve_cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["serve", "--listen", "no-port-here", str(p)]) == 1
    assert "HOST:PORT" in capsys.readouterr().err


# -- preprocess --------------------------------------------------------------


def test_preprocess_outputs_and_manifest(preprocessed):
    out = preprocessed["out"]
    for name in ("tokenized.jsonl", "docs.jsonl", "vocab.txt", "preprocess_report.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["docs.jsonl"] == sha256_file(out / "docs.jsonl")
    report = json.loads((out / "preprocess_report.json").read_text(encoding="utf-8"))
    assert report["records"] == 80
    assert report["malformed"] == []


def test_preprocess_rerun_is_byte_identical(preprocessed):
    out = preprocessed["out"]
    names = ["tokenized.jsonl", "docs.jsonl", "vocab.txt", "manifest.json"]
    before = {n: (out / n).read_bytes() for n in names}
    assert main(["preprocess", str(preprocessed["config"])]) == 0
    assert {n: (out / n).read_bytes() for n in names} == before


# -- model stages ------------------------------------------------------------


def test_fit_writes_model_and_top_words(preprocessed, capsys):
    assert main(["fit", "--k", "3", str(preprocessed["config"])]) == 0
    out = preprocessed["out"]
    assert (out / "models" / "lda_k3.json").exists()
    top = (out / "models" / "topwords_k3.csv").read_text(encoding="utf-8").splitlines()
    assert top[0] == "topic,rank,token,phi"
    assert len(top) == 1 + 3 * 10
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert "models/lda_k3.json" in manifest


def test_fit_k_from_config(preprocessed):
    assert main(["fit", str(preprocessed["config"])]) == 0
    assert (preprocessed["out"] / "models" / "lda_k3.json").exists()


def test_sweep_writes_curve(preprocessed):
    assert main(["sweep", str(preprocessed["config"])]) == 0
    lines = (preprocessed["out"] / "curve.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "k,mean_cv,std_cv,error"
    assert [row.split(",")[0] for row in lines[1:]] == ["2", "3"]


def test_sweep_range_validated(preprocessed, capsys, tmp_path):
    cfg = dict(preprocessed["cfg"])
    cfg["sweep"] = {"k_min": 5, "k_max": 2}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["sweep", str(p)]) == 1


# -- assignment + analysis ---------------------------------------------------


def test_assign_outputs(preprocessed):
    assert main(["assign", str(preprocessed["config"])]) == 0
    out = preprocessed["out"]
    sents = (out / "assignments" / "sentences.csv").read_text(encoding="utf-8")
    assert sents.splitlines()[0] == "doc_id,sentence_index,best_topic,similarity,accepted"
    assert (out / "assignments" / "doc_topics.csv").exists()


def test_assign_threads_do_not_change_bytes(preprocessed):
    out = preprocessed["out"]
    assert main(["assign", str(preprocessed["config"])]) == 0
    base = (out / "assignments" / "sentences.csv").read_bytes()
    assert main(["--threads", "4", "assign", str(preprocessed["config"])]) == 0
    assert (out / "assignments" / "sentences.csv").read_bytes() == base


def test_analyze_gender_table_and_report(preprocessed):
    assert main(["analyze", "--facet", "gender", str(preprocessed["config"])]) == 0
    tables = preprocessed["out"] / "tables"
    csv_text = (tables / "gender.csv").read_text(encoding="utf-8")
    assert csv_text.splitlines()[0].startswith("topic_id,topic_name,n_male,n_female")
    report = (tables / "gender_report.txt").read_text(encoding="utf-8")
    assert "***: α = 1%; **: α = 5%; *: α = 10%" in report


def test_analyze_requires_assign_first(tmp_path, preprocessed, capsys):
    cfg = dict(preprocessed["cfg"], out=str(tmp_path / "out2"))
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["preprocess", str(p)]) == 0
    assert main(["analyze", "--facet", "gender", str(p)]) == 1
    assert "assign" in capsys.readouterr().err


def test_centers2d_deterministic(preprocessed):
    out = preprocessed["out"]
    assert main(["centers2d", str(preprocessed["config"])]) == 0
    first = (out / "centers2d.csv").read_bytes()
    assert main(["centers2d", str(preprocessed["config"])]) == 0
    assert (out / "centers2d.csv").read_bytes() == first
    lines = first.decode("utf-8").splitlines()
    assert lines[0] == "topic_id,name,x,y"
    specs = load_topic_specs(preprocessed["cfg"]["paths"]["topic_specs"])
    assert len(lines) == 1 + len(specs)


# -- synth -------------------------------------------------------------------


def test_synth_cohort_files_and_rerun(tmp_path):
    cfg = {"seed": 42, "out": str(tmp_path / "synth"),
           "synth": {"kind": "cohort", "n_per_group": 25}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["synth", str(p)]) == 0
    out = tmp_path / "synth"
    names = ["corpus.csv", "vectors.txt", "topics.json", "expected.json", "manifest.json"]
    before = {n: (out / n).read_bytes() for n in names}
    assert main(["synth", str(p)]) == 0
    assert {n: (out / n).read_bytes() for n in names} == before


def test_synth_planted(tmp_path):
    cfg = {"seed": 3, "out": str(tmp_path / "planted"),
           "synth": {"kind": "planted", "n_docs": 40, "doc_len": 30}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["synth", str(p)]) == 0
    for name in ("docs.jsonl", "vocab.txt", "planted_phi.json"):
        assert (tmp_path / "planted" / name).exists()


def test_synth_rejects_unknown_kind_and_params(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"seed": 1, "out": str(tmp_path / "o"),
                             "synth": {"kind": "fractal"}}), encoding="utf-8")
    assert main(["synth", str(p)]) == 1
    p.write_text(json.dumps({"seed": 1, "out": str(tmp_path / "o"),
                             "synth": {"kind": "planted", "n_dcos": 5}}), encoding="utf-8")
    assert main(["synth", str(p)]) == 1
    assert "n_dcos" in capsys.readouterr().err


# -- process-level behavior --------------------------------------------------


def test_subprocess_exit_code_and_json_stderr(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "topicforge.cli", "--json", "preprocess",
         str(tmp_path / "missing.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    err = json.loads(proc.stderr)
    assert err["error"]["type"] == "validation"
