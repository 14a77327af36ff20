from __future__ import annotations

import json

import numpy as np
import pytest

from neurodecode.cli import load_experiment_config, main

SYNTH_SPEC = {
    "n_words": 10,
    "n_voxels": 12,
    "emb_dim": 6,
    "presentations": 3,
    "noise_sigma": 0.3,
    "map_kind": "linear",
    "seed": 11,
}


@pytest.fixture
def synth_dir(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SYNTH_SPEC), encoding="utf-8")
    out = tmp_path / "data"
    assert main(["synth", str(spec_path), "--out", str(out)]) == 0
    return out


def base_config(synth_dir, out_name="out", **overrides):
    config = {
        "vocabulary": "words.csv",
        "subjects": ["subject_synth11.tsv"],
        "embeddings": [{"name": "planted", "path": "planted.vec", "format": "headered-vec"}],
        "directions": ["word2brain"],
        "regressor": {"linear_mode": True, "keep_rate": 1.0, "epochs": 60, "step_size": 0.01},
        "selection": {"k": None},
        "seed": 11,
        "workers": 1,
        "output_dir": out_name,
    }
    config.update(overrides)
    return config


def write_config(synth_dir, config, name="config.json"):
    path = synth_dir / name
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


def test_synth_emits_loadable_artifacts(synth_dir):
    assert (synth_dir / "words.csv").exists()
    assert (synth_dir / "subject_synth11.tsv").exists()
    assert (synth_dir / "planted.vec").exists()
    assert (synth_dir / "config.json").exists()


def test_run_end_to_end(synth_dir, capsys):
    cfg = write_config(synth_dir, base_config(synth_dir))
    assert main(["run", str(cfg)]) == 0
    out = synth_dir / "out"
    assert (out / "eval_synth11_planted_word2brain.csv").exists()
    assert (out / "mismatch_synth11_planted_word2brain.csv").exists()
    summary = (out / "summary.csv").read_text(encoding="utf-8").splitlines()
    assert summary[0] == "subject,model,direction,accuracy"
    assert len(summary) == 3  # one subject row + one average row
    acc = float(summary[1].split(",")[3])
    assert acc >= 0.9
    svg = (out / "summary.svg").read_text(encoding="utf-8")
    assert svg.startswith("<svg")
    err = capsys.readouterr().err
    assert "fold 45/45" in err


def test_run_two_models_and_directions_row_count(synth_dir):
    config = base_config(synth_dir, out_name="out2")
    config["embeddings"].append(
        {"name": "copy", "path": "planted.vec", "format": "headered-vec"}
    )
    config["directions"] = ["word2brain", "brain2word"]
    cfg = write_config(synth_dir, config, "config2.json")
    assert main(["run", str(cfg)]) == 0
    summary = (synth_dir / "out2" / "summary.csv").read_text(encoding="utf-8").splitlines()
    assert len(summary) == 1 + 2 * 2 + 2 * 2  # header + result rows + average rows


def test_run_with_combination_and_voxel_analysis(synth_dir):
    config = base_config(synth_dir, out_name="out3")
    config["embeddings"].append(
        {"name": "copy", "path": "planted.vec", "format": "headered-vec"}
    )
    config["combinations"] = [{"a": "planted", "b": "copy", "method": "concat", "name": "both"}]
    config["voxel_analysis"] = True
    cfg = write_config(synth_dir, config, "config3.json")
    assert main(["run", str(cfg)]) == 0
    out = synth_dir / "out3"
    assert (out / "eval_synth11_both_word2brain.csv").exists()
    assert (out / "voxpred_synth11_planted.csv").exists()
    assert (out / "voxpred_synth11_both.csv").exists()


def test_run_byte_identical_reruns_and_worker_counts(synth_dir, monkeypatch):
    cfg_a = write_config(synth_dir, base_config(synth_dir, out_name="det_a"), "det_a.json")
    cfg_b = write_config(synth_dir, base_config(synth_dir, out_name="det_b"), "det_b.json")
    cfg_c = write_config(synth_dir, base_config(synth_dir, out_name="det_c", workers=8), "det_c.json")
    assert main(["run", str(cfg_a)]) == 0
    assert main(["run", str(cfg_b)]) == 0
    assert main(["run", str(cfg_c)]) == 0
    read = lambda d, n: (synth_dir / d / n).read_bytes()
    for name in ("summary.csv", "eval_synth11_planted_word2brain.csv"):
        assert read("det_a", name) == read("det_b", name)
        assert read("det_a", name) == read("det_c", name)

    monkeypatch.setenv("NEURODECODE_WORKERS", "3")
    cfg_d = write_config(synth_dir, base_config(synth_dir, out_name="det_d"), "det_d.json")
    assert main(["run", str(cfg_d)]) == 0
    assert read("det_a", "summary.csv") == read("det_d", "summary.csv")


def test_run_missing_file_fails(synth_dir, capsys):
    config = base_config(synth_dir)
    config["vocabulary"] = "nope.csv"
    cfg = write_config(synth_dir, config, "bad.json")
    assert main(["run", str(cfg)]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_run_duplicate_model_names_fail(synth_dir, capsys):
    config = base_config(synth_dir)
    config["embeddings"].append(dict(config["embeddings"][0]))
    cfg = write_config(synth_dir, config, "dup.json")
    assert main(["run", str(cfg)]) == 1
    assert "unique" in capsys.readouterr().err


def test_run_unknown_subset_fails(synth_dir, capsys):
    config = base_config(synth_dir, subset="missing-subset")
    cfg = write_config(synth_dir, config, "subset.json")
    assert main(["run", str(cfg)]) == 1
    assert "subset" in capsys.readouterr().err


def test_config_parsing_resolves_relative_paths(synth_dir):
    cfg = write_config(synth_dir, base_config(synth_dir), "paths.json")
    parsed = load_experiment_config(cfg)
    assert parsed.vocabulary == synth_dir / "words.csv"
    assert parsed.output_dir == synth_dir / "out"


def test_analyze_mismatch_self_gives_jaccard_one(synth_dir, capsys):
    cfg = write_config(synth_dir, base_config(synth_dir, out_name="an"), "an.json")
    assert main(["run", str(cfg)]) == 0
    mm = synth_dir / "an" / "mismatch_synth11_planted_word2brain.csv"
    out = synth_dir / "an_overlap"
    assert main(["analyze", "--mode", "mismatch-overlap", str(mm), str(mm), "--out", str(out)]) == 0
    lines = (out / "overlap.csv").read_text(encoding="utf-8").splitlines()
    assert lines[-1] == "#jaccard,1.0"
    assert (out / "overlap.svg").read_text(encoding="utf-8").startswith("<svg")


def test_analyze_disjoint_mismatch(tmp_path):
    words = "a,b,c"
    m1 = "\n".join([words, "0.0,1.0,0.0", "1.0,0.0,0.0", "0.0,0.0,0.0"]) + "\n"
    m2 = "\n".join([words, "0.0,0.0,0.0", "0.0,0.0,1.0", "0.0,1.0,0.0"]) + "\n"
    p1, p2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    p1.write_text(m1, encoding="utf-8")
    p2.write_text(m2, encoding="utf-8")
    out = tmp_path / "cmp"
    assert main(["analyze", "--mode", "mismatch-overlap", str(p1), str(p2), "--out", str(out)]) == 0
    lines = (out / "overlap.csv").read_text(encoding="utf-8").splitlines()
    assert lines[-1] == "#jaccard,0.0"
    assert "a|b,only_a" in lines
    assert "b|c,only_b" in lines


def test_analyze_voxel_overlap_emits_k_rows_per_model(synth_dir):
    config = base_config(synth_dir, out_name="vx")
    config["voxel_analysis"] = True
    cfg = write_config(synth_dir, config, "vx.json")
    assert main(["run", str(cfg)]) == 0
    vp = synth_dir / "vx" / "voxpred_synth11_planted.csv"
    out = synth_dir / "vx_overlap"
    assert main(["analyze", "--mode", "voxel-overlap", str(vp), str(vp), "--out", str(out), "--k", "5"]) == 0
    lines = (out / "overlap.csv").read_text(encoding="utf-8").splitlines()
    rows = [l for l in lines[1:] if l and not l.startswith("#")]
    common = [l for l in rows if l.endswith(",common")]
    assert len(common) == 5  # identical inputs: each model contributes exactly k rows
    assert lines[-1] == "#jaccard,1.0"


def test_analyze_missing_artifact(tmp_path, capsys):
    out = tmp_path / "x"
    code = main(["analyze", "--mode", "mismatch-overlap", "missing1.csv", "missing2.csv", "--out", str(out)])
    assert code == 1
    assert "missing" in capsys.readouterr().err


def test_synth_invalid_spec(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"n_words": 5}), encoding="utf-8")
    assert main(["synth", str(spec), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_generated_config_runs(synth_dir):
    # the synth subcommand emits a ready-to-run config
    assert main(["run", str(synth_dir / "config.json")]) == 0
    assert (synth_dir / "out" / "summary.csv").exists()
