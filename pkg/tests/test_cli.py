import json
import struct

import numpy as np
import pytest

from structmap.cli import main
from structmap.vecstore import load_dataset

SYNTH_CFG = {
    "seed": 7,
    "synth": {"n_groups": 150, "variants_per_group": 3, "sent_len": 5, "dim_out": 64},
    "train": {"epochs": 4, "batch_size": 16, "out_dim": 16},
    "eval": {"n_queries": 120},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthesize a dataset and train a small model once for all CLI tests."""
    base = tmp_path_factory.mktemp("cli")
    cfg_path = base / "cfg.json"
    cfg_path.write_text(json.dumps(SYNTH_CFG))
    data_dir = base / "data"
    model_dir = base / "model"
    assert main(["synth", "--config", str(cfg_path), "--out", str(data_dir)]) == 0
    assert (
        main(
            [
                "train",
                "--config",
                str(cfg_path),
                "--dataset",
                str(data_dir),
                "--out",
                str(model_dir),
            ]
        )
        == 0
    )
    return base, cfg_path, data_dir, model_dir


def test_synth_writes_dataset_and_manifest(workspace):
    base, cfg_path, data_dir, _ = workspace
    raw = (data_dir / "vectors.svec").read_bytes()
    magic, version, dim, count = struct.unpack_from("<4sHIQ", raw)
    assert magic == b"SVEC" and version == 1 and dim == 64
    assert count == 150 * 3 * 5
    manifest = json.loads((data_dir / "manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["config"]["n_groups"] == 150
    assert manifest["config"]["seed"] == 7
    d = load_dataset(data_dir / "vectors.svec", data_dir / "metadata.jsonl")
    assert len(d.groups) == 150


def test_synth_rerun_is_byte_identical(workspace, tmp_path):
    _, cfg_path, data_dir, _ = workspace
    out2 = tmp_path / "again"
    assert main(["synth", "--config", str(cfg_path), "--out", str(out2)]) == 0
    for name in ("vectors.svec", "metadata.jsonl", "manifest.json"):
        assert (out2 / name).read_bytes() == (data_dir / name).read_bytes()


def test_unknown_config_key_names_it(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"synth": {"n_groups": 3, "bogus_knob": 1}}))
    code = main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "bogus_knob" in capsys.readouterr().err


def test_missing_dataset_fails(tmp_path, capsys):
    code = main(["eval-nn", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "o"), "--baseline"])
    assert code == 1


def test_train_manifest_echoes_defaults(workspace):
    _, _, _, model_dir = workspace
    manifest = json.loads((model_dir / "manifest.json").read_text())
    assert manifest["config"]["epochs"] == 4
    assert manifest["config"]["batch_size"] == 16
    assert manifest["config"]["out_dim"] == 16
    assert (model_dir / "model.smap").exists()
    report = json.loads((model_dir / "train_report.json").read_text())
    assert len(report["epoch_losses"]) == 4


def test_ingest_validates(workspace, tmp_path):
    _, _, data_dir, _ = workspace
    out = tmp_path / "ingest"
    assert main(["ingest", "--dataset", str(data_dir), "--out", str(out)]) == 0
    payload = json.loads((out / "validation.json").read_text())
    assert payload["violations"] == []
    assert payload["tokens"] == 150 * 3 * 5


def test_eval_nn_baseline_vs_model(workspace, tmp_path):
    base, cfg_path, data_dir, model_dir = workspace
    out_b = tmp_path / "base"
    out_t = tmp_path / "trans"
    common = ["--config", str(cfg_path), "--dataset", str(data_dir), "--queries", "150"]
    assert main(["eval-nn", *common, "--out", str(out_b), "--baseline"]) == 0
    assert (
        main(["eval-nn", *common, "--out", str(out_t), "--model", str(model_dir / "model.smap")])
        == 0
    )
    rb = json.loads((out_b / "eval_nn.json").read_text())
    rt = json.loads((out_t / "eval_nn.json").read_text())
    assert rt["dep_edge"] > rb["dep_edge"]


def test_eval_nn_dump_writes_pairs(workspace, tmp_path):
    _, _, data_dir, _ = workspace
    out = tmp_path / "dump"
    code = main(
        [
            "eval-nn",
            "--dataset",
            str(data_dir),
            "--out",
            str(out),
            "--baseline",
            "--queries",
            "25",
            "--dump",
        ]
    )
    assert code == 0
    lines = (out / "nn_pairs.jsonl").read_text().splitlines()
    assert len(lines) == 25
    rec = json.loads(lines[0])
    assert {"query_row", "value_row", "value_dep", "distance"} <= set(rec)
    assert rec["distance"] >= 0.0


def test_eval_purity_entry_per_k(workspace, tmp_path):
    _, cfg_path, data_dir, _ = workspace
    out = tmp_path / "pur"
    assert (
        main(
            [
                "eval-purity",
                "--dataset",
                str(data_dir),
                "--out",
                str(out),
                "--baseline",
                "--purity",
                "4,8,12,16",
            ]
        )
        == 0
    )
    payload = json.loads((out / "eval_purity.json").read_text())
    assert sorted(payload) == ["12", "16", "4", "8"]
    assert all(0.0 < v <= 1.0 for v in payload.values())


def test_probe_command(workspace, tmp_path):
    _, _, data_dir, model_dir = workspace
    out = tmp_path / "probe"
    code = main(
        [
            "probe",
            "--dataset",
            str(data_dir),
            "--out",
            str(out),
            "--model",
            str(model_dir / "model.smap"),
            "--train-sizes",
            "30,60",
            "--seed",
            "3",
        ]
    )
    assert code == 0
    payload = json.loads((out / "probe.json").read_text())
    assert sorted(payload["accuracy"]) == ["30", "60"]
    assert 0.0 < payload["majority"] < 1.0


def test_export_dumps_every_token(workspace, tmp_path):
    _, _, data_dir, _ = workspace
    out = tmp_path / "exp"
    assert main(["export", "--dataset", str(data_dir), "--out", str(out)]) == 0
    lines = (out / "tokens_dump.jsonl").read_text().splitlines()
    assert len(lines) == 150 * 3 * 5
    first = json.loads(lines[0])
    assert set(first) >= {"row", "dep", "pos", "rep"}
    assert len(first["rep"]) == 64


def test_sample_pairs_command(workspace, tmp_path):
    _, _, data_dir, _ = workspace
    out = tmp_path / "pairs"
    assert main(["sample-pairs", "--dataset", str(data_dir), "--out", str(out), "--seed", "1"]) == 0
    lines = (out / "pairs.jsonl").read_text().splitlines()
    assert len(lines) == 150 * 11  # 11 per group default
    rec = json.loads(lines[0])
    assert rec["anchor_sent"] != rec["positive_sent"]
