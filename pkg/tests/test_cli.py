import csv
import json

import numpy as np
import pytest

from heterochem.cli import main, read_latent_csv

SMILES = ["CCO", "CCN", "CCC", "OCCO", "NCCN", "CC=O", "CC#N", "C1CC1", "CC(C)O", "COC", "OC=O", "CCCC"]
ARCH = {"architecture": {"enc_cells": 8, "dec_cells": 8, "bottleneck_dim": 4}, "epochs": 2, "batch_size": 4}


def _error(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error: ")
    return json.loads(err[len("error: "):])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "in.smi").write_text("\n".join(SMILES + ["C1CC"]) + "\n")
    (d / "cfg.json").write_text(json.dumps(ARCH))
    assert main(["prep", "--input", str(d / "in.smi"), "--out-dir", str(d), "--ratio", "0.75"]) == 0
    assert main(["train", "--train", str(d / "train.smi"), "--test", str(d / "test.smi"), "--config",
                 str(d / "cfg.json"), "--mode", "enum2can", "--out-dir", str(d)]) == 0
    return d


def test_prep_outputs(workdir):
    lines = [ln for ln in (workdir / "corpus.smi").read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == len(SMILES)
    assert (workdir / "rejected.tsv").read_text().startswith("C1CC\t")
    train = [ln for ln in (workdir / "train.smi").read_text().splitlines() if not ln.startswith("#")]
    assert len(train) == 9


def test_prep_generate(tmp_path):
    assert main(["prep", "--generate", "3", "--elements", "C,O", "--out-dir", str(tmp_path)]) == 0
    lines = [ln for ln in (tmp_path / "corpus.smi").read_text().splitlines() if not ln.startswith("#")]
    assert {ln.split()[0] for ln in lines} >= {"C", "O", "CC", "CO", "C=O", "CCC", "OCO"}


def test_manifest(workdir):
    m = json.loads((workdir / "manifest_train.json").read_text())
    assert set(m) >= {"seed", "config_hash", "config", "outputs", "versions"}
    assert len(m["config_hash"]) == 16 and m["outputs"] == ["model.ckpt", "train_log.csv"]
    log_meta = json.loads((workdir / "train_log.csv").read_text().splitlines()[0][2:])
    assert log_meta["config_hash"] == m["config_hash"]


def test_train_log_deterministic(workdir, tmp_path):
    argv = ["train", "--train", str(workdir / "train.smi"), "--test", str(workdir / "test.smi"), "--config",
            str(workdir / "cfg.json"), "--mode", "enum2can", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    assert (tmp_path / "train_log.csv").read_bytes() == (workdir / "train_log.csv").read_bytes()


def test_encode_decode_compose(workdir, capsys):
    d = workdir
    assert main(["encode", "--model", str(d / "model.ckpt"), "--input", str(d / "corpus.smi"), "--out-dir", str(d)]) == 0
    ids, Z = read_latent_csv(d / "latent.csv")
    assert Z.shape == (len(SMILES), 4) and (Z >= 0).all()
    assert main(["decode", "--model", str(d / "model.ckpt"), "--input", str(d / "latent.csv"), "--out-dir", str(d)]) == 0
    rows = list(csv.DictReader(ln for ln in (d / "decoded.csv").read_text().splitlines() if not ln.startswith("#")))
    assert [r["id"] for r in rows] == ids
    assert set(rows[0]) == {"id", "smiles", "truncated"}


def test_sample_challenge_evaluate(workdir):
    d = workdir
    model = str(d / "model.ckpt")
    assert main(["sample", "--model", model, "--smiles", "CCO", "-n", "20", "--out-dir", str(d)]) == 0
    stats = json.loads((d / "sampling_stats.json").read_text())["stats"]
    assert stats["n_samples"] == 20
    rows = list(csv.DictReader(ln for ln in (d / "samples.csv").read_text().splitlines() if not ln.startswith("#")))
    assert [int(r["index"]) for r in rows] == list(range(20))
    assert (d / "heatmap_0.csv").exists()
    (d / "three.smi").write_text("CCO\nCCN\nOCCO\n")
    assert main(["challenge", "--model", model, "--input", str(d / "three.smi"), "--n-enum", "3",
                 "--background", str(d / "corpus.smi"), "--out-dir", str(d)]) == 0
    summary = json.loads((d / "challenge_summary.json").read_text())
    assert "mean_intra" in json.dumps(summary)
    assert main(["evaluate", "--model", model, "--input", str(d / "corpus.smi"), "--k", "2", "--out-dir", str(d)]) == 0
    tax = json.loads((d / "taxonomy.json").read_text())
    assert tax["counts"]["n"] == len(SMILES)
    rows = (d / "correlations.csv").read_text().splitlines()
    assert len(rows) == 2 + 2 * (len(SMILES) - 1)
    for name in ("manifest_sample.json", "manifest_challenge.json", "manifest_evaluate.json"):
        assert (d / name).exists()


def test_qsar_command(workdir, tmp_path):
    rows = "\n".join(f"{'C' * k}O,{k * 0.5}" for k in range(1, 21))
    data = tmp_path / "toy.csv"
    data.write_text("smiles,value\n" + rows + "\n")
    assert main(["qsar", "--data", str(data), "--n-trials", "1", "--qsar-epochs", "3", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "qsar_report.json").read_text())
    assert "ecfp4_1024" in report["results"]
    assert (tmp_path / "qsar_predictions.csv").exists()


def test_missing_file_is_data_error(tmp_path, capsys):
    assert main(["encode", "--model", str(tmp_path / "nope.ckpt"), "--input", "x.smi", "--out-dir", str(tmp_path)]) == 1
    err = _error(capsys)
    assert err["error"] == "data" and "nope.ckpt" in err["path"]


def test_corrupt_checkpoint_is_data_error(tmp_path, workdir, capsys):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"garbage")
    assert main(["encode", "--model", str(bad), "--input", str(workdir / "corpus.smi"), "--out-dir", str(tmp_path)]) == 1
    assert _error(capsys)["error"] == "data"


def test_unencodable_smiles_is_data_error(tmp_path, workdir, capsys):
    (tmp_path / "x.smi").write_text("CCBr\n")
    argv = ["encode", "--model", str(workdir / "model.ckpt"), "--input", str(tmp_path / "x.smi"), "--out-dir", str(tmp_path)]
    assert main(argv) == 1
    assert "Br" in _error(capsys)["message"]


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 2
    assert _error(capsys)["error"] == "usage"
    assert main(["prep", "--out-dir", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "usage"
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_evaluate_too_small_is_data_error(workdir, capsys):
    argv = ["evaluate", "--model", str(workdir / "model.ckpt"), "--input", str(workdir / "test.smi"),
            "--out-dir", str(workdir)]
    assert main(argv) == 1
    assert _error(capsys)["error"] == "data"


def test_bad_latent_csv(tmp_path, workdir, capsys):
    (tmp_path / "z.csv").write_text("id,a,b\n1,0,0\n")
    argv = ["decode", "--model", str(workdir / "model.ckpt"), "--input", str(tmp_path / "z.csv"), "--out-dir", str(tmp_path)]
    assert main(argv) == 1
    assert _error(capsys)["error"] == "data"
