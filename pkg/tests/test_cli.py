import json

import pytest

from colddti import cli, synthetic


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    ds = synthetic.generate(n_drugs=20, n_proteins=12, n_samples=80, seed=5)
    synthetic.write_corpus(ds, root)
    return root


def run_cli(capsys, *argv):
    code = cli.run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_error_exit_code(capsys):
    code, _, _ = run_cli(capsys, "split", "--mode", "sideways")
    assert code == 1


def test_missing_subcommand(capsys):
    code, _, _ = run_cli(capsys)
    assert code == 1


def test_config_echo_precedes_output(corpus, capsys):
    code, out, _ = run_cli(capsys, "validate-data", "--data", str(corpus))
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith("config\t")
    echoed = json.loads(first.split("\t", 1)[1])
    assert echoed["data"] == str(corpus)


def test_validate_data_reports_counts(corpus, capsys):
    code, out, _ = run_cli(capsys, "validate-data", "--data", str(corpus))
    assert code == 0
    assert "drugs\t20" in out
    assert "proteins\t12" in out


def test_validate_data_missing_dir(tmp_path, capsys):
    code, _, err = run_cli(capsys, "validate-data", "--data", str(tmp_path / "no"))
    assert code == 2
    assert "error" in err


def test_split_writes_manifest(corpus, tmp_path, capsys):
    out_path = tmp_path / "m.json"
    code, out, _ = run_cli(capsys, "split", "--data", str(corpus),
                           "--mode", "cold-drug", "--seed", "3",
                           "--out", str(out_path))
    assert code == 0
    manifest = json.loads(out_path.read_text())
    assert manifest["mode"] == "cold_drug"
    assert manifest["seed"] == 3
    assert len(manifest["source_checksum"]) == 64


def test_gen_synthetic_writes_corpus(tmp_path, capsys):
    out_dir = tmp_path / "gen"
    out_dir.mkdir()
    code, out, _ = run_cli(capsys, "gen-synthetic", "--drugs", "6",
                           "--proteins", "6", "--samples", "12", "--seed", "2",
                           "--out", str(out_dir))
    assert code == 0
    for name in ("drugs", "proteins", "structures", "interactions"):
        assert (out_dir / f"{name}.tsv").exists()


def test_check_grad_passes(capsys):
    code, out, _ = run_cli(capsys, "check-grad", "--dim", "4", "--seed", "1")
    assert code == 0
    lines = [l for l in out.splitlines() if l.endswith("\tok")]
    assert len(lines) >= 18  # 16 projections + at least 2 MLP layers


def test_train_eval_flow(corpus, tmp_path, capsys):
    manifest = tmp_path / "m.json"
    ckpt = tmp_path / "model.ckpt"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_epochs": 1, "batch_size": 16,
                               "learning_rate": 1e-3, "seed": 2}))
    code, _, _ = run_cli(capsys, "split", "--data", str(corpus),
                         "--mode", "cold-drug", "--seed", "2",
                         "--out", str(manifest))
    assert code == 0
    code, out, _ = run_cli(capsys, "train", "--data", str(corpus),
                           "--manifest", str(manifest), "--config", str(cfg),
                           "--out", str(ckpt))
    assert code == 0
    assert ckpt.read_bytes()[:4] == b"CDTP"
    assert "epoch 0" in out
    assert "auc" in out

    report_path = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "eval", "--data", str(corpus),
                           "--manifest", str(manifest), "--config", str(cfg),
                           "--checkpoint", str(ckpt), "--out", str(report_path))
    assert code == 0
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["auc"] <= 1.0
    assert report["split_mode"] == "cold_drug"

    dump_path = tmp_path / "dump.json"
    ds = synthetic.generate(n_drugs=20, n_proteins=12, n_samples=80, seed=5)
    sample = ds.samples[0]
    code, _, _ = run_cli(capsys, "export-attention", "--data", str(corpus),
                         "--drug", sample.drug_id, "--protein", sample.protein_id,
                         "--checkpoint", str(ckpt), "--config", str(cfg),
                         "--out", str(dump_path))
    assert code == 0
    dump = json.loads(dump_path.read_text())
    assert dump["drug_id"] == sample.drug_id


def test_ablate_requires_drop(corpus, tmp_path, capsys):
    manifest = tmp_path / "m.json"
    run_cli(capsys, "split", "--data", str(corpus), "--mode", "cold-drug",
            "--seed", "2", "--out", str(manifest))
    code, _, _ = run_cli(capsys, "ablate", "--data", str(corpus),
                         "--manifest", str(manifest))
    assert code == 1


def test_ablate_rejects_unknown_level(corpus, tmp_path, capsys):
    manifest = tmp_path / "m.json"
    run_cli(capsys, "split", "--data", str(corpus), "--mode", "cold-drug",
            "--seed", "2", "--out", str(manifest))
    code, _, err = run_cli(capsys, "ablate", "--data", str(corpus),
                           "--manifest", str(manifest), "--drop", "z")
    assert code == 2
    assert "ablation" in err or "unknown" in err


def test_threads_env_hint(corpus, capsys, monkeypatch):
    monkeypatch.setenv("COLDDTI_THREADS", "8")
    code, _, err = run_cli(capsys, "validate-data", "--data", str(corpus))
    assert code == 0
    assert "single-worker" in err
