import json
import subprocess
import sys

import pytest

from plap.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunManifest, main


def test_classify_output(capsys):
    assert main(["classify", "--p", "3", "--dim", "1", "--alpha", "1.5", "--beta", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "J=finite K=infinite CFS=holds"


@pytest.mark.parametrize(
    "argv,line",
    [
        (["--p", "3", "--dim", "1", "--alpha", "5"], "J=finite K=finite CFS=fails"),
        (["--p", "2", "--dim", "2", "--alpha", "1", "--beta", "0.5"], "J=infinite K=infinite CFS=holds"),
    ],
)
def test_classify_cases(argv, line, capsys):
    main(["classify", *argv])
    assert capsys.readouterr().out.strip() == line


def test_barenblatt_csv_is_reproducible(tmp_path):
    out = tmp_path / "bb.csv"
    argv = ["barenblatt", "--p", "3", "--dim", "1", "--n", "11", "--out", str(out)]
    assert main(argv) == EXIT_OK
    first = out.read_bytes()
    assert first.startswith(b"r,u,t\n") and first.count(b"\n") == 12
    assert main(argv) == EXIT_OK
    assert out.read_bytes() == first
    manifest = RunManifest.from_json((tmp_path / "bb.manifest.json").read_text())
    assert manifest.command == "barenblatt" and manifest.config["p"] == 3.0


def test_manifest_round_trip(tmp_path):
    m = RunManifest("0.1.0", "solve", {"p": 3.0}, {"a.json": "00"}, 1.5, {"tol": 1e-12}, {"ok": True})
    path = m.write(tmp_path / "m.json")
    assert RunManifest.from_json(path.read_text()) == m


@pytest.mark.parametrize(
    "argv",
    [
        ["classify", "--p", "3", "--dim", "1", "--bogus", "1"],
        ["classify", "--p", "3", "--alpha", "1"],  # missing --dim
        ["classify", "--p", "0.5", "--dim", "1", "--alpha", "1"],
        ["no-such-command"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PLAP_OUT_DIR", str(tmp_path))
    assert main(["ode-flow", "--alpha", "2", "--a", "1", "--n", "5"]) == EXIT_OK
    assert (tmp_path / "ode_flow.csv").read_text().splitlines()[0] == "t,phi"
    # an explicit flag wins over the environment
    other = tmp_path / "sub" / "x.csv"
    assert main(["ode-flow", "--alpha", "2", "--a", "1", "--n", "5", "--out", str(other)]) == EXIT_OK
    assert other.exists()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 2.0, "dim": 2, "spec": {"family": "power_log", "alpha": 3.0, "beta": 0.0}, "halvings": 12}))
    out = tmp_path / "run"
    code = main(["experiment", "lemma-int", "--config", str(cfg), "--out", str(out)])
    assert code == EXIT_OK
    manifest = RunManifest.from_json((out / "manifest.json").read_text())
    assert _verdict(manifest) == "Divergent"
    assert str(cfg) in manifest.input_hashes
    # --alpha overrides the config's nonlinearity
    code = main(["experiment", "lemma-int", "--config", str(cfg), "--alpha", "1.5", "--out", str(out)])
    assert code == EXIT_OK
    manifest = RunManifest.from_json((out / "manifest.json").read_text())
    assert _verdict(manifest) == "Convergent"


def test_failed_experiment_exit_code(tmp_path):
    code = main(["experiment", "k-limit", "--config", _write(tmp_path, {"ks": [1, 4, 16], "dr": 0.02, "h": 0.01}), "--out", str(tmp_path / "k")])
    assert code == EXIT_FAIL


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "plap", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("plap ")


def _write(tmp_path, data):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    return str(path)


def _verdict(manifest):
    return next(m["value"] for m in manifest.results["metrics"] if m["label"] == "quadrature_verdict")
