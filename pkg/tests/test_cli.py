"""Тесты командной строки."""

import json

from main import main
from processors.errors import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_CONTRACT,
    EXIT_FAILURE,
    EXIT_OK,
    SourceContractError,
    exit_code_for,
)
from processors.hash_families import family_from_json


def _run_args(family_file, *extra):
    return ["run", "--mode", "multi", "--n", "2", "--family-file", str(family_file), "--trials", "20", *extra]


def test_run_writes_json_lines(tmp_path, family_file):
    out = tmp_path / "result.jsonl"
    assert main(_run_args(family_file, "--rounds", "2", "--seed", "3", "--out", str(out))) == EXIT_OK
    lines = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert len(lines) == 21
    assert lines[-1]["summary"]["aggregates"]["trials"] == 20
    assert lines[-1]["summary"]["settings"]["seed"] == 3


def test_run_csv_and_workbook(tmp_path, family_file):
    out = tmp_path / "result.csv"
    xlsx = tmp_path / "result.xlsx"
    code = main(_run_args(family_file, "--rounds", "2", "--format", "csv", "--out", str(out), "--xlsx", str(xlsx)))
    assert code == EXIT_OK
    assert out.read_bytes().startswith(b"trial,aborted,failures,bit\r\n")
    assert xlsx.exists()


def test_run_prints_summary(capsys, family_file):
    assert main(_run_args(family_file, "--rounds", "1")) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["aggregates"]["trials"] == 20


def test_run_same_seed_same_output(tmp_path, family_file):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (first, second):
        assert main(_run_args(family_file, "--rounds", "3", "--device", "noisy:0.2", "--out", str(out))) == EXIT_OK
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


def test_invalid_rounds_leave_no_output(tmp_path, family_file):
    out = tmp_path / "result.jsonl"
    assert main(_run_args(family_file, "--rounds", "0", "--out", str(out))) == EXIT_CONFIG
    assert not out.exists()
    assert not any(p.name.endswith(".jsonl") for p in tmp_path.iterdir())


def test_invalid_device(tmp_path, family_file):
    out = tmp_path / "result.jsonl"
    assert main(_run_args(family_file, "--rounds", "2", "--device", "lhv:99", "--out", str(out))) == EXIT_CONFIG
    assert not out.exists()


def test_run_from_config_file(tmp_path, family_file):
    config = tmp_path / "experiment.json"
    config.write_text(
        json.dumps({
            "trials": 5,
            "protocol": {"mode": "robust", "n": 2, "rounds": 4, "threshold": 1, "family_file": family_file.name},
            "output": {"json": "result.jsonl"},
        }),
        encoding="utf-8",
    )
    assert main(["run", "--config", str(config)]) == EXIT_OK
    assert len((tmp_path / "result.jsonl").read_text(encoding="utf-8").splitlines()) == 6


def test_bounds_csv(tmp_path):
    out = tmp_path / "bounds.csv"
    assert main(["bounds", "--delta", "1e-6", "--m", "10", "--format", "csv", "--out", str(out)]) == EXIT_OK
    header = out.read_text(encoding="utf-8").splitlines()[0]
    for column in ("epsilon", "f", "l", "l_robust", "chernoff", "hoeffding"):
        assert column in header.split(",")


def test_relative_output_goes_to_output_dir(isolated_output):
    (isolated_output / "stale.partial.csv").write_text("x", encoding="utf-8")
    assert main(["bounds", "--delta", "1e-6", "--format", "csv", "--out", "bounds.csv"]) == EXIT_OK
    assert (isolated_output / "bounds.csv").exists()
    assert not (isolated_output / "stale.partial.csv").exists()


def test_bounds_sweep_to_stdout(capsys):
    assert main(["bounds", "--delta", "1e-3", "--sweep-rounds", "5", "--sweep-f", "0.9"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    sweep = [json.loads(line) for line in lines if '"chernoff_exact"' in line and '"l_robust"' not in line]
    assert [row["l"] for row in sweep] == [1, 2, 3, 4, 5]


def test_family_verify_full():
    assert main(["family", "verify", "--full", "--n", "2"]) == EXIT_OK


def test_family_verify_over_budget():
    assert main(["family", "verify", "--n", "8"]) == EXIT_BUDGET


def test_family_verify_not_covering(tmp_path):
    path = tmp_path / "constant.json"
    path.write_text(json.dumps({"kind": "explicit-table", "n": 2, "members": [{"table": "0000"}]}), encoding="utf-8")
    assert main(["family", "verify", "--family-file", str(path)]) == EXIT_FAILURE


def test_family_verify_bad_seed_hex(tmp_path):
    path = tmp_path / "broken.json"
    member = {"x_hi": "zz", "y_hi": "0", "x_lo": "0", "y_lo": "0"}
    path.write_text(
        json.dumps({"kind": "derandomized", "n": 2, "delta": 0.0625, "members": [member]}), encoding="utf-8"
    )
    assert main(["family", "verify", "--family-file", str(path)]) == EXIT_CONFIG


def test_family_build_prune(tmp_path):
    out = tmp_path / "family.json"
    assert main(["family", "build", "--n", "3", "--prune", "--seed", "1", "--out", str(out)]) == EXIT_OK
    family = family_from_json(json.loads(out.read_text(encoding="utf-8")))
    assert not family.lazy
    assert main(["family", "verify", "--family-file", str(out)]) == EXIT_OK


def test_decompose(tmp_path):
    source = tmp_path / "source.json"
    source.write_text(json.dumps({"n": 3, "probs": {str(i): 0.125 for i in range(8)}}), encoding="utf-8")
    out = tmp_path / "components.json"
    assert main(["decompose", "--source-file", str(source), "--out", str(out)]) == EXIT_OK
    components = json.loads(out.read_text(encoding="utf-8"))
    assert [c["weight"] for c in components] == [0.5, 0.5]


def test_decompose_low_entropy(tmp_path):
    source = tmp_path / "source.json"
    source.write_text(json.dumps({"n": 2, "probs": {"0": 0.5, "1": 0.5}}), encoding="utf-8")
    assert main(["decompose", "--source-file", str(source)]) == EXIT_CONFIG


def test_exit_codes():
    assert exit_code_for(SourceContractError("x")) == EXIT_CONTRACT
    assert exit_code_for(RuntimeError("x")) == EXIT_FAILURE
