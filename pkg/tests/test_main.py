import json
from pathlib import Path

import pytest

from core.exceptions import CflViolationError, CorruptCheckpointError, ValidationFailure
from runner.main import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, _exit_code, build_parser, cli_dispatch


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    for name in ("SQG_OUTPUT__DIR", "SQG_LOG__LEVEL", "SQG_WORKERS__JOBS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def test_parser_knows_every_command() -> None:
    parser = build_parser()
    for argv in (
        ["simulate", "--config", "run.json"],
        ["extend", "--checkpoint", "run.sqgf"],
        ["diagnose", "oscillation", "--config", "run.json"],
        ["constants", "--sweep", "0.5", "0.75"],
        ["decay", "--config", "run.json", "--window", "0.1", "0.5"],
        ["verify", "all"],
    ):
        assert parser.parse_args(argv).command == argv[0]


def test_unknown_suite_is_a_usage_error() -> None:
    with pytest.raises(SystemExit):
        cli_dispatch(["verify", "nonsense"])


def test_exit_codes() -> None:
    assert _exit_code(CflViolationError(1.0, 0.5)) == EXIT_NUMERICAL
    assert _exit_code(ValidationFailure("bad")) == EXIT_VALIDATION
    assert _exit_code(CorruptCheckpointError("bad magic")) == EXIT_VALIDATION
    assert _exit_code(FileNotFoundError("run.json")) == EXIT_VALIDATION
    assert _exit_code(ValueError("plain value error")) == EXIT_VALIDATION
    assert _exit_code(RuntimeError("unexpected")) is None


def test_missing_config_exits_with_validation_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_dispatch(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_VALIDATION
    assert capsys.readouterr().err.startswith("error:")


def test_constants_json_report(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_dispatch(["constants", "--alpha", "0.75", "--c0", "0.6", "--json", "--output-dir", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["kind"] == "constants"
    assert report["results"]["ledger"]["r0"] == 0.00234375
    assert (tmp_path / "constants.json").exists()


def test_constants_needs_alpha_and_c0(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_dispatch(["constants"]) == EXIT_VALIDATION
    assert "--alpha" in capsys.readouterr().err


def test_json_errors_go_to_stderr(capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_dispatch(["constants", "--alpha", "0.75", "--c0", "0.2", "--json"])
    captured = capsys.readouterr()
    assert code == EXIT_VALIDATION
    assert captured.out == ""
    error = json.loads(captured.err)
    assert error["error"] == "ValidationFailure"
    assert error["exit_code"] == EXIT_VALIDATION
    assert "c0" in error["message"]


def test_verify_prints_a_table(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_dispatch(["verify", "riesz", "--n", "32", "--samples", "1", "--output-dir", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "all checks passed" in out
    assert (tmp_path / "verify_riesz.json").exists()


def test_simulate_then_diagnose(config_file: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    output = tmp_path / "cli"
    assert cli_dispatch(["simulate", "--config", str(config_file), "--output-dir", str(output)]) == EXIT_OK
    assert (output / "unit_norms.csv").exists()
    capsys.readouterr()

    code = cli_dispatch(["diagnose", "recursion", "--config", str(config_file), "--json", "--output-dir", str(output)])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["results"]["result"]["outcome"] == "converges"
    assert (output / "unit_recursion.json").exists()


def test_decay_window_from_the_command_line(config_file: Path, tmp_path: Path) -> None:
    argv = ["decay", "--config", str(config_file), "--window", "0.1", "0.5", "--output-dir", str(tmp_path)]
    assert cli_dispatch(argv) == EXIT_OK
    report = json.loads((tmp_path / "unit_decay.json").read_text(encoding="utf-8"))
    assert report["parameters"]["window"] == [0.1, 0.5]


def test_simulate_then_extend_a_checkpoint(config_file: Path, tmp_path: Path) -> None:
    output = tmp_path / "cli"
    assert cli_dispatch(["simulate", "--config", str(config_file), "--output-dir", str(output)]) == EXIT_OK
    checkpoint = max(output.glob("unit_*.sqgf"))
    argv = ["extend", "--checkpoint", str(checkpoint), "--z-max", "2.0", "--levels", "6", "--output-dir", str(output)]
    assert cli_dispatch(argv) == EXIT_OK
    argv += ["--method", "quadrature"]
    assert cli_dispatch(argv) == EXIT_OK


def test_verify_recursion_suite(tmp_path: Path) -> None:
    assert cli_dispatch(["verify", "recursion", "--output-dir", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "verify_recursion.json").read_text(encoding="utf-8"))
    assert report["kind"] == "verify"


def test_process_settings_leave_results_unchanged(
    monkeypatch: pytest.MonkeyPatch, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    argv = ["constants", "--sweep", "0.55", "0.75", "0.9", "--json", "--output-dir", str(tmp_path)]
    assert cli_dispatch(argv) == EXIT_OK
    baseline = json.loads(capsys.readouterr().out)
    monkeypatch.setenv("SQG_LOG__LEVEL", "DEBUG")
    monkeypatch.setenv("SQG_WORKERS__JOBS", "3")
    assert cli_dispatch(argv) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["results"] == baseline["results"]
