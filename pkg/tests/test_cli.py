import json
from pathlib import Path

import pytest

from execopt.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main, parse_args

CONFIGS = Path(__file__).resolve().parent.parent / "data" / "configs"


def _ini(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_defaults_prints_every_section(capsys) -> None:
    assert main(["defaults"]) == EXIT_OK
    out = capsys.readouterr().out
    for section in ("[problem]", "[impact]", "[grid]", "[dham]", "[dang]", "[multistart]", "[output]"):
        assert section in out


def test_validate_config(capsys) -> None:
    assert main(["validate-config", str(CONFIGS / "dham.ini")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("OK: ")


def test_validate_rejects_arbitrage_region() -> None:
    with pytest.raises(SystemExit) as exc:
        main(["validate-config", str(CONFIGS / "arbitrage_violation.ini")])
    assert str(exc.value.code).startswith("ERROR: ")
    assert "0.415" in str(exc.value.code)


def test_run_perturbative(tmp_path, capsys, monkeypatch) -> None:
    summary = tmp_path / "summary.md"
    monkeypatch.setenv("GITHUB_STEP_SUMMARY", str(summary))
    cfg = _ini(tmp_path, "[problem]\nname = cli\n\n[grid]\nN = 16\n\n[solver]\nmethod = perturbative\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--seed", "3"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "### Run cli" in printed
    assert "Converged: **yes**" in printed
    report = json.loads((out / "cli_report.json").read_text(encoding="utf-8"))
    assert report["seed"] == 3
    assert "### Run cli" in summary.read_text(encoding="utf-8")


def test_reproduce_command(tmp_path, capsys) -> None:
    assert main(["reproduce", "perturbative_profile", "--quick", "--N", "32", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "perturbative_profile.csv").exists()
    assert "### reproduce perturbative_profile" in capsys.readouterr().out


def test_parse_args() -> None:
    args = parse_args(["reproduce", "cost_surface", "--gammas", "0.45,0.5", "--deltas", "0.55", "--d", "0.1"])
    assert args.gammas == [0.45, 0.5]
    assert args.deltas == [0.55]
    assert args.d == 0.1
    with pytest.raises(SystemExit):
        parse_args(["reproduce", "no_such_table"])
    with pytest.raises(SystemExit):
        main(["--log-level", "LOUD", "defaults"])


@pytest.mark.parametrize("argv", [
    ["run"],
    ["reproduce", "no_such_table"],
    ["reproduce", "cost_surface", "--gammas", "a,b"],
    ["no_such_command"],
])
def test_usage_errors_exit_with_error_code(argv, capsys) -> None:
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_ERROR
    assert "execopt" in capsys.readouterr().err


def test_run_without_converged_start_exits_not_converged(tmp_path, monkeypatch) -> None:
    import execopt.numopt as numopt

    original = numopt.local_minimize

    def stalled(*args, **kwargs):
        rep = original(*args, **kwargs)
        rep.converged = False
        return rep

    monkeypatch.setattr(numopt, "local_minimize", stalled)
    cfg = _ini(tmp_path, "[problem]\nname = stall\n\n[grid]\nN = 6\n\n"
                         "[solver]\nmethod = multistart\n\n[multistart]\nstarts = 3\n")
    assert main(["run", cfg, "--out", str(tmp_path / "out"), "--workers", "1"]) == EXIT_NOT_CONVERGED
