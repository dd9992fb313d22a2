import subprocess
import sys

import pytest

from dolbeault_lab.cli import main


def _body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_weights_full_grid(tmp_path, capsys):
    out = tmp_path / "w.csv"
    assert main(["weights", "--out", str(out)]) == 0
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0] == "# schema=1" and lines[1] == "# command=weights"
    assert len(_body(text)) == 1 + 584
    assert "failures=0" in capsys.readouterr().err


def test_csv_line_endings(tmp_path):
    out = tmp_path / "w.csv"
    main(["weights", "--p", "2", "--s", "0,1/2", "--out", str(out)])
    assert b"\r" not in out.read_bytes()


def test_determinism(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('p = "2"\ns = "0"\nn_bumps = 3\nresolutions = [[16, 32], [32, 64]]\ndrift = 1.0\n')
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["opnorm", "--config", str(cfg), "--seed", "11", "--out", str(a)])
    main(["opnorm", "--config", str(cfg), "--seed", "11", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["opnorm", "--config", str(cfg), "--seed", "12", "--out", str(c)])
    assert _body(a.read_text()) != _body(c.read_text())


def test_empty_sweep_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("resolutions = []\n")
    assert main(["solve", "--config", str(cfg)]) == 2
    assert "resolutions" in capsys.readouterr().err
    assert main(["sweep", "--epsilons", ""]) == 2


def test_bad_field_names_path(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('mode = "sideways"\n')
    assert main(["opnorm", "--config", str(cfg)]) == 2
    assert "mode" in capsys.readouterr().err


def test_failed_assertion_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    # an impossible tolerance makes every row fail
    cfg.write_text('n = 1\nomega = "dz1"\nresolutions = [32]\ntol = -1.0\n')
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 1
    assert "FAILED: dz1@32" in capsys.readouterr().err


def test_solve_residual_column(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('n = 1\nomega = "dz1"\nresolutions = [32, 64]\n')
    out, field = tmp_path / "o.csv", tmp_path / "eta.csv"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--field", str(field)]) == 0
    rows = _body(out.read_text())
    assert rows[0].startswith("omega,resolution,residual_on_Q")
    assert len(rows) == 3
    assert field.read_text().strip()


@pytest.mark.parametrize("cmd", ["norms", "witness"])
def test_analysis_commands(cmd, tmp_path):
    assert main([cmd, "--out", str(tmp_path / "o.csv")]) == 0


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "dolbeault_lab.cli", "weights", "--p", "inf", "--s", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("# schema=1\n")
