import csv
import math

import pytest

from chemhapto.cli import EXIT_OK, EXIT_USAGE, main
from chemhapto.config import ConfigError, load_config, default_config_path, parse_config_text

SMALL = """\
grid.nx = 16
grid.ny = 16
preset.name = gaussian-bump
preset.tissue = cosine
policy.dt_max = 0.01
policy.t_end = {t_end}
policy.record_every = 0.1
policy.snapshot_every = 1
output.dir = {out}
"""


def _write(tmp_path, name="run.cfg", t_end=0.5, out="out"):
    path = tmp_path / name
    path.write_text(SMALL.format(t_end=t_end, out=out))
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_default_config_parses():
    cfg = load_config(default_config_path())
    assert cfg.grid.nx == 128 and cfg.preset == "gaussian-bump"
    assert cfg.policy.t_end == 50.0 and cfg.p_list == (2.0, 3.0)
    assert cfg.preset_params["tissue"] == "cosine"


def test_config_errors_name_the_line():
    with pytest.raises(ConfigError, match=r":2: unknown key 'params.chii'"):
        parse_config_text("grid.nx = 16\nparams.chii = 1\n")
    with pytest.raises(ConfigError, match=r":2: duplicate key"):
        parse_config_text("grid.nx = 16\ngrid.nx = 32\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config_text("params.mu = lots\n")
    with pytest.raises(ConfigError, match="does not take"):
        parse_config_text("preset.name = constant\npreset.sigma = 0.1\n")
    with pytest.raises(ConfigError):
        parse_config_text("params.mu = -1\n")


def test_run_rejects_typo_key(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    path = tmp_path / "bad.cfg"
    path.write_text("params.chii = 1\n")
    assert main(["run", str(path)]) == EXIT_USAGE
    assert "chii" in capsys.readouterr().err


def test_run_zero_horizon_writes_single_row(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(_write(tmp_path, t_end=0))]) == EXIT_OK
    rows = _rows(tmp_path / "out" / "ledger.csv")
    assert len(rows) == 2 and float(rows[1][0]) == 0.0


def test_run_outputs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(_write(tmp_path, t_end=1.0))]) == EXIT_OK
    out = tmp_path / "out"
    rows = _rows(out / "ledger.csv")
    times = [float(r[0]) for r in rows[1:]]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert times[-1] >= 1.0 - 0.1
    for name in ("u", "v", "w"):
        assert (out / f"{name}_0.0000.dat").exists() and (out / f"{name}_1.0000.dat").exists()
    verdict_lines = (out / "verdicts.txt").read_text().splitlines()
    assert any(line.startswith("u_sup,") for line in verdict_lines)
    assert "k_const" in (out / "constants.txt").read_text()


def test_run_refuses_to_overwrite(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, t_end=0.2)
    assert main(["run", str(cfg)]) == EXIT_OK
    assert main(["run", str(cfg)]) == EXIT_USAGE
    assert "out" in capsys.readouterr().err


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("CHEMHAPTO_OUT", str(tmp_path / "elsewhere"))
    assert main(["run", str(_write(tmp_path, t_end=0.2))]) == EXIT_OK
    assert (tmp_path / "elsewhere" / "out" / "ledger.csv").exists()
    assert not (tmp_path / "out").exists()


def test_repeat_runs_are_byte_identical(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(_write(tmp_path, "a.cfg", t_end=1.0, out="a"))]) == EXIT_OK
    assert main(["run", str(_write(tmp_path, "b.cfg", t_end=1.0, out="b"))]) == EXIT_OK
    assert (tmp_path / "a" / "ledger.csv").read_bytes() == (tmp_path / "b" / "ledger.csv").read_bytes()


def test_sweep_three_values(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["sweep", str(_write(tmp_path, t_end=0.5)), "--param", "mu", "--values", "0.5,1,2"]) == EXIT_OK
    rows = _rows(tmp_path / "out" / "sweep_summary.csv")
    assert rows[0] == ["param", "value", "status", "final_u_sup", "max_u_sup", "all_bounded", "out_dir"]
    assert [r[1] for r in rows[1:]] == ["0.5", "1", "2"]
    assert all(r[2] == "ok" for r in rows[1:])
    for r in rows[1:]:
        assert (tmp_path / "out" / r[6] / "ledger.csv").exists()


def test_single_value_sweep_matches_run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(_write(tmp_path, "a.cfg", t_end=0.5, out="a"))]) == EXIT_OK
    assert main(["sweep", str(_write(tmp_path, "b.cfg", t_end=0.5, out="b")), "--param", "mu", "--values", "1"]) == EXIT_OK
    assert (tmp_path / "a" / "ledger.csv").read_bytes() == (tmp_path / "b" / "mu=1" / "ledger.csv").read_bytes()


def test_sweep_rejects_unknown_parameter(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["sweep", str(_write(tmp_path)), "--param", "nu", "--values", "1"]) == EXIT_USAGE


def test_logistic_sweep_stays_finite(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    values = "0.1,0.25,0.5,1,2,4"
    assert main(["sweep", str(_write(tmp_path, t_end=2.0)), "--param", "mu", "--values", values]) == EXIT_OK
    for r in _rows(tmp_path / "out" / "sweep_summary.csv")[1:]:
        assert math.isfinite(float(r[4]))


def test_mms_command(capsys):
    assert main(["mms"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_verify_is_deterministic_and_detects_broken_stencil(capsys):
    assert main(["verify"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["verify"]) == EXIT_OK
    assert capsys.readouterr().out == first
    assert main(["verify", "--break-stencil"]) != EXIT_OK
    assert "FAIL" in capsys.readouterr().out
