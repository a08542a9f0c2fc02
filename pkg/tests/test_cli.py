import csv
import io
import json
import math
import subprocess
import sys

import pytest

from dampedq.cli import main, parse_config, parse_times, render_csv


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_times():
    assert parse_times("0:2:5") == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert parse_times("0.1, 0.3") == (0.1, 0.3)
    with pytest.raises(ValueError):
        parse_times("0:1")


def test_defaults():
    cfg = parse_config([])
    assert cfg.command == "equivalence"
    assert (cfg.params.omega, cfg.params.alpha, cfg.trunc, cfg.format) == (1.0, 0.6, 128, "csv")


def test_uncertainty_table(capsys):
    code, out, _ = run(["uncertainty", "--omega", "1", "--alpha", "0.6", "--t", "0:2:101"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 101
    for row in table:
        t = float(row["t"])
        assert float(row["uncertainty_product"]) == pytest.approx(0.5 * 1.25 * math.exp(-1.2 * t), abs=1e-12)
    assert out.endswith("\n") and "\r" not in out


def test_uncertainty_at_critical_time(capsys):
    t_star = math.log(1.25) / 1.2
    code, out, _ = run(["uncertainty", "--t", repr(t_star)], capsys)
    assert code == 0
    assert rows(out)[0]["uncertainty_product"] == "0.5"


def test_states_peak(capsys):
    code, out, _ = run(["states", "--n", "0", "--t", "0"], capsys)
    table = rows(out)
    assert code == 0 and list(table[0]) == ["t", "q", "re", "im", "modulus"]
    origin = next(r for r in table if float(r["q"]) == 0.0)
    assert float(origin["re"]) == pytest.approx((0.8 / math.pi) ** 0.25, abs=1e-15)
    assert origin["re"].startswith("0.710370")


@pytest.mark.parametrize(
    "command, extra",
    [("coherent", ["--z", "1+0.5j", "--t", "0:2:5"]), ("squeezed", ["--xi", "0.4", "--t", "0:1:3"]),
     ("classical", ["--t", "0:5:11"]), ("evolve", ["--n", "2", "--t", "0,0.5"])],
)
def test_commands_pass(capsys, command, extra):
    code, out, err = run([command, *extra], capsys)
    assert code == 0, err
    assert len(rows(out)) > 0


def test_equivalence_json_all_pass(capsys):
    code, out, _ = run(["equivalence", "--format", "json", "--n", "3", "--t", "0,0.5"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["all_passed"] is True
    assert set(doc) == {"command", "params", "records", "checks", "all_passed"}
    assert all(rec["passed"] is True for rec in doc["records"])
    assert doc["params"]["omega_tilde"] == pytest.approx(0.8)


def test_asymptotics_reports_failure(capsys):
    code, out, err = run(["asymptotics"], capsys)
    assert code == 1
    assert "FAILED asymptotic_residual_ratio[n=64,shift=on]" in err
    assert len(rows(out)) == 2


def test_exit_codes(capsys, tmp_path):
    assert run(["--alpha", "1.5", "--omega", "1"], capsys)[0] == 3
    assert run(["--alpha", "1.0"], capsys)[0] == 3
    assert run(["--bogus"], capsys)[0] == 2
    assert run(["teleport"], capsys)[0] == 2
    assert run(["--t", "0:1"], capsys)[0] == 2
    assert run(["--config", str(tmp_path / "missing.cfg")], capsys)[0] == 4
    bad = tmp_path / "bad.cfg"
    bad.write_text("omega 1\n")
    assert run(["--config", str(bad)], capsys)[0] == 4
    bad.write_text("omega = one\n")
    assert run(["--config", str(bad)], capsys)[0] == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["uncertainty", "--output", str(blocker / "out.csv")], capsys)[0] == 4


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference\nomega = 2.0\nalpha = 1.2\nt = 0,1\nformat = json\n")
    code, out, _ = run(["uncertainty", "--config", str(cfg)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["params"]["omega_tilde"] == pytest.approx(1.6)
    assert len(doc["records"]) == 2
    code, out, _ = run(["uncertainty", "--config", str(cfg), "--alpha", "0", "--format", "csv"], capsys)
    assert rows(out)[0]["uncertainty_product"] == "0.5"


def test_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DAMPEDQ_OUTPUT_DIR", str(tmp_path / "outdir"))
    code, out, _ = run(["uncertainty", "--t", "0,1", "--output", "u.csv"], capsys)
    assert code == 0 and out == ""
    assert (tmp_path / "outdir" / "u.csv").read_text().startswith("t,uncertainty_product\n")


def test_render_csv_precision():
    text = render_csv([{"a": 0.1, "b": True, "c": 3}])
    assert text == "a,b,c\n0.10000000000000001,true,3\n"


def test_module_entry_point(tmp_path):
    out = tmp_path / "u.json"
    proc = subprocess.run(
        [sys.executable, "-m", "dampedq", "uncertainty", "--t", "0,1", "--format", "json", "--output", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["command"] == "uncertainty"
