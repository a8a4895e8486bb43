import csv
import io
import json
import subprocess
import sys

import pytest

from fpstates import __version__
from fpstates.cli import main
from fpstates.config import config_hash, parse_config
from fpstates.errors import ConfigError, EmptySpectrum

MINIMAL = """\
# torus L = 2 pi, m = 1, bump softening
model.mass = 1
cutoff = 20
slab.a = -15
slab.b = 15
soften.kind = bump
diagnostics.expect = converged
diagnostics.fluctuation_powers = 1
"""


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL)
    return path


def test_minimal_run_converges(config_file, tmp_path, monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    out = tmp_path / "out"
    code, _, err = run(["run", "--config", str(config_file), "--output-dir", str(out)])
    assert code == 0, err
    assert (out / "fpstate.txt").is_file()
    rows = list(csv.DictReader(body((out / "summary.csv").read_text())))
    assert {r["verdict"] for r in rows} == {"converged"}
    for path in out.glob("*.csv"):
        first = path.read_text().splitlines()[0]
        assert first.startswith(f"# fpstates {__version__} config_hash=") and first.endswith("seed=0")


def test_run_is_deterministic(config_file, tmp_path, monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["run", "--config", str(config_file), "--output-dir", str(d)])[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_json_mirrors_csv(config_file, tmp_path):
    out = tmp_path / "out"
    run(["run", "--config", str(config_file), "--output-dir", str(out)])
    doc = json.loads((out / "summary.json").read_text())
    assert set(doc) == {"tool", "version", "config_hash", "seed", "columns", "rows"}
    assert doc["columns"] == ["series", "p", "sum", "decade_change", "tail_estimate", "verdict"]
    rows = list(csv.DictReader(body((out / "summary.csv").read_text())))
    assert len(rows) == len(doc["rows"])
    for r, j in zip(rows, doc["rows"]):
        assert set(j) == set(doc["columns"])
        assert float(r["sum"]) == float(j["sum"]) and r["verdict"] == j["verdict"]
    assert doc["config_hash"] in (out / "summary.csv").read_text().splitlines()[0]


def test_env_output_dir(config_file, tmp_path, monkeypatch):
    env_dir = tmp_path / "env"
    monkeypatch.setenv("FPSTATES_OUTPUT_DIR", str(env_dir))
    assert run(["spectrum", "--cutoff", "2"])[0] == 0
    assert (env_dir / "spectrum.txt").is_file()
    flag_dir = tmp_path / "flag"
    assert run(["run", "--config", str(config_file), "--output-dir", str(flag_dir)])[0] == 0
    assert (flag_dir / "summary.csv").is_file()


def test_config_hash_ignores_order():
    a = parse_config("cutoff = 30\nmodel.mass = 2\nslab.a = -2\n")
    b = parse_config("slab.a = -2\nmodel.mass = 2\ncutoff = 30\n")
    assert a.config_hash() == b.config_hash()
    assert config_hash({"x": 1, "y": [1, 2]}) == config_hash({"y": [1, 2], "x": 1})
    assert parse_config("cutoff = 31\n").config_hash() != parse_config("cutoff = 30\n").config_hash()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config("cutof = 3\n")
    with pytest.raises(ConfigError):
        parse_config("cutoff = 3\ncutoff = 4\n")
    with pytest.raises(ConfigError):
        parse_config("diagnostics.tail_tol = 2\n")
    with pytest.raises(ConfigError):
        parse_config("soften.kind = file\nsoften.params = missing.txt\n", base_dir=tmp_path)
    with pytest.raises(EmptySpectrum):
        parse_config("cutoff = 0.5\n")


def test_cutoff_below_mass_exits(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("cutoff = 0.5\n")
    code, _, err = run(["run", "--config", str(path)])
    assert code == 2
    record = json.loads(err)
    assert record["error"] == "EmptySpectrum" and record["command"] == "run"


def test_unknown_key_exits(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    code, _, err = run(["run", "--config", str(path)])
    assert code == 2 and json.loads(err)["error"] == "ConfigError"


def test_unknown_preset_exits():
    code, _, err = run(["replicate", "nonsense"])
    record = json.loads(err)
    assert code == 2 and record["error"] == "UnknownPreset"
    assert record["message"].startswith("unknown preset 'nonsense'")


def test_spectrum_stdout(monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    code, out, _ = run(["spectrum", "--cutoff", "1.5"])
    assert code == 0
    rows = [line.split() for line in body(out)]
    assert len(rows) == 14 and rows[0][:2] == ["1", "1.0"]


def test_fpstate_build(monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    code, out, _ = run(["fpstate", "build", "--cutoff", "1.5"])
    assert code == 0
    assert "# softening=indicator(a=-1.0,b=1.0)" in out


def test_diagnose_commands(monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    wide = ["--cutoff", "20", "--slab", "-15", "15", "--soften", "bump"]
    code, out, _ = run(["diagnose", "series", *wide, "--p", "0", "--expect", "converged"])
    assert code == 0 and "converged" in out
    code, out, _ = run(["diagnose", "scan", "--lengths", "1", "--cutoff", "30", "--b-count", "5"])
    assert code == 0
    code, out, _ = run(["diagnose", "k-spectrum", "--cutoff", "3", "--sub", "-0.5", "0.5"])
    assert code == 0
    code, out, _ = run(["diagnose", "fluctuations", *wide, "--p", "1", "--expect", "converged"])
    assert code == 0
    code, _, _ = run(["diagnose", "series", "--cutoff", "5", "--p", "0", "--expect", "converged"])
    assert code == 1


def test_kernel_commands(tmp_path, monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("0 1 2 3 0.5 1 1 1\n")
    code, out, _ = run(["kernel", "eval", "--cutoff", "3", "--pairs", str(pairs)])
    assert code == 0 and "re_00" in out
    code, out, _ = run(["kernel", "norms", "--cutoff", "3", "--modes", "3", "--samples", "256"])
    assert code == 0


def test_oracle_check(monkeypatch):
    monkeypatch.delenv("FPSTATES_OUTPUT_DIR", raising=False)
    code, out, _ = run(["oracle", "check", "--cutoff", "5", "--modes", "1,3,9"])
    assert code == 0
    code, _, err = run(["oracle", "check", "--cutoff", "5", "--modes", "1,2,3,4,5,6,7"])
    assert code == 2 and json.loads(err)["error"] == "TooManyModes"


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "fpstates", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == f"fpstates {__version__}"
