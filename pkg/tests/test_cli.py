import json
import subprocess
import sys
from pathlib import Path

import pytest

from cryocim import __version__
from cryocim.cli import main
from cryocim.scenario import bundled_scenarios, check_file, load_scenario, resolve_path

BUNDLED = ["fig2_hysteresis", "fig4_logic", "fig4_mc", "fig4_read"]


def _write(tmp_path, text, name="s.scenario"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _files(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_bundled_list():
    assert bundled_scenarios() == BUNDLED


@pytest.mark.parametrize("name", BUNDLED)
def test_check_bundled(name, capsys):
    assert main(["check", name]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == f"cryocim {__version__}"


def test_logic_scenario_outputs(tmp_path):
    assert main(["run", "fig4_logic", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "results.json").read_text())
    got = {op["opcode"]: [op["outputs"][str(r)] for r in range(4)]
           for op in doc["ops"] if op["op"] == "logic" and len(op["outputs"]) == 4}
    assert got == {"NAND": [1, 1, 1, 0], "NOR": [1, 0, 0, 0], "XOR": [0, 1, 1, 0]}


def test_mc_scenario_distributions(tmp_path):
    assert main(["run", "fig4_mc", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    for stem in ("read_current", "cell_hall_voltage_bit0", "row_voltage_00", "row_voltage_01"):
        assert any(n.endswith(f"{stem}.csv") for n in names)
        assert any(n.endswith(f"{stem}.json") for n in names)
    margins = [n for n in names if n.endswith("_margins.json")]
    assert json.loads((tmp_path / margins[0]).read_text())["ok"] is True


def test_every_artifact_has_header(tmp_path):
    for name in BUNDLED:
        out = tmp_path / name
        assert main(["run", name, "--out", str(out)]) == 0
        for p in out.iterdir():
            if p.suffix == ".json":
                header = json.loads(p.read_text())["header"]
                assert header["tool"] == f"cryocim {__version__}" and "seed" in header, p.name
            else:
                line = p.read_text().splitlines()[0]
                assert "cryocim" in line and "seed" in line, p.name


def test_read_scenario(tmp_path):
    assert main(["run", "fig4_read", "--out", str(tmp_path)]) == 0
    ops = json.loads((tmp_path / "results.json").read_text())["ops"]
    assert [op["bit"] for op in ops if op["op"] == "read"] == [0, 1]
    lines = (tmp_path / "traces.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["tool"] == f"cryocim {__version__}"
    assert len(lines) == 1 + 5


def test_hysteresis_scenario(tmp_path):
    assert main(["run", "fig2_hysteresis", "--out", str(tmp_path)]) == 0
    op = json.loads((tmp_path / "results.json").read_text())["ops"][0]
    tr = op["transitions"]
    assert [t["to_bit"] for t in tr] == [1, 0]
    # the 0.05 nA grid lands on both thresholds (up to rounding of the grid)
    assert tr[0]["i_bias"] == pytest.approx(3.5e-9, rel=1e-12)
    assert tr[1]["i_bias"] == pytest.approx(-3.5e-9, rel=1e-12)


def test_empty_ops(tmp_path):
    sc = _write(tmp_path, "name: empty\nops: []\n")
    out = tmp_path / "out"
    assert main(["check", str(sc)]) == 0
    assert main(["run", str(sc), "--out", str(out)]) == 0
    lines = (out / "traces.jsonl").read_text().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["scenario"] == "empty"


@pytest.mark.parametrize("name", BUNDLED)
def test_byte_identical_reruns(tmp_path, name):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", name, "--out", str(a)]) == 0
    assert main(["run", name, "--out", str(b)]) == 0
    assert main(["run", name, "--out", str(c), "--workers", "4"]) == 0
    assert _files(a) == _files(b) == _files(c)


@pytest.mark.parametrize("body,needle", [
    ("array: {rows: 4, cols: 4}\nops:\n  - {op: read, row: 4, col: 0}\n", "ops[0].row"),
    ("ops:\n  - {op: logic, opcode: AND, cols: [0, 1], rows: all}\n", "unknown opcode 'AND'"),
    ("ops:\n  - {op: logic, opcode: NAND, cols: [0, 0], rows: all}\n", "ops[0].cols"),
    ("device: {i_c_plus: -1e-9}\n", "i_c_plus"),
    ("sense: {gain: 1000, bogus: 1}\n", "sense.bogus"),
    ("variation: {relative_sigma: -0.5}\n", "relative_sigma"),
    ("ops: 3\n", "ops"),
])
def test_check_names_violation(tmp_path, body, needle, capsys):
    sc = _write(tmp_path, body)
    assert main(["check", str(sc)]) == 1
    assert needle in capsys.readouterr().out
    assert any(needle in v for v in check_file(sc))


def test_check_lists_every_violation(tmp_path):
    sc = _write(tmp_path, "array: {rows: 2, cols: 2}\nops:\n  - {op: read, row: 5, col: 0}\n  - {op: write, row: 0, col: 7, bit: 1}\n")
    v = check_file(sc)
    assert any(s.startswith("ops[0]") for s in v) and any(s.startswith("ops[1]") for s in v)


def test_run_rejects_invalid(tmp_path, capsys):
    sc = _write(tmp_path, "ops:\n  - {op: dance}\n")
    assert main(["run", str(sc), "--out", str(tmp_path / "o")]) == 2
    assert "ops[0].op" in capsys.readouterr().err


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.scenario"), "--out", str(tmp_path)]) == 2


def test_model_error_names_operation(tmp_path, capsys):
    sc = _write(tmp_path, "bias: {v_write: 0.3}\nops:\n  - {op: read, row: 0, col: 0}\n  - {op: write, row: 0, col: 0, bit: 1}\n")
    assert main(["check", str(sc)]) == 0
    assert main(["run", str(sc), "--out", str(tmp_path / "o")]) == 1
    assert "operation 1 (write)" in capsys.readouterr().err


def test_check_and_run_agree(tmp_path):
    for name in BUNDLED:
        assert check_file(resolve_path(name)) == []
        load_scenario(name)


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CRYOCIM_OUT", str(tmp_path / "env_out"))
    sc = _write(tmp_path, "ops: []\n")
    assert main(["run", str(sc)]) == 0
    assert (tmp_path / "env_out" / "traces.jsonl").exists()


def test_selector_table_path_relative_to_scenario(tmp_path):
    (tmp_path / "sel.csv").write_text("voltage_v,current_a\n-1,-1e-6\n0,0\n1,1e-6\n")
    sc = _write(tmp_path, "device: {selector_table: sel.csv}\nops: []\n")
    assert check_file(sc) == []
    assert load_scenario(sc).selector().source.endswith("sel.csv")


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cryocim.cli", "version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("cryocim ")
