import json
import subprocess
import sys

import pytest

from p2stc.cli import main
from p2stc.harness import parse_csv


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "defaults": {"code": "5,7", "frame_info_bits": 18, "max_frames": 100, "batch_size": 50,
                     "eb_n0_db": [2, 6]},
        "scenarios": [{"id": "eq5", "puncturing": "Eq5"}, {"id": "full"}],
        "beta_grid": [0.4, 0.6],
    }))
    return path


def test_encode_file(tmp_path, capsys):
    src = tmp_path / "bits.txt"
    src.write_text("10 11\n")
    assert main(["encode", str(src), "--no-terminate"]) == 0
    assert capsys.readouterr().out.strip() == "11010010"
    assert main(["encode", str(src), "--puncture", "Eq5"]) == 0
    assert len(capsys.readouterr().out.strip()) == 9


def test_encode_stdin_subprocess():
    out = subprocess.run([sys.executable, "-m", "p2stc.cli", "encode"], input="1011",
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "110100101011"


def test_bound(capsys):
    assert main(["bound", "--L", "10", "--N", "2", "--rate", "5/8"]) == 0
    assert capsys.readouterr().out.strip() == "8"


def test_simulate_and_plot(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config), "--out", str(out), "--workers", "1"]) == 0
    pts = parse_csv((out / "results.csv").read_text())
    assert [(p.config_id, p.eb_n0_db) for p in pts] == [("eq5", 2.0), ("eq5", 6.0),
                                                        ("full", 2.0), ("full", 6.0)]
    meta = json.loads((out / "results.meta.json").read_text())
    assert len(meta["scenarios"]) == 2
    svg = (out / "results.svg").read_bytes()
    assert main(["plot", "--csv", str(out / "results.csv"), "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_bytes() == svg


def test_sweep_beta_stdout(config, capsys):
    assert main(["sweep-beta", "--config", str(config), "--frames", "50"]) == 0
    pts = parse_csv(capsys.readouterr().out)
    assert {p.beta for p in pts} == {"0.4", "0.6"}
    assert len(pts) == 8


def test_search_patterns(config, tmp_path, capsys):
    assert main(["search-patterns", "--config", str(config), "--ntx", "2", "--zeros", "2",
                 "--max-delta", "2", "--frames", "50", "--out", str(tmp_path / "s")]) == 0
    pts = parse_csv((tmp_path / "s" / "search.csv").read_text())
    assert len(pts) >= 3 and all("/" in p.config_id for p in pts)


@pytest.mark.parametrize("argv", [
    ["encode", "/no/such/file"],
    ["bound", "--L", "0", "--N", "2", "--rate", "1/2"],
    ["simulate", "--config", "/no/such.json", "--out", "/tmp/x"],
    ["plot", "--csv", "/no/such.csv"],
    ["search-patterns", "--config", "CFG", "--ntx", "2", "--zeros", "9"],
])
def test_errors_exit_nonzero(argv, config, capsys):
    argv = [str(config) if a == "CFG" else a for a in argv]
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_encode_input(tmp_path, capsys):
    src = tmp_path / "bits.txt"
    src.write_text("10x1")
    assert main(["encode", str(src)]) == 1
    assert "0/1" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--L", "x"])
    assert exc.value.code == 2
