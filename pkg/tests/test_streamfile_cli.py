import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nlab import cli, streamfile
from nlab.errors import StreamFormatError
from nlab.generators import build
from nlab.streamfile import StreamHeader

NLAB = [sys.executable, "-m", "nlab.cli"]


def run(*args, stdin=None, check=True):
    proc = subprocess.run(NLAB + list(args), input=stdin, capture_output=True)
    if check and proc.returncode != 0:
        raise AssertionError(proc.stderr.decode())
    return proc


# --- stream files -------------------------------------------------------------


@pytest.mark.parametrize("header", [
    StreamHeader(2, 16),
    StreamHeader(16, None, sel="ap:k=1,l=2"),
    StreamHeader(3, 5, sel="periodic:m=2,r=1", spec="duplicate r=2 inner=[champernowne b=3]"),
])
def test_header_roundtrip(header):
    assert StreamHeader.parse(header.render()) == header


@pytest.mark.parametrize("line", ["hello", "#nlab v9 b=2 n=3", "#nlab v1 b=1 n=3", "#nlab v1 b=x n=3"])
def test_bad_headers(line):
    with pytest.raises(StreamFormatError):
        StreamHeader.parse(line)


@pytest.mark.parametrize("base", [2, 10, 11, 16, 257])
def test_save_load_roundtrip(tmp_path, base):
    digits = np.random.default_rng(base).integers(0, base, 200_003)
    path = str(tmp_path / "s.txt")
    streamfile.save(path, StreamHeader(base, len(digits)), digits)
    header, back = streamfile.read_all(path)
    assert header.base == base and header.n == len(digits)
    assert np.array_equal(back, digits)


def test_payload_count_mismatch(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("#nlab v1 b=2 n=5\n0101\n")
    with pytest.raises(StreamFormatError):
        streamfile.read_all(str(path))
    path.write_text("#nlab v1 b=2 n=3\n012\n")
    with pytest.raises(StreamFormatError):
        streamfile.read_all(str(path))


def test_failed_write_leaves_no_file(tmp_path):
    path = tmp_path / "out.txt"
    with pytest.raises(StreamFormatError):
        streamfile.save(str(path), StreamHeader(2, 10), np.zeros(3, dtype=np.int64))
    assert os.listdir(tmp_path) == []


# --- commands in-process --------------------------------------------------------


def test_gen_champernowne(tmp_path):
    out = tmp_path / "champ.txt"
    assert cli.main(["gen", "champernowne", "b=2", "-N", "16", "-o", str(out)]) == 0
    assert out.read_text() == "#nlab v1 b=2 n=16 spec=champernowne b=2\n1101110010111011\n"


SPECS = [
    "champernowne b=3",
    "iid uniform b=2 seed=42",
    "iid b=4 w=1/2|1/4|1/8|1/8 seed=3",
    "concat b=2 w=1/3|2/3",
    "thm3 b=2 K=2 seed=7",
    "duplicate r=2 inner=[champernowne b=2]",
    "fill_zero sel=periodic:m=2,r=2 inner=[iid b=2 seed=0]",
    "iid b=2 K=2 measure=thm3 seed=1",
]


@pytest.mark.parametrize("spec", SPECS)
def test_gen_is_deterministic_and_matches_generator(tmp_path, spec):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert cli.main(["gen", spec, "-N", "20000", "-o", str(a)]) == 0
    assert cli.main(["gen", spec, "-N", "20000", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, digits = streamfile.read_all(str(a))
    assert np.array_equal(digits, build(header.spec).take(20000))


def test_gen_overrides(tmp_path):
    out = tmp_path / "o.txt"
    cli.main(["gen", "iid", "uniform", "b=2", "seed=1", "--seed", "9", "-N", "100", "-o", str(out)])
    header, digits = streamfile.read_all(str(out))
    assert header.spec == "iid b=2 measure=uniform seed=9"
    assert np.array_equal(digits, build("iid uniform b=2 seed=9").take(100))


def test_select_identity_and_odd_positions(tmp_path):
    src, same, odd = tmp_path / "s.txt", tmp_path / "same.txt", tmp_path / "odd.txt"
    cli.main(["gen", "iid", "uniform", "b=3", "seed=5", "-N", "1001", "-o", str(src)])
    cli.main(["select", str(src), "ap:k=1,l=1", "-o", str(same)])
    cli.main(["select", str(src), "periodic:m=2,r=1", "-o", str(odd)])
    assert same.read_text().split("\n")[1] == src.read_text().split("\n")[1]
    _, digits = streamfile.read_all(str(src))
    header, picked = streamfile.read_all(str(odd))
    assert header.n == 501 and header.sel == "periodic:m=2,r=1"
    assert np.array_equal(picked, digits[::2])


def test_select_undoes_duplicate(tmp_path):
    dup, back = tmp_path / "d.txt", tmp_path / "b.txt"
    cli.main(["gen", "duplicate", "r=2", "inner=[iid b=2 seed=3]", "-N", "20000", "-o", str(dup)])
    cli.main(["select", str(dup), "ap:k=1,l=2", "-o", str(back)])
    assert np.array_equal(streamfile.read_all(str(back))[1], build("iid b=2 seed=3").take(10000))


def test_select_warns_on_missing_indices(tmp_path, capsys):
    src = tmp_path / "s.txt"
    cli.main(["gen", "champernowne", "b=2", "-N", "10", "-o", str(src)])
    capsys.readouterr()
    assert cli.main(["select", str(src), "explicit:n=2|5|11|40", "-o", str(tmp_path / "x.txt")]) == 0
    assert "2 selected indices" in capsys.readouterr().err


def test_analyze_all_zero_file(tmp_path, capsys):
    src, rep = tmp_path / "z.txt", tmp_path / "r.json"
    streamfile.save(str(src), StreamHeader(2, 1000), np.zeros(1000, dtype=np.int64))
    assert cli.main(["analyze", str(src), "-k", "1", "-o", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["report"]["summary"]["discrepancy"] == 0.5
    assert data["verdict"]["label"] == "non-normal-witness"
    assert "discrepancy=0.500000" in capsys.readouterr().out


def test_analyze_block_mode(tmp_path):
    src, rep = tmp_path / "t.txt", tmp_path / "r.json"
    cli.main(["gen", "thm3", "b=2", "K=2", "seed=7", "-N", "400000", "-o", str(src)])
    cli.main(["analyze", str(src), "--block", "2", "-k", "1", "-o", str(rep)])
    data = json.loads(rep.read_text())
    row = next(r for r in data["report"]["rows"] if r["pattern"] == [0])
    assert abs(row["deviation"] + 0.125) < 0.005
    assert data["report"]["alignment"] == "block K=2"


def test_analyze_against_custom_measure(tmp_path):
    src, rep = tmp_path / "t.txt", tmp_path / "r.json"
    cli.main(["gen", "thm3", "b=2", "K=2", "seed=7", "-N", "400000", "-o", str(src)])
    cli.main(["analyze", str(src), "--block", "2", "-k", "2", "--measure", "thm3", "-o", str(rep)])
    assert json.loads(rep.read_text())["verdict"]["label"] == "consistent-with-normal"


def test_config_file_overrides_defaults(tmp_path):
    src, rep, ini = tmp_path / "s.txt", tmp_path / "r.json", tmp_path / "c.ini"
    cli.main(["gen", "iid", "uniform", "b=2", "seed=1", "-N", "5000", "-o", str(src)])
    ini.write_text("[analyze]\nk = 1\ntau = 0.3\n")
    assert cli.main(["--config", str(ini), "analyze", str(src), "-o", str(rep)]) == 0
    cfg = json.loads(rep.read_text())["config"]
    assert cfg["k"] == 1 and cfg["tau"] == 0.3
    ini.write_text("[analyze]\nbogus = 1\n")
    assert cli.main(["--config", str(ini), "analyze", str(src)]) == 2


@pytest.mark.parametrize("argv", [
    ["gen", "nosuch", "-N", "5"],
    ["gen", "iid", "b=2", "-N", "5"],
    ["select", "missing-file.txt", "ap:k=1,l=2"],
    ["verify", "thm3", "-N", "1000", "--sel", "periodic:m=4,r=1|2"],
    ["analyze", "missing-file.txt"],
])
def test_usage_errors_exit_2(argv):
    assert cli.main(argv) == 2


def test_verify_hypothesis_not_met(tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["verify", "prop2", "--sel", "ap:k=1,l=1", "-N", "1000", "-o", str(out)]) == 2
    assert json.loads(out.read_text())["status"] == "hypothesis-not-met"


def test_verify_report_reruns_identically(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "thm3", "-N", "200000", "-o", str(first)]) == 0
    cfg = json.loads(first.read_text())["config"]
    argv = ["verify", cfg["recipe"], "-N", str(cfg["N"]), "--base", str(cfg["base"]), "-o", str(second)]
    assert cli.main(argv) == 0
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    assert a["checks"] == b["checks"]


def test_analyze_report_reruns_identically(tmp_path):
    src, first, second = tmp_path / "s.txt", tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["gen", "iid", "uniform", "b=3", "seed=4", "-N", "30000", "-o", str(src)])
    cli.main(["analyze", str(src), "-k", "2", "--tau", "0.05", "-o", str(first)])
    cfg = json.loads(first.read_text())["config"]
    argv = ["analyze", cfg["input"], "-k", str(cfg["k"]), "--measure", cfg["measure"], "--tau", str(cfg["tau"]),
            "-o", str(second)]
    cli.main(argv)
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    a["config"].pop("out"), b["config"].pop("out")
    assert a == b


# --- pipes (subprocess) ------------------------------------------------------------


def test_pipes_equal_files(tmp_path):
    gen = run("gen", "iid", "uniform", "b=2", "seed=42", "-N", "100000", "-o", "-").stdout
    sel = run("select", "-", "ap:k=1,l=2", "-o", "-", stdin=gen).stdout
    piped = run("analyze", "-", "-k", "3", "-o", "-", stdin=sel)

    f_gen, f_sel, f_rep = tmp_path / "g.txt", tmp_path / "s.txt", tmp_path / "r.json"
    run("gen", "iid", "uniform", "b=2", "seed=42", "-N", "100000", "-o", str(f_gen))
    run("select", str(f_gen), "ap:k=1,l=2", "-o", str(f_sel))
    run("analyze", str(f_sel), "-k", "3", "-o", str(f_rep))

    assert f_gen.read_bytes() == gen
    assert f_sel.read_bytes() == sel
    a, b = json.loads(piped.stdout), json.loads(f_rep.read_text())
    assert a["report"] == b["report"] and a["curve"] == b["curve"] and a["verdict"] == b["verdict"]
    assert b"summary:" in piped.stderr


def test_cli_module_entry_point_version():
    assert run("--version").stdout.startswith(b"nlab ")
