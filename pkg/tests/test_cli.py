import json
import logging

import pytest

from conftest import lattes, square
from fsrkit.cli import main
from fsrkit.files import write_complex, write_map


@pytest.fixture(scope="module")
def work(tmp_path_factory, lattes_base):
    d = tmp_path_factory.mktemp("cli")
    write_map(d / "f.json", lattes())
    write_map(d / "sq.json", square())
    write_complex(d / "s.json", lattes_base)
    assert main(["construct", str(d / "f.json"), "-o", str(d / "r.json")]) == 0
    return d


def test_analyze_output(work, capsys):
    assert main(["analyze", str(work / "f.json")]) == 0
    out = capsys.readouterr().out
    assert "signature: (2,4,4)" in out
    assert "euler characteristic: 0" in out
    assert "no periodic critical points" in out


def test_check_all_true(work, capsys):
    capsys.readouterr()
    assert main(["check", str(work / "r.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.endswith("true") for line in lines)


def test_construct_square_fails(work, capsys):
    assert main(["construct", str(work / "sq.json"), "-o", str(work / "x.json")]) == 1
    assert "periodic critical point" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["subdivide", "{r}", "-n", "0", "-o", "{o}"],
    ["pullback", "{f}", "{s}", "-n", "x", "-o", "{o}"],
    ["render", "{s}", "-o", "{o}", "--size", "10"],
    ["analyze"],
    [],
    ["analyze", "{missing}"],
])
def test_usage_errors(work, argv):
    names = {"r": work / "r.json", "o": work / "out", "f": work / "f.json", "s": work / "s.json",
             "missing": work / "nope.json"}
    assert main([a.format(**names) for a in argv]) == 2


def test_wrong_kind_is_failure(work):
    assert main(["check", str(work / "f.json")]) == 1


def test_subdivide_counts(work, capsys):
    assert main(["subdivide", str(work / "r.json"), "-n", "3", "-o", str(work / "s3.json")]) == 0
    assert "V=10 E=24 F=16" in capsys.readouterr().out


def test_pullback_and_render(work, capsys):
    assert main(["pullback", str(work / "f.json"), str(work / "s.json"), "-n", "2",
                 "-o", str(work / "p2.json"), "--svg", str(work / "p2.svg")]) == 0
    assert "V=" in capsys.readouterr().out
    obj = json.loads((work / "p2.json").read_text())
    assert len(obj["tiles"]) == 8
    assert (work / "p2.svg").read_text().startswith("<?xml")


def test_outputs_are_byte_deterministic(work, tmp_path):
    f, s = str(work / "f.json"), str(work / "s.json")
    runs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        assert main(["construct", f, "-o", str(d / "r.json"), "--svg", str(d / "r.svg")]) == 0
        assert main(["pullback", f, s, "-n", "3", "-o", str(d / "p.json")]) == 0
        assert main(["subdivide", str(d / "r.json"), "-n", "2", "-o", str(d / "x.json")]) == 0
        assert main(["render", s, "-o", str(d / "s.svg"), "--center", "inf"]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert runs[0] == runs[1]


def test_log_level(work, monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    logging.getLogger().handlers.clear()
    assert main(["analyze", str(work / "f.json")]) == 0
    assert logging.getLogger().level == logging.DEBUG
    logging.getLogger().handlers.clear()
    logging.getLogger().setLevel(logging.WARNING)
