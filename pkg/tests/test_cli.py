import json

import pytest

from hopsets.cli import main


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_gen_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for f in (a, b):
        assert main(["gen", "--kind", "gnp", "--n", "100", "--p", "0.05", "--seed", "1", "-o", str(f)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_hopset_then_verify(tmp_path, capsys, monkeypatch):
    g = tmp_path / "g.txt"
    h = tmp_path / "h.txt"
    main(["gen", "--kind", "gnp", "--n", "100", "--p", "0.05", "--seed", "1", "-o", str(g)])
    assert main(["hopset", str(g), "--k", "2", "--variant", "improved", "--seed", "7", "-o", str(h)]) == 0
    import io
    import sys

    monkeypatch.setattr(sys, "stdin", io.StringIO(h.read_text()))
    code, out = run(["verify", str(g), "--eps", "0.5", "--beta", "96"], capsys)
    assert code == 0
    rep = json.loads(out.out)
    assert {"version", "config", "seed"} <= set(rep) and rep["result"]["violations"] == []


def test_hop_starvation_exit_1(tmp_path, capsys):
    g = tmp_path / "p.txt"
    main(["gen", "--kind", "path", "--n", "12", "-o", str(g)])
    code, out = run(["verify", str(g), "--hopset", "empty", "--beta", "1", "--eps", "0.1"], capsys)
    assert code == 1 and json.loads(out.out)["result"]["violations"]


@pytest.mark.parametrize("argv", [
    ["verify", "missing.txt", "--hopset", "empty"],
    ["gen", "--kind", "nope", "--n", "3"],
    ["gen", "--kind", "gnp", "--n", "10"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_route_and_simulate(tmp_path, capsys):
    g = tmp_path / "g.txt"
    main(["gen", "--kind", "gnp", "--n", "60", "--p", "0.08", "--seed", "2", "--largest-cc", "-o", str(g)])
    code, out = run(["route", str(g), "--k", "2", "--pair", "0:5", "--pair", "4:4"], capsys)
    assert code == 0
    first = out.out.splitlines()[0].split()
    assert first[:2] == ["0", "5"] and first[6] == "0" and first[-1] == "5"
    code, out = run(["simulate", str(g), "--model", "clique", "--k", "2", "--variant", "improved",
                     "--fidelity", "faithful"], capsys)
    assert code == 0
    trace = json.loads(out.out)["result"]["trace"]
    assert {"mode", "rounds", "per_level", "peak_memory_words"} <= set(trace)
