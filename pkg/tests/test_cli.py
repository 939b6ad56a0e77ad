import json
import os
import subprocess
import sys

import numpy as np
import pytest

from rankgauge.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, main


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def abc(tmp_path):
    return write(tmp_path / "abc.csv", "id,y,sigma\nC,10.5,1\nA,0,1\nB,10,1\n")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ranks_json(abc, capsys):
    code, out, _ = run(["ranks", abc], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert set(doc) >= {"method", "alpha_nominal", "alpha_effective", "seed", "items", "rankability"}
    got = {it["id"]: (it["rank_lower"], it["rank_upper"]) for it in doc["items"]}
    assert got == {"A": (1, 1), "B": (2, 3), "C": (2, 3)}
    assert [it["id"] for it in doc["items"]] == ["C", "A", "B"]
    assert doc["rankability"]["ci_upper"] == 1
    assert doc["rankability"]["estimate"] == pytest.approx(1 - 2 / 6)


def test_ranks_tsv_has_metadata(abc, capsys):
    code, out, _ = run(["ranks", abc, "--out", "tsv", "--method", "zhang", "--zhang-K", "2000"], capsys)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "# method\tzhang"
    assert any(l.startswith("# rankability\t") for l in lines)
    rows = [l.split("\t") for l in lines if not l.startswith("#")][1:]
    assert {r[0]: (r[4], r[5]) for r in rows}["A"] == ("1", "1")


def test_single_row(tmp_path, capsys):
    p = write(tmp_path / "one.csv", "id,y,sigma\nonly,4.2,0.3\n")
    for method in ("tukey", "zhang"):
        code, out, _ = run(["ranks", p, "--method", method], capsys)
        doc = json.loads(out)
        assert code == EXIT_OK
        assert (doc["items"][0]["rank_lower"], doc["items"][0]["rank_upper"]) == (1, 1)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "id,y\nA,1\n",
        "id,y,sigma\nA,1,0\n",
        "id,y,sigma\nA,1,1\nA,2,1\n",
        "id,y,sigma\nA,x,1\n",
        "id,y,sigma\nA,1,1,9\n",
        "id,y,sigma\nA,nan,1\n",
    ],
)
def test_malformed_csv_exit_2(tmp_path, capsys, text):
    code, _, err = run(["ranks", write(tmp_path / "bad.csv", text)], capsys)
    assert code == EXIT_INPUT and err.startswith("error:")


def test_missing_file_exit_2(tmp_path, capsys):
    assert run(["ranks", str(tmp_path / "nope.csv")], capsys)[0] == EXIT_INPUT


def test_json_round_trip(abc, tmp_path, capsys):
    first = tmp_path / "first.json"
    assert main(["ranks", abc, "--output", str(first)]) == EXIT_OK
    second = tmp_path / "second.json"
    assert main(["ranks", str(first), "--output", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_svg_plot_is_deterministic(abc, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for p in (a, b):
        assert main(["ranks", abc, "--plot", str(p), "--output", str(tmp_path / "o.json")]) == EXIT_OK
    text = a.read_text()
    assert a.read_bytes() == b.read_bytes()
    assert text.startswith("<svg") and text.count("<rect") == 3
    # bars are drawn in order of y
    assert text.index(">A<") < text.index(">B<") < text.index(">C<")


def test_rescale_tukey(capsys):
    code, out, _ = run(["rescale", "--n", "10", "--equal-sigma", "--alpha", "0.2", "--replicates", "5000"], capsys)
    fields = dict(l.split("\t") for l in out.splitlines())
    assert code == EXIT_OK
    assert abs(float(fields["alpha_tilde"]) - 0.467) < 0.03
    assert float(fields["coverage"]) >= 0.8


def test_rescale_sigma_file(tmp_path, capsys):
    p = write(tmp_path / "s.txt", "0.1 0.2\n0.3, 0.4\n")
    code, out, _ = run(["rescale", "--sigma-file", p, "--replicates", "1000"], capsys)
    assert code == EXIT_OK and "n\t4" in out


def test_rescale_zhang_n30_infeasible(capsys):
    code, _, err = run(["rescale", "--n", "30", "--equal-sigma", "--method", "zhang", "--replicates", "500"], capsys)
    assert code == EXIT_INFEASIBLE
    assert "K=10000" in err


def test_ranks_zhang_rescale_n61_exit_3(tmp_path, capsys):
    g = np.random.default_rng(61)
    rows = "".join(f"h{i},{g.normal():.4f},{g.uniform(0.2, 0.6):.4f}\n" for i in range(61))
    p = write(tmp_path / "h61.csv", "id,y,sigma\n" + rows)
    code, _, err = run(
        ["ranks", p, "--method", "zhang", "--rescale", "--zhang-K", "100000", "--replicates", "500"], capsys
    )
    assert code == EXIT_INFEASIBLE
    assert "K=100000" in err and "1000000" in err


def test_rescale_needs_n(capsys):
    assert run(["rescale", "--equal-sigma"], capsys)[0] == EXIT_INPUT


def test_simulate_empty_config(tmp_path, capsys):
    cfg = write(tmp_path / "empty.cfg", "")
    assert run(["simulate", cfg, "--out-dir", str(tmp_path / "out")], capsys)[0] == EXIT_OK


def test_simulate_bad_config(tmp_path, capsys):
    cfg = write(tmp_path / "bad.cfg", "[cell a]\ntau = -1\nn = 3\n")
    assert run(["simulate", cfg, "--out-dir", str(tmp_path)], capsys)[0] == EXIT_INPUT


def test_simulate_writes_tables_and_sweeps(tmp_path, capsys):
    cfg = write(
        tmp_path / "mini.cfg",
        "[defaults]\ncenter_draws = 40\nseed = 1\n\n[cell a]\ntau = 1\nn = 5\n\n"
        "[sweep s]\nn = 4\neps_step = 0.5\nreplicates = 200\n",
    )
    out = tmp_path / "out"
    assert run(["simulate", cfg, "--out-dir", str(out)], capsys)[0] == EXIT_OK
    assert (out / "mini.tsv").exists() and (out / "mini.json").exists()
    lines = (out / "mini_s.csv").read_text().splitlines()
    assert lines[0] == "epsilon,coverage,se,level" and len(lines) == 6


def test_console_script_entry_point(abc):
    proc = subprocess.run([sys.executable, "-m", "rankgauge.cli", "ranks", abc, "--out", "tsv"],
                          capture_output=True, text=True, env={**os.environ, "RANKGAUGE_THREADS": "1"})
    assert proc.returncode == 0 and proc.stdout.startswith("# method\ttukey")
