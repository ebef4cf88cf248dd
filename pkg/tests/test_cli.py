from __future__ import annotations

import io
import subprocess
import sys

import pytest
from helpers import DEMO, EXAMPLES, example_paths

from amcs.cli import main


def run(*argv) -> tuple:
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_solve_all_matches_golden(n):
    code, out, _ = run("solve", *example_paths(n), "--all")
    assert code == 0
    assert out == (EXAMPLES / f"ex{n}" / "expected.txt").read_text()


def test_solve_opt_matches_golden():
    code, out, _ = run("solve", *example_paths(4), "--opt")
    assert code == 0
    assert out == (EXAMPLES / "ex4" / "expected_opt.txt").read_text()
    assert "in_pack(ca_ds12)" in out and out.endswith("Optimization: 7\n")


def test_solve_example1_lists_two_models():
    _, out, _ = run("solve", *example_paths(1), "--all")
    assert out.count("Answer:") == 2


def test_solve_models_limit(tmp_path):
    p = write(tmp_path, "p.lp", "{a; b; c}.")
    assert run("solve", p)[1].count("Answer:") == 1
    assert run("solve", p, "--models", 3)[1].count("Answer:") == 3
    assert run("solve", p, "--all")[1].count("Answer:") == 8
    assert run("solve", p, "--models", 0)[0] == 2


def test_solve_inconsistent_exit_1(tmp_path):
    code, out, _ = run("solve", write(tmp_path, "p.lp", "a. :- a."))
    assert code == 1 and out == "UNSATISFIABLE\n"


@pytest.mark.parametrize(
    "text",
    ["a :- ", "p(X) :- not q(X).", "#maximize{X : p(X)}. p(a)."],
)
def test_solve_errors_exit_2(tmp_path, text):
    code, out, err = run("solve", write(tmp_path, "p.lp", text), "--opt")
    assert code == 2 and err.startswith("error:")


def test_missing_file_exit_2(tmp_path):
    assert run("solve", tmp_path / "none.lp")[0] == 2


def test_opt_without_objective_exit_2(tmp_path):
    assert run("solve", write(tmp_path, "p.lp", "a."), "--opt")[0] == 2


def models(text: str) -> set:
    """Answer-set blocks of CLI output, without their numbering."""
    return {block.split("\n", 1)[1] for block in text.split("Answer: ")[1:]}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_oracle_agrees_with_solve(n):
    _, solved, _ = run("solve", *example_paths(n), "--all")
    code, oracle, _ = run("oracle", *example_paths(n))
    assert code == 0
    assert models(oracle) == models(solved) and len(models(solved)) == solved.count("Answer:")


def test_oracle_even_loop(tmp_path):
    code, out, _ = run("oracle", write(tmp_path, "p.lp", "a :- not b. b :- not a."))
    assert code == 0
    assert out == "Answer: 1\na\nAnswer: 2\nb\n"


def test_oracle_budget_exceeded(tmp_path, monkeypatch):
    monkeypatch.setenv("AMCS_ORACLE_BUDGET", "3")
    code, _, err = run("oracle", write(tmp_path, "p.lp", "{a; b; c; d}."))
    assert code == 2 and "error" in err


def test_ground_atom_budget_from_env(tmp_path, monkeypatch):
    p = write(tmp_path, "p.lp", "n(X) :- X=1..50.")
    assert run("solve", p)[0] == 0
    monkeypatch.setenv("AMCS_MAX_GROUND_ATOMS", "10")
    assert run("solve", p)[0] == 2


def test_term_depth_budget_from_env(tmp_path, monkeypatch):
    p = write(tmp_path, "p.lp", "n(z). n(s(X)) :- n(X).")
    monkeypatch.setenv("AMCS_MAX_TERM_DEPTH", "20")
    assert run("solve", p)[0] == 2


def test_run_until_zero_is_header_only():
    code, out, _ = run("run", DEMO, "--until", 0)
    assert code == 0
    assert out == '{"format":"amcs-trace","version":1,"scenario":"caet","seed":0}\n'


def test_run_matches_golden_trace(tmp_path):
    target = tmp_path / "trace.jsonl"
    assert run("run", DEMO, "--trace", target)[0] == 0
    assert target.read_bytes() == (DEMO.parent / "expected_trace.jsonl").read_bytes()


def test_run_invalid_scenario_exit_2(tmp_path):
    p = write(tmp_path, "s.yaml", "output_streams: [a, a]\n")
    code, _, err = run("run", p)
    assert code == 2 and "output_streams[1]" in err


@pytest.mark.parametrize("n", [1, 2, 3])
def test_encode_matches_golden(n):
    code, out, _ = run("encode", EXAMPLES / f"ex{n}" / "buffer.yaml")
    assert code == 0
    assert out == (EXAMPLES / f"ex{n}" / "encoded.lp").read_text()


def test_encode_arrival_facts():
    _, out, _ = run("encode", EXAMPLES / "ex1" / "buffer.yaml", "--arrival")
    assert "arrived(ca_ds11,0).\n" in out and "arrived(am_ds56,4).\n" in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "amcs.cli", "solve", *map(str, example_paths(1)), "--all"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == (EXAMPLES / "ex1" / "expected.txt").read_text()
