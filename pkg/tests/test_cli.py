import json

import jsonschema
import pytest

from support import CORPUS_DIR, DATA_DIR, LARGER_PRIME, PRIME_ODD

from boxprover.cli import (
    EXIT_CHECK, EXIT_INPUT, TRACE_SCHEMA, ProblemError, RunReport, main, read_problem, render_report,
)
from boxprover.term import show


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_proved_with_trace_and_check(self, capsys):
        code, out, _ = run_cli(capsys, PRIME_ODD, "--trace", "--check", "--theory", DATA_DIR / "nat-core.thy")
        assert code == 0
        assert "PROVED in 19 updates" in out
        assert "check: all justifications replay" in out
        assert any("disj_case" in line and "box={1}" in line for line in out.splitlines())

    def test_saturated(self, capsys):
        code, out, _ = run_cli(capsys, CORPUS_DIR / "unprovable.prob")
        assert code == 1 and out.startswith("SATURATED after")

    def test_timeout(self, capsys):
        code, out, _ = run_cli(capsys, PRIME_ODD, "--max-updates", "1")
        assert code == 2 and "TIMEOUT after 1 updates" in out

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, CORPUS_DIR / "nope.prob")
        assert code == EXIT_INPUT and err.startswith("error:")

    def test_bad_flag(self, capsys):
        code, _, _ = run_cli(capsys, PRIME_ODD, "--max-updates", "0")
        assert code == EXIT_INPUT

    def test_unknown_option(self, capsys):
        assert run_cli(capsys, PRIME_ODD, "--frobnicate")[0] == EXIT_INPUT

    def test_check_failure_code_is_distinct(self):
        assert EXIT_CHECK not in (0, 1, 2, EXIT_INPUT)

    def test_bundled_problem_name(self, capsys):
        assert run_cli(capsys, "prime_odd")[0] == 0


class TestOutputs:
    def test_trace_json_validates(self, capsys, tmp_path):
        path = tmp_path / "trace.jsonl"
        code, out, _ = run_cli(capsys, PRIME_ODD, "--trace-json", path)
        assert code == 0 and f"trace written to {path}" in out
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(records) == 19
        for r in records:
            jsonschema.validate(r, TRACE_SCHEMA)
        assert len({r["seq"] for r in records}) == len(records)
        assert all(e < r["seq"] for r in records for e in r["edges"])

    def test_dump_rewrites(self, capsys):
        code, out, _ = run_cli(capsys, PRIME_ODD, "--dump-rewrites")
        assert code == 0 and "2 dvd p" in out

    def test_no_script_leaves_larger_prime_open(self, capsys):
        code, out, _ = run_cli(capsys, LARGER_PRIME, "--no-script", "--max-updates", "300")
        assert code in (1, 2)

    def test_stuck_script_is_reported(self, capsys, tmp_path):
        prob = tmp_path / "stuck.prob"
        prob.write_text('(var a bool) (var b bool) (assume a) (goal b) (script "OBTAIN b")')
        code, out, _ = run_cli(capsys, prob)
        assert code == 1 and "script step not proved: OBTAIN b" in out

    def test_weights_change_scores(self, capsys, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_cli(capsys, PRIME_ODD, "--trace-json", a)
        run_cli(capsys, PRIME_ODD, "--trace-json", b, "--w-box", "3")
        assert a.read_text() != b.read_text()


class TestReport:
    @pytest.mark.parametrize("kind,head", [
        ("Proved", "PROVED in 7 updates"), ("Saturated", "SATURATED after 7 updates"),
        ("Timeout", "TIMEOUT after 7 updates"),
    ])
    def test_first_line(self, kind, head):
        assert render_report(RunReport(kind, 7, 0.1, [])).splitlines()[0] == head

    def test_warning_line(self):
        text = render_report(RunReport("Proved", 1, 0.0, [], warning="theory inconsistent"))
        assert "warning: theory inconsistent" in text


class TestProblemFiles:
    def test_read_problem(self):
        prob, th = read_problem("(include nat-core) (var p nat) (assume (prime p)) (goal (odd p))")
        assert [show(a) for a in prob.assumptions] == ["prime p"]
        assert prob.variables[0][0] == "p" and "prime" in th.constants

    def test_goal_required(self):
        with pytest.raises(ProblemError):
            read_problem("(var a bool) (assume a)")

    def test_script_string(self):
        prob, _ = read_problem('(var a bool) (goal a) (script "OBTAIN a")')
        assert prob.script_text == "OBTAIN a"
