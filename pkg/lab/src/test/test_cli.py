import json
from fractions import Fraction

import pytest
from typer.testing import CliRunner

from querylab.cli import app

runner = CliRunner()


def _records(output: str):
    return [json.loads(line) for line in output.splitlines() if line.startswith("{")]


class TestSimulate:
    def test_noisy_or(self):
        result = runner.invoke(app, ["simulate", "--alg", "noisy-or", "--n", "5", "--noise", "all:1/3",
                                     "--trials", "2000", "--seed", "7"])
        assert result.exit_code == 0, result.output
        records = _records(result.stdout)
        assert records[0]["record"] == "header"
        assert records[0]["params"]["seed"] == 7
        runs = [r for r in records if r["record"] == "run"]
        assert [r["adversary_id"] for r in runs] == ["zeros/all:1/3", "one-last/all:1/3"]
        assert all(r["max_queries"] <= 150 for r in runs)
        assert records[-1] == {"record": "summary", "suite": "simulate", "passed": 2, "failed": 0, "ok": True}

    def test_missing_seed(self):
        result = runner.invoke(app, ["simulate", "--alg", "noisy-or", "--n", "5"])
        assert result.exit_code == 2
        assert _records(result.stdout) == []

    def test_noise_on_wrong_algorithm(self):
        result = runner.invoke(app, ["simulate", "--alg", "which-eval", "--m", "4", "--seed", "1",
                                     "--noise", "all:1/3"])
        assert result.exit_code == 2

    def test_noise_above_cap(self):
        result = runner.invoke(app, ["simulate", "--alg", "noisy-or", "--n", "3", "--seed", "1",
                                     "--noise", "all:1/2"])
        assert result.exit_code == 2

    def test_which_eval(self):
        result = runner.invoke(app, ["simulate", "--alg", "which-eval", "--m", "4", "--trials", "3000",
                                     "--seed", "3"])
        assert result.exit_code == 0, result.output
        runs = [r for r in _records(result.stdout) if r["record"] == "run"]
        assert len(runs) == 4
        assert all(r["errors"] == r["aborts"] for r in runs)

    def test_zero_sided(self):
        result = runner.invoke(app, ["simulate", "--alg", "zero-sided-recover", "--fn", "xor[4] o which",
                                     "--trials", "500", "--seed", "2"])
        assert result.exit_code == 0, result.output


class TestUsage:
    def test_unknown_suite(self):
        assert runner.invoke(app, ["run", "--suite", "bogus"]).exit_code == 2

    def test_bad_function_size(self):
        result = runner.invoke(app, ["solve", "--problem", "distributional", "--fn", "gapmaj[7]", "--depth", "1"])
        assert result.exit_code == 2

    def test_epsilon_out_of_range(self):
        result = runner.invoke(app, ["solve", "--problem", "junta", "--fn", "or[2]", "--epsilon", "2"])
        assert result.exit_code == 2

    def test_verify_without_check(self):
        assert runner.invoke(app, ["verify-certificates", "--m", "9"]).exit_code == 2

    def test_simulation_check_is_not_a_certificate(self):
        result = runner.invoke(app, ["verify-certificates", "--check", "one-query"])
        assert result.exit_code == 2


class TestVerifyAndSolve:
    def test_gapmaj_ratio(self):
        result = runner.invoke(app, ["verify-certificates", "--check", "gapmaj-ratio", "--m", "21"])
        assert result.exit_code == 0, result.output
        [check] = [r for r in _records(result.stdout) if r["record"] == "check"]
        assert check["passed"]
        assert check["params"] == {"m": 21, "max_width": 3}

    def test_several_checks_in_order(self):
        result = runner.invoke(app, ["verify-certificates", "--check", "vote5", "--check", "slice-formula",
                                     "--m", "5"])
        assert result.exit_code == 0, result.output
        checks = [r["check_id"] for r in _records(result.stdout) if r["record"] == "check"]
        assert checks == ["vote5", "slice-formula"]

    def test_distributional(self):
        result = runner.invoke(app, ["solve", "--problem", "distributional", "--fn", "gapmaj[3]", "--depth", "1"])
        assert result.exit_code == 0, result.output
        [check] = [r for r in _records(result.stdout) if r["record"] == "check"]
        assert check["witness"]["value"]["exact"] == "1/3"

    def test_decide(self):
        result = runner.invoke(app, ["run", "--suite", "solve", "--problem", "decide", "--fn", "xor[2]",
                                     "--epsilon", "1/2", "--depth", "1"])
        assert result.exit_code == 0, result.output
        [check] = [r for r in _records(result.stdout) if r["record"] == "check"]
        assert check["witness"]["decision"] is True
        assert check["witness"]["value"]["exact"] == "1/2"
        assert check["witness"]["full_value"]["exact"] == "1/2"

    def test_certificate_search(self):
        result = runner.invoke(app, ["solve", "--problem", "certificate-search", "--fn", "gapmaj[6]",
                                     "--epsilon", "1/10", "--max-width", "1"])
        assert result.exit_code == 0, result.output
        [check] = [r for r in _records(result.stdout) if r["record"] == "check"]
        assert check["witness"] == {"found": False}

    def test_out_file(self, tmp_path):
        target = tmp_path / "records.jsonl"
        result = runner.invoke(app, ["verify-certificates", "--check", "vote5", "--out", str(target)])
        assert result.exit_code == 0, result.output
        assert _records(result.stdout) == []
        records = _records(target.read_text())
        assert [r["record"] for r in records] == ["header", "check", "summary"]
        assert "out" not in records[0]["params"]

    def test_usage_error_leaves_no_out_file(self, tmp_path):
        target = tmp_path / "records.jsonl"
        missing_seed = runner.invoke(app, ["simulate", "--alg", "noisy-or", "--n", "5", "--out", str(target)])
        assert missing_seed.exit_code == 2
        bad_epsilon = runner.invoke(app, ["solve", "--problem", "junta", "--fn", "or[2]", "--epsilon", "2",
                                          "--out", str(target)])
        assert bad_epsilon.exit_code == 2
        assert not target.exists()


class TestReproduceAll:
    SUBSET = ["--check", "vote5", "--check", "walk-lemma", "--check", "gapor-slices", "--check", "one-query"]

    def test_subset_is_deterministic(self):
        args = ["reproduce-all", "--trials", "2000", *self.SUBSET]
        first = runner.invoke(app, args)
        second = runner.invoke(app, args)
        assert first.exit_code == 0, first.output
        assert first.stdout == second.stdout
        header = _records(first.stdout)[0]
        assert header["params"]["seed"] == 7

    def test_failure_is_reported(self, monkeypatch):
        # a wrong closed form for the hitting time must fail the walk check
        monkeypatch.setattr("querylab.suites.walk_hit_time", lambda params: Fraction(3))
        result = runner.invoke(app, ["reproduce-all", "--trials", "5000", "--check", "walk-lemma", "--check", "vote5"])
        assert result.exit_code == 1
        records = _records(result.stdout)
        failed = [r for r in records if r["record"] == "check" and not r["passed"]]
        assert [r["check_id"] for r in failed] == ["walk-lemma"]
        assert records[-1]["ok"] is False
        assert records[-1]["passed"] == 1

    def test_full_battery(self):
        result = runner.invoke(app, ["reproduce-all", "--trials", "2000"])
        assert result.exit_code == 0, result.output
        records = _records(result.stdout)
        assert records[-1]["ok"] is True
        seen = {r["check_id"] for r in records if r["record"] in ("check", "run")}
        assert {"noisy-or", "xor-fourier", "maj-cases", "game-value", "compose-amp"} <= seen
