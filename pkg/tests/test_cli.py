"""CLI behaviour: exit codes, JSON output, file handling, determinism."""

import json

import numpy as np
import pytest

from idtest.cli import main
from idtest.io import read_pmf


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def make_uniform_pmf_file(tmp_path, n, name="p.pmf"):
    from idtest.distributions import uniform_pmf
    from idtest.io import write_pmf

    path = tmp_path / name
    write_pmf(path, uniform_pmf(n))
    return path


class TestGenerate:
    def test_identical_uniform(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "identical-uniform", "--n", "10", "--seed", "1",
            "--prefix", str(tmp_path / "u"),
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["l1_distance"] == 0.0
        p = read_pmf(payload["pmf_p"])
        assert np.allclose(p.probs, 0.1)

    def test_random_half_distance_one(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "random-half", "--n", "1024", "--seed", "3",
            "--prefix", str(tmp_path / "h"),
        )
        assert code == 0
        assert json.loads(out)["l1_distance"] == pytest.approx(1.0)

    def test_eps_perturbed_distance(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "eps-perturbed", "--n", "100", "--eps", "0.3",
            "--seed", "5", "--prefix", str(tmp_path / "e"),
        )
        assert code == 0
        assert abs(json.loads(out)["l1_distance"] - 0.3) <= 1e-12

    def test_round_trip_identical_floats(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "zipf-pair", "--n", "50", "--seed", "2",
            "--prefix", str(tmp_path / "z"),
        )
        payload = json.loads(out)
        a = read_pmf(payload["pmf_p"])
        b = read_pmf(payload["pmf_q"])
        from idtest.distributions import zipf_pmf

        assert np.array_equal(a.probs, zipf_pmf(50).probs)
        assert np.array_equal(a.probs, b.probs)

    def test_binary_flag(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "zipf-pair", "--n", "64", "--seed", "2",
            "--prefix", str(tmp_path / "zb"), "--binary",
        )
        payload = json.loads(out)
        from idtest.distributions import zipf_pmf

        assert np.array_equal(read_pmf(payload["pmf_p"]).probs, zipf_pmf(64).probs)

    def test_samples_written(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "random-half", "--n", "64", "--seed", "4",
            "--prefix", str(tmp_path / "s"), "--samples", "500",
        )
        payload = json.loads(out)
        lines = open(payload["samples"]).read().splitlines()
        assert len(lines) == 500
        assert all(1 <= int(x) <= 64 for x in lines)

    def test_missing_eps_exits_two(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "generate", "eps-perturbed", "--n", "10", "--seed", "1",
            "--prefix", str(tmp_path / "x"),
        )
        assert code == 2
        assert "eps" in err

    def test_seed_recorded_when_omitted(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "identical-uniform", "--n", "8",
            "--prefix", str(tmp_path / "r"),
        )
        assert code == 0
        assert isinstance(json.loads(out)["seed"], int)


class TestTest:
    def test_self_accepts(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 1024)
        code, out, _ = run_cli(
            capsys, "test", "--pmf", str(pmf), "--q", "self",
            "--eps", "0.5", "--seed", "7",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["decision"] == "accept"
        assert payload["seed"] == 7
        assert payload["audit"]["ok"]

    def test_q_pmf_far_rejects(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 1024)
        code, out, _ = run_cli(
            capsys, "generate", "random-half", "--n", "1024", "--seed", "3",
            "--prefix", str(tmp_path / "h"),
        )
        qfile = json.loads(out)["pmf_q"]
        code, out, _ = run_cli(
            capsys, "test", "--pmf", str(pmf), "--q-pmf", qfile,
            "--eps", "0.5", "--seed", "7",
        )
        assert code == 1
        assert json.loads(out)["decision"] == "reject"

    def test_q_file_rejects(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 1024)
        code, out, _ = run_cli(
            capsys, "generate", "random-half", "--n", "1024", "--seed", "3",
            "--prefix", str(tmp_path / "hf"), "--samples", "40000",
        )
        samples = json.loads(out)["samples"]
        code, out, _ = run_cli(
            capsys, "test", "--pmf", str(pmf), "--q-file", samples,
            "--eps", "0.5", "--seed", "7",
        )
        assert code == 1

    def test_exhausted_sample_file_is_input_error(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 1024)
        short = tmp_path / "short.samples"
        short.write_text("\n".join(["1"] * 10) + "\n")
        code, _, err = run_cli(
            capsys, "test", "--pmf", str(pmf), "--q-file", str(short),
            "--eps", "0.5", "--seed", "7",
        )
        assert code == 2
        assert "remain" in err

    def test_malformed_pmf_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.pmf"
        bad.write_text("0.5\n0.25\noops\n0.25\n")
        code, _, err = run_cli(
            capsys, "test", "--pmf", str(bad), "--q", "self",
            "--eps", "0.5", "--seed", "1",
        )
        assert code == 2
        assert "line 3" in err

    def test_no_q_source_is_usage_error(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 16)
        code, _, err = run_cli(
            capsys, "test", "--pmf", str(pmf), "--eps", "0.5", "--seed", "1"
        )
        assert code == 2
        assert "q source" in err

    def test_amplified_trials(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 256)
        code, out, _ = run_cli(
            capsys, "test", "--pmf", str(pmf), "--q", "self",
            "--eps", "0.5", "--seed", "11", "--trials", "3",
        )
        assert code == 0
        assert json.loads(out)["config"]["trials_for_amplification"] == 3


class TestOracle:
    def test_l1(self, tmp_path, capsys):
        a = make_uniform_pmf_file(tmp_path, 16, "a.pmf")
        code, out, _ = run_cli(
            capsys, "generate", "random-half", "--n", "16", "--seed", "1",
            "--prefix", str(tmp_path / "o"),
        )
        b = json.loads(out)["pmf_q"]
        code, out, _ = run_cli(capsys, "oracle", "l1", str(a), b)
        assert code == 0
        assert json.loads(out)["l1_distance"] == pytest.approx(1.0)

    def test_buckets(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 1024)
        code, out, _ = run_cli(
            capsys, "oracle", "buckets", str(pmf), "--eps", "0.5", "--C", "100"
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["k"] == 1668
        assert payload["j_star"] == 973
        assert payload["masses_sum"] == pytest.approx(1.0)
        # uniform pmf occupies exactly one bucket
        assert list(payload["masses_nonzero"].values()) == [pytest.approx(1.0)]


class TestBench:
    def test_two_point_grid(self, capsys):
        code, out, _ = run_cli(
            capsys, "bench", "--n-grid", "256,1024", "--eps", "0.5",
            "--seed", "1", "--trials-per-point", "1", "--no-timing",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("n,q_samples,p_queries")
        assert len([l for l in lines if not l.startswith("#")]) == 3  # header + 2
        assert lines[-1].startswith("# slope_total=")

    def test_singleton_grid_no_fit(self, capsys):
        code, out, _ = run_cli(
            capsys, "bench", "--n-grid", "512", "--eps", "0.5",
            "--seed", "1", "--trials-per-point", "1", "--no-timing",
        )
        assert code == 0
        assert "no fit" in out.strip().splitlines()[-1]

    def test_empty_grid_exits_two(self, capsys):
        code, _, err = run_cli(
            capsys, "bench", "--n-grid", ",", "--eps", "0.5", "--seed", "1"
        )
        assert code == 2


class TestLemmaCheckCommand:
    def test_small_run_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "lemma-check", "--n", "100", "--delta", "0.4",
            "--trials", "45", "--seed", "2",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["case1"]["rate"] >= 0.8
        assert payload["case2"]["rate"] >= 0.8


class TestCalibrateCommand:
    def test_small_search(self, capsys):
        code, out, _ = run_cli(
            capsys, "calibrate", "--n", "64", "--eps", "0.5", "--trials", "40",
            "--seed", "1", "--c4-grid", "3.0,8.0",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["recommended"]["c4"] in (3.0, 8.0)


class TestDeterminism:
    def test_repeated_runs_byte_identical(self, tmp_path, capsys):
        pmf = make_uniform_pmf_file(tmp_path, 256)
        argv = ["test", "--pmf", str(pmf), "--q", "self", "--eps", "0.5", "--seed", "9"]
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_generate_byte_identical(self, tmp_path, capsys):
        argv = [
            "generate", "random-half", "--n", "32", "--seed", "5",
            "--prefix", str(tmp_path / "g"),
        ]
        _, out1, _ = run_cli(capsys, *argv)
        files1 = (tmp_path / "g-p.pmf").read_bytes(), (tmp_path / "g-q.pmf").read_bytes()
        _, out2, _ = run_cli(capsys, *argv)
        files2 = (tmp_path / "g-p.pmf").read_bytes(), (tmp_path / "g-q.pmf").read_bytes()
        assert out1 == out2
        assert files1 == files2
