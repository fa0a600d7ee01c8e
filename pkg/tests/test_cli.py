import json
import math

import numpy as np
import pytest

from kmlinks import __version__
from kmlinks.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main, read_config_file


def _read_csv(path):
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, body[0].split(","), [list(map(float, ln.split(","))) for ln in body[1:]]


def _eval(capsys, *argv):
    assert main(["eval", *argv]) == EXIT_OK
    return float(capsys.readouterr().out.strip())


class TestEval:
    def test_lambda(self, capsys):
        assert _eval(capsys, "lambda", "--n", "2", "--x", "1,2", "--y", "0,1") == pytest.approx(math.exp(-3), rel=1e-12)

    def test_q(self, capsys):
        assert _eval(capsys, "q", "--beta", "1", "--t", "1", "--x", "0", "--y", "2") == pytest.approx(math.exp(-2),
                                                                                                   rel=1e-12)

    def test_vandermonde(self, capsys):
        assert _eval(capsys, "vandermonde", "--x", "1,2,4") == 6.0

    def test_lambda_at_boundary(self, capsys):
        v = _eval(capsys, "lambda", "--x", "1,1", "--y", "0,1")
        assert 0.0 < v < 1.0

    def test_missing_argument_is_usage_error(self, capsys):
        assert main(["eval", "q", "--beta", "1"]) == EXIT_USAGE

    def test_domain_error_is_usage_error(self, capsys):
        assert main(["eval", "q", "--beta", "-1", "--t", "1", "--x", "0", "--y", "2"]) == EXIT_USAGE


class TestUsage:
    def test_bogus_flag(self, capsys):
        assert main(["eval", "q", "--bogus"]) == EXIT_USAGE

    def test_no_command(self, capsys):
        assert main([]) == EXIT_USAGE

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert __version__ in capsys.readouterr().out

    def test_unknown_suite(self, capsys):
        assert main(["verify", "--suite", "nope"]) == EXIT_USAGE


class TestSample:
    def test_laguerre_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["sample", "laguerre", "--n", "2", "--beta", "2", "--count", "1000", "--seed", "7",
                         "--output", str(p)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        comments, header, rows = _read_csv(a)
        assert header == ["x1", "x2"] and len(rows) == 1000
        assert all(r[0] < r[1] for r in rows)
        assert comments[0] == f"# kmlinks {__version__}"
        assert json.loads(comments[1].split(":", 1)[1])["seed"] == 7

    def test_meixner_support(self, tmp_path):
        out = tmp_path / "m.csv"
        assert main(["sample", "meixner", "--n", "2", "--beta", "1", "--sigma", "1", "--count", "300",
                     "--output", str(out)]) == EXIT_OK
        _, header, rows = _read_csv(out)
        rows = np.array(rows)
        assert header == ["y1", "y2"]
        assert np.all(rows == np.floor(rows)) and np.all(rows[:, 1] > rows[:, 0]) and np.all(rows >= 0)

    def test_count_zero(self, tmp_path):
        out = tmp_path / "e.csv"
        assert main(["sample", "laguerre", "--count", "0", "--output", str(out)]) == EXIT_OK
        _, header, rows = _read_csv(out)
        assert header == ["x1", "x2"] and rows == []

    def test_lambda_needs_x(self, tmp_path):
        assert main(["sample", "lambda", "--output", str(tmp_path / "l.csv")]) == EXIT_USAGE

    def test_lambda(self, tmp_path):
        out = tmp_path / "l.csv"
        assert main(["sample", "lambda", "--x", "0.5,2", "--count", "50", "--output", str(out)]) == EXIT_OK
        assert len(_read_csv(out)[2]) == 50

    def test_budget_exit_code(self, tmp_path):
        argv = ["sample", "lambda", "--x", "400,500,600,700", "--count", "1", "--output", str(tmp_path / "b.csv")]
        assert main(argv) == EXIT_BUDGET


class TestConfig:
    def test_config_file_sets_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# defaults\nbeta = 1\nt = 1\n")
        assert read_config_file(str(cfg)) == {"beta": "1", "t": "1"}
        assert main(["--config", str(cfg), "eval", "q", "--x", "0", "--y", "2"]) == EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(math.exp(-2), rel=1e-12)

    def test_flags_win(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("beta = 3\nt = 1\n")
        assert main(["--config", str(cfg), "eval", "q", "--beta", "1", "--x", "0", "--y", "2"]) == EXIT_OK
        assert float(capsys.readouterr().out) == pytest.approx(math.exp(-2), rel=1e-12)

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        assert main(["--config", str(cfg), "eval", "vandermonde", "--x", "1,2"]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "none.cfg"), "eval", "vandermonde", "--x", "1,2"]) == EXIT_USAGE


class TestVerify:
    def test_single_identity(self, tmp_path, capsys):
        argv = ["verify", "--identity", "pushforward", "--beta", "1", "--sigma", "1", "--n", "2",
                "--output-dir", str(tmp_path), "--workers", "1"]
        assert main(argv) == EXIT_OK
        payload = json.loads((tmp_path / "verify_report.json").read_text())
        assert payload["all_passed"]
        assert any(r["identity_name"] == "pushforward_andreif[N=2]" for r in payload["reports"])
        assert "PASS" in (tmp_path / "verify_report.txt").read_text()

    def test_failure_exit_code(self, monkeypatch, capsys):
        import kmlinks.verify as verify

        monkeypatch.setattr(verify, "PUSHFORWARD_REL_TOL", 0.0)
        monkeypatch.setattr(verify, "_det_side", lambda comp, log_pre, sign=1: (1.0, 0.0))
        assert main(["verify", "--identity", "pushforward", "--beta", "1", "--sigma", "1", "--n", "1",
                     "--workers", "1"]) == EXIT_FAIL


class TestSimulate:
    def test_free_statistics(self, tmp_path):
        out, paths = tmp_path / "s.csv", tmp_path / "p.csv"
        argv = ["simulate", "free", "--x0", "1", "--beta", "1.5", "--t-end", "0.5", "--dt", "0.01",
                "--paths", "4000", "--seed", "3", "--output", str(out), "--paths-output", str(paths)]
        assert main(argv) == EXIT_OK
        _, header, rows = _read_csv(out)
        assert header == ["coordinate", "mean", "std_error", "variance"]
        assert abs(rows[0][1] - 1.75) <= 3 * rows[0][2]
        assert len(_read_csv(paths)[2]) == 4000

    def test_chain(self, tmp_path):
        out = tmp_path / "c.csv"
        argv = ["simulate", "chain", "--x0", "0,1", "--t-end", "1", "--step", "0.5", "--paths", "20",
                "--output", str(out)]
        assert main(argv) == EXIT_OK
        _, header, rows = _read_csv(out)
        assert header == ["time", "path", "y1", "y2"] and len(rows) == 3 * 20

    def test_needs_start(self):
        assert main(["simulate", "free"]) == EXIT_USAGE

    def test_reproducible(self, tmp_path):
        files = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for f in files:
            assert main(["simulate", "stationary", "--x0", "0.5,2", "--t-end", "0.2", "--dt", "0.01", "--paths", "500",
                         "--seed", "11", "--paths-output", str(f), "--output", str(tmp_path / "stats.csv")]) == EXIT_OK
        assert files[0].read_bytes() == files[1].read_bytes()
