import math
import time

import numpy as np
import pytest

from dopinfo import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse(text, delimiter=","):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(delimiter)
    rows = np.array([[float(v) for v in ln.split(delimiter)] for ln in lines[1:]])
    return header, rows


class TestPrior:
    def test_single(self, capsys):
        code, out, _ = run(capsys, "prior", "--pmd-ps", "20", "--sigma-ps", "10")
        assert code == 0
        header, rows = parse(out)
        assert header == ["m", "density"]
        assert len(rows) == 2001
        assert np.trapezoid(rows[:, 1], rows[:, 0]) == pytest.approx(1.0, abs=1e-4)
        assert "\r" not in out and out.endswith("\n")

    def test_six_significant_digits(self, capsys):
        _, out, _ = run(capsys, "prior", "--pmd-ps", "30", "--grid-points", "101")
        line = out.splitlines()[40]
        m, d = line.split(",")
        assert m == "0.39" and len(d.replace(".", "").lstrip("0")) <= 6

    def test_long_format(self, capsys):
        code, out, _ = run(capsys, "prior", "--pmd-ps", "20,30,40", "--sigma-ps", "10")
        header, rows = parse(out)
        assert code == 0 and header == ["pmd_ps", "m", "density"]
        assert sorted(set(rows[:, 0])) == [20.0, 30.0, 40.0]
        for pmd in (20.0, 30.0, 40.0):
            block = rows[rows[:, 0] == pmd]
            assert np.trapezoid(block[:, 2], block[:, 1]) == pytest.approx(1.0, abs=1e-4)

    def test_coarse_vs_fine(self, capsys):
        _, coarse, _ = run(capsys, "prior", "--pmd-ps", "20", "--grid-points", "101")
        _, fine, _ = run(capsys, "prior", "--pmd-ps", "20", "--grid-points", "2001")
        c, f = parse(coarse)[1], parse(fine)[1]
        # endpoint m = 0 is a panel-mass value that depends on the grid step
        assert np.max(np.abs(c[1:, 1] - f[20::20, 1])) < 1e-2

    def test_tsv_and_file(self, capsys, tmp_path):
        path = tmp_path / "prior.tsv"
        code, out, _ = run(capsys, "prior", "--format", "tsv", "--output", str(path),
                           "--grid-points", "101")
        assert code == 0 and out == ""
        header, rows = parse(path.read_text(), "\t")
        assert header == ["m", "density"] and rows.shape == (101, 2)


class TestInfogain:
    def test_paper_rows(self, capsys):
        code, out, _ = run(capsys, "infogain", "--pmd-ps", "20,30,40,inf", "--sigma-ps", "10")
        header, rows = parse(out)
        assert code == 0
        assert header == ["pmd_ps", "sigma_ps", "i_coh_bits", "i_incoh_bits", "ratio"]
        assert math.isinf(rows[3, 0])
        assert rows[:, 4] == pytest.approx([7.08, 5.69, 5.23, 4.82], rel=0.05)
        assert np.all(rows[:, 2] > rows[:, 3])

    def test_parallel_jobs_same_output(self, capsys):
        _, serial, _ = run(capsys, "infogain", "--pmd-ps", "20,40", "--grid-points", "201")
        _, parallel, _ = run(capsys, "infogain", "--pmd-ps", "20,40", "--grid-points", "201",
                             "--jobs", "2")
        assert serial == parallel


class TestSimulate:
    def test_reproducible_bytes(self, capsys, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            assert run(capsys, "simulate", "--pmd-ps", "30", "--samples", "1000000",
                       "--seed", "7", "--output", str(p))[0] == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_histogram_and_trailer(self, capsys):
        from dopinfo.montecarlo import prior_bin_masses
        from dopinfo.pmd import GaussianPulse, prior_table

        code, out, _ = run(capsys, "simulate", "--pmd-ps", "30", "--sigma-ps", "10",
                           "--samples", "1000000")
        header, rows = parse(out)
        assert code == 0 and header == ["m_bin_center", "empirical_density"]
        assert rows.shape == (100, 2)
        masses = prior_bin_masses(prior_table(30.0, GaussianPulse(10.0)), 100)
        assert np.sum(np.abs(rows[:, 1] * 0.01 - masses)) < 0.02
        trailer = [ln for ln in out.splitlines() if ln.startswith("#")]
        assert any("mi_coh_bits=" in ln and "+-" in ln for ln in trailer)
        assert any("mi_incoh_bits=" in ln for ln in trailer)

    def test_tiny_sample(self, capsys):
        code, out, _ = run(capsys, "simulate", "--samples", "100")
        assert code == 0
        assert len(parse(out)[1]) == 100

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("DOP_SEED", "123")
        _, env_out, _ = run(capsys, "simulate", "--samples", "1000")
        _, flag_out, _ = run(capsys, "simulate", "--samples", "1000", "--seed", "123")
        monkeypatch.delenv("DOP_SEED")
        _, default_out, _ = run(capsys, "simulate", "--samples", "1000")
        assert env_out == flag_out != default_out

    def test_infinite_pmd_rejected(self, capsys):
        assert run(capsys, "simulate", "--pmd-ps", "inf")[0] == 2


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["prior", "--pmd-ps", "-3"],
        ["prior", "--pmd-ps", "abc"],
        ["prior", "--sigma-ps", "0"],
        ["prior", "--grid-points", "50"],
        ["simulate", "--samples", "0"],
        ["prior", "--format", "json"],
        ["bogus"],
    ])
    def test_bad_arguments(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2

    def test_bad_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("DOP_SEED", "xyz")
        assert run(capsys, "simulate", "--samples", "10")[0] == 2

    def test_unwritable(self, capsys, tmp_path):
        target = tmp_path / "missing" / "out.csv"
        code, _, err = run(capsys, "prior", "--grid-points", "101", "--output", str(target))
        assert code == 3 and "I/O error" in err


class TestValidate:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "validate")
        assert code == 0
        assert "FAIL" not in out
        assert out.strip().endswith("checks passed")

    def test_injected_constant_fails(self, capsys):
        code, out, err = run(capsys, "validate", "--inject", "ratio_20=9.5")
        assert code == 1
        assert "gain_ratio[20]" in err
        failing = [ln for ln in out.splitlines() if " FAIL " in ln]
        assert [ln.split()[0] for ln in failing] == ["gain_ratio[20]"]

    def test_ten_million_samples_bounded_time(self, capsys):
        t0 = time.perf_counter()
        code, _, _ = run(capsys, "validate", "--samples", "10000000")
        assert code == 0 and time.perf_counter() - t0 < 600

    def test_unknown_injection(self, capsys):
        assert run(capsys, "validate", "--inject", "nope=1")[0] == 2
