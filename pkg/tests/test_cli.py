import math

import pytest

from exalimits.cli import EXIT_NO_DATA, main
from exalimits.ingest import fixture_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fixture_csv(tmp_path):
    path = tmp_path / "fixture.csv"
    path.write_text(fixture_text())
    return str(path)


def kv(out):
    pairs = {}
    for line in out.splitlines():
        if "=" in line and not line.startswith("#"):
            key, value = line.split("#")[0].split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


class TestAnalyze:
    def test_fixture(self, capsys, fixture_csv):
        code, out, err = run(capsys, "analyze", "--input", fixture_csv)
        assert code == 0
        row = next(line for line in out.splitlines() if line.startswith("Sunway TaihuLight,2018,2,HPL"))
        header = out.splitlines()[0].split(",")
        oma = float(row.split(",")[header.index("one_minus_alpha")])
        assert oma == pytest.approx(3.27e-8, rel=0.01)

    def test_empty_file(self, capsys, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        code, out, err = run(capsys, "analyze", "--input", str(path))
        assert code == 1
        assert out == ""

    def test_header_only_is_no_data(self, capsys, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("name,year,rank,benchmark,rmax,rpeak,cores\n")
        code, out, err = run(capsys, "analyze", "--input", str(path))
        assert code == EXIT_NO_DATA
        assert "no valid rows" in err

    def test_malformed_row_diagnostic(self, capsys, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("name,year,rank,benchmark,rmax,rpeak,cores\na,2000,1,HPL,1,2,4\nb,2000,1,HPL,x,2,4\n")
        code, out, err = run(capsys, "analyze", "--input", str(path))
        assert code == 0
        assert "line 3" in err
        assert len(out.splitlines()) == 2

    def test_missing_file(self, capsys, tmp_path):
        code, out, err = run(capsys, "analyze", "--input", str(tmp_path / "nope.csv"))
        assert code == 1 and "nope.csv" in err


class TestPredict:
    def test_hpcg_breakdown(self, capsys):
        code, out, _ = run(capsys, "predict", "--profile", "hpcg", "--samples", "11")
        assert code == 0
        assert out.startswith("# breakdown n_star=")
        assert len(out.splitlines()) == 2 + 11

    def test_constant_alpha(self, capsys):
        code, out, _ = run(capsys, "predict", "--profile", "hpcg", "--addressing", "off", "--samples", "5")
        assert code == 0
        assert out.splitlines()[0] == "# no breakdown in range"

    def test_addressing_only(self, capsys):
        code, out, _ = run(capsys, "predict", "--profile", "custom", "--sw", "0", "--context-switch-cycles", "0",
                           "--distance-m", "0", "--rpeak-max", "10", "--samples", "5")
        n_star = float(out.splitlines()[0].split("n_star=")[1].split()[0])
        assert n_star == pytest.approx(math.sqrt(2e13), rel=1e-2)

    def test_saturated(self, capsys):
        code, out, err = run(capsys, "predict", "--total-clocks", "1000", "--samples", "5")
        assert code == 1
        assert "saturated" in err and out == ""

    def test_custom_needs_sw(self, capsys):
        code, _, err = run(capsys, "predict", "--profile", "custom")
        assert code == 1 and "--sw" in err


class TestSimulate:
    def write(self, tmp_path, text):
        path = tmp_path / "scenario.cfg"
        path.write_text(text)
        return str(path)

    def test_ideal(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--scenario", self.write(tmp_path, "n_procs=8\npayload=1000\n"))
        assert code == 0
        assert float(kv(out)["alpha_eff"]) == 1.0

    def test_two_procs(self, capsys, tmp_path):
        path = self.write(tmp_path, "n_procs=2\npayloads=100,100\ndispatch_cost=1\n")
        code, out, _ = run(capsys, "simulate", "--scenario", path)
        assert float(kv(out)["alpha_eff"]) == pytest.approx(0.98, abs=1e-4)

    def test_unknown_policy(self, capsys, tmp_path):
        path = self.write(tmp_path, "n_procs=2\npayload=1\n")
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--scenario", path, "--policy", "random"])
        assert exc.value.code == 2

    def test_bad_scenario(self, capsys, tmp_path):
        code, out, err = run(capsys, "simulate", "--scenario", self.write(tmp_path, "n_procs=2\npayloads=1\n"))
        assert code == 1 and "payloads" in err

    def test_seeded_identical(self, capsys, tmp_path):
        path = self.write(tmp_path, "n_procs=50\npayload_dist=uniform\npayload_min=1\npayload_max=1000\n"
                                    "dispatch_cost=2\n")
        a = run(capsys, "simulate", "--scenario", path, "--seed", "7")[1]
        b = run(capsys, "simulate", "--scenario", path, "--seed", "7")[1]
        c = run(capsys, "simulate", "--scenario", path, "--seed", "8")[1]
        assert a == b and a != c

    def test_compare(self, capsys, tmp_path):
        path = self.write(tmp_path, "n_procs=10000\npayload=2000000000\ndispatch_cost=1\n")
        code, out, _ = run(capsys, "simulate", "--scenario", path, "--compare")
        assert float(kv(out)["relative_gap"]) <= 1e-3


class TestLimits:
    def test_defaults(self, capsys):
        code, out, _ = run(capsys, "limits")
        values = kv(out)
        assert values["floor"] == "1e-13"
        assert values["pd"] == "1e-10"
        assert values["gain_floor"] == "1e+13"
        assert float(values["os"]) == pytest.approx(5.01e-7, rel=1e-12)

    def test_cluster(self, capsys):
        _, out, _ = run(capsys, "limits", "--cluster", "100")
        assert float(kv(out)["os"]) == pytest.approx(6e-9, rel=1e-12)

    def test_config_and_flag_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# limits run\nn-procs = 1000\ncluster_size = 10\n")
        _, out, _ = run(capsys, "limits", "--config", str(cfg))
        assert float(kv(out)["os"]) == pytest.approx((2e4 + 100) / 2e13)
        _, out, _ = run(capsys, "limits", "--config", str(cfg), "--cluster-size", "1")
        assert float(kv(out)["os"]) == pytest.approx((2e4 + 1000) / 2e13)

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        with pytest.raises(SystemExit):
            main(["limits", "--config", str(cfg)])


class TestFigures:
    @pytest.mark.parametrize("which", ["hillside", "gain", "scatter"])
    def test_byte_identical(self, capsys, tmp_path, which):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["figures", "--which", which, "--output", str(a)]) == 0
        assert main(["figures", "--which", which, "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert capsys.readouterr().out == ""

    def test_plot_stub(self, tmp_path):
        data, stub = tmp_path / "s.csv", tmp_path / "s.gp"
        assert main(["figures", "--which", "scatter", "--output", str(data), "--plot-script", str(stub)]) == 0
        assert str(data) in stub.read_text()

    def test_no_records(self, capsys):
        code, _, err = run(capsys, "figures", "--which", "gain", "--year", "1800")
        assert code == EXIT_NO_DATA

    def test_levels_flag(self, capsys, fixture_csv):
        code, out, _ = run(capsys, "figures", "--input", fixture_csv, "--which", "scatter", "--year", "2018",
                           "--levels", "1e-7,1e-4")
        levels = {line.split(",")[6] for line in out.splitlines()[1:] if line.startswith("point")}
        assert levels == {"1.00000000e-07", "1.00000000e-04"}
