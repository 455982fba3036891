import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from exalimits.amdahl import UNBOUNDED, SingularityError, SubSerialEfficiencyError
from exalimits.ingest import (
    IngestError,
    MachineRecord,
    derive,
    load_fixture,
    parse_records,
    record_from_alpha,
    write_records,
)

HEADER = "name,year,rank,benchmark,rmax,rpeak,cores\n"

# Values below were produced by an mpmath evaluation at 50 digits and frozen.
ORACLE_TAIHU_HPL = 3.27000222734e-8
ORACLE_TAIHU_HPL_GAIN = 30581018.9253
ORACLE_TAIHU_HPCG = 2.43592896471e-5


def parse(text, **kw):
    return parse_records(io.StringIO(text), **kw)


class TestParse:
    def test_header_only(self):
        r = parse(HEADER)
        assert r.records == [] and r.errors == []

    def test_empty_stream(self):
        with pytest.raises(IngestError, match="header"):
            parse("")

    def test_missing_columns(self):
        with pytest.raises(IngestError, match="cores"):
            parse("name,year,rank,benchmark,rmax,rpeak\n")

    def test_rmax_over_rpeak(self):
        r = parse(HEADER + "x,2000,1,HPL,5,4,10\n")
        assert r.records == []
        assert r.errors[0].line == 2
        assert "payload exceeds nominal" in r.errors[0].reason

    def test_taihulight_tflops(self):
        r = parse(HEADER + "Sunway TaihuLight,2018,2,HPL,93010,125400,10649600\n")
        (rec,) = r.records
        assert rec.rmax == pytest.approx(0.09301e18, rel=1e-15)
        assert rec.rpeak == pytest.approx(0.1254e18, rel=1e-15)
        assert rec.cores == 10_649_600

    def test_units_per_row_and_file(self):
        text = "# unit: Pflop/s\nname,year,rank,benchmark,rmax,rpeak,cores,unit\na,2018,1,HPL,1,2,100,\nb,2018,2,HPL,1,2,100,Gflop/s\n"
        a, b = parse(text).records
        assert a.rpeak == 2e15
        assert b.rpeak == 2e9

    def test_unknown_unit(self):
        r = parse("name,year,rank,benchmark,rmax,rpeak,cores,unit\na,1,1,HPL,1,2,3,furlongs\n")
        assert "unknown unit" in r.errors[0].reason

    def test_tab_delimited(self):
        r = parse("name\tyear\trank\tbenchmark\trmax\trpeak\tcores\na b\t2001\t1\thpl\t1\t2\t4\n")
        assert r.records[0].name == "a b"
        assert r.records[0].benchmark == "HPL"

    def test_bad_rows_keep_line_numbers(self):
        text = HEADER + "# comment\na,2000,1,HPL,1,2,4\nb,2000,x,HPL,1,2,4\nc,2000,1,HPL,1,2\n\nd,2000,0,HPL,1,2,4\n"
        r = parse(text)
        assert [rec.name for rec in r.records] == ["a"]
        assert [e.line for e in r.errors] == [4, 5, 7]

    def test_single_core_row_parsed(self):
        (rec,) = parse(HEADER + "solo,2000,1,HPL,1,2,1\n").records
        with pytest.raises(SingularityError):
            derive(rec)


class TestDerive:
    def test_taihulight_hpl(self):
        rec = MachineRecord("TaihuLight", 2018, 2, "HPL", 0.1254e18, 0.09301e18, 10_649_600)
        m = derive(rec)
        assert m.one_minus_alpha == pytest.approx(ORACLE_TAIHU_HPL, rel=1e-10)
        assert m.gain == pytest.approx(ORACLE_TAIHU_HPL_GAIN, rel=1e-10)

    def test_taihulight_hpcg(self):
        rec = MachineRecord("TaihuLight", 2018, 6, "HPCG", 0.125e18, 0.000480e18, 10_649_600)
        assert derive(rec).one_minus_alpha == pytest.approx(ORACLE_TAIHU_HPCG, rel=1e-10)

    def test_perfect(self):
        m = derive(MachineRecord("p", 2000, 1, "HPL", 1e15, 1e15, 100))
        assert m.one_minus_alpha == 0
        assert m.gain is UNBOUNDED

    def test_sub_serial(self):
        with pytest.raises(SubSerialEfficiencyError, match="sub-serial"):
            derive(MachineRecord("s", 2000, 1, "HPL", 1e15, 1e12, 100))

    def test_nodes_column(self):
        rec = MachineRecord("n", 2000, 1, "HPL", 1e15, 5e14, 1000, nodes=10)
        assert derive(rec, "nodes").k == 10
        assert derive(rec, "nodes").one_minus_alpha > derive(rec).one_minus_alpha
        with pytest.raises(IngestError):
            derive(MachineRecord("n", 2000, 1, "HPL", 1e15, 5e14, 1000), "nodes")

    @given(st.floats(1e-9, 0.5), st.integers(2, 10**8))
    def test_alpha_identity(self, oma, k):
        assert derive(record_from_alpha(oma, k)).one_minus_alpha == pytest.approx(oma, rel=1e-10)

    @given(st.integers(2, 10**8), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_higher_efficiency_lower_oma(self, k, e1, e2):
        if e1 == e2 or min(e1, e2) * k < 1:
            return
        a = derive(MachineRecord("a", 1, 1, "HPL", 1.0, e1, k))
        b = derive(MachineRecord("b", 1, 1, "HPL", 1.0, e2, k))
        assert (a.one_minus_alpha < b.one_minus_alpha) == (e1 > e2)


records = st.builds(
    MachineRecord,
    name=st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).map(str.strip).filter(
        lambda s: s and not s.startswith("#")),
    year=st.integers(1990, 2100),
    rank=st.integers(1, 500),
    benchmark=st.sampled_from(["HPL", "HPCG", "Graph500"]),
    rpeak=st.floats(1e9, 1e21),
    rmax=st.just(0.0),
    cores=st.integers(1, 10**8),
    nodes=st.none() | st.integers(1, 10**6),
    clock_ghz=st.none() | st.floats(0.1, 10),
    perf_factor=st.none() | st.floats(0.01, 100),
    source=st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=20).map(str.strip),
)


@given(st.lists(st.tuples(records, st.floats(1e-6, 1.0)), max_size=5))
def test_round_trip(pairs):
    recs = [MachineRecord(**{**r.__dict__, "rmax": r.rpeak * f}) for r, f in pairs]
    buf = io.StringIO()
    write_records(recs, buf)
    back = parse_records(io.StringIO(buf.getvalue()))
    assert back.errors == []
    assert back.records == recs


def test_written_derived_columns():
    buf = io.StringIO()
    problems = write_records([MachineRecord("a", 2018, 1, "HPL", 0.1254e18, 0.09301e18, 10_649_600),
                              MachineRecord("solo", 2018, 2, "HPL", 2.0, 1.0, 1)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].endswith("efficiency,one_minus_alpha,gain")
    assert "3.27000222" in lines[1]
    assert lines[2].endswith(",,,")
    assert problems[0].line == 2


def test_fixture_loads():
    recs = load_fixture()
    assert len(recs) == 40
    assert {r.benchmark for r in recs} == {"HPL", "HPCG"}
    assert all(r.source for r in recs)
