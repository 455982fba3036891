"""Read RMax/RPeak measurement tables and derive effective parallelization.

Tables are delimiter-separated text with a header row. Lines starting with
``#`` are comments; a comment of the form ``# unit: Pflop/s`` sets the
default unit for rows without a ``unit`` column value.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from importlib import resources
from typing import IO, Iterable, List, Optional, Union

from .amdahl import UNBOUNDED, Gain, SingularityError, gain, one_minus_alpha_from_efficiency

UNITS = {
    "flop/s": 1.0,
    "gflop/s": 1e9,
    "tflop/s": 1e12,
    "pflop/s": 1e15,
    "eflop/s": 1e18,
}
DEFAULT_UNIT = "Tflop/s"
MANDATORY = ("name", "year", "rank", "benchmark", "rmax", "rpeak", "cores")
K_COLUMNS = ("cores", "nodes")
KNOWN_BENCHMARKS = ("HPL", "HPCG")


class IngestError(ValueError):
    """The table as a whole cannot be read."""


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}"


@dataclass(frozen=True)
class MachineRecord:
    """One measured machine. ``rpeak`` and ``rmax`` are in flop/s."""

    name: str
    year: int
    rank: int
    benchmark: str
    rpeak: float
    rmax: float
    cores: int
    nodes: Optional[int] = None
    clock_ghz: Optional[float] = None
    perf_factor: Optional[float] = None
    source: str = ""

    @property
    def efficiency(self) -> float:
        return self.rmax / self.rpeak


@dataclass(frozen=True)
class DerivedMetrics:
    efficiency: float
    one_minus_alpha: float
    gain: Gain
    k: int


@dataclass
class ParseResult:
    records: List[MachineRecord]
    errors: List[RowError]


def unit_scale(unit: str) -> float:
    try:
        return UNITS[unit.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown unit {unit!r}; expected one of Gflop/s, Tflop/s, Pflop/s, Eflop/s") from None


def _positive_float(value: str, column: str) -> float:
    x = float(value)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"{column} must be positive, got {value!r}")
    return x


def _count(value: str, column: str, minimum: int) -> int:
    x = int(value)
    if x < minimum:
        raise ValueError(f"{column} must be >= {minimum}, got {value!r}")
    return x


def _record_from_row(row: dict, default_unit: str) -> MachineRecord:
    for column in MANDATORY:
        if not row.get(column, "").strip():
            raise ValueError(f"empty {column}")
    scale = unit_scale(row.get("unit", "").strip() or default_unit)
    rpeak = _positive_float(row["rpeak"], "rpeak") * scale
    rmax = _positive_float(row["rmax"], "rmax") * scale
    if rmax > rpeak:
        raise ValueError("payload exceeds nominal: rmax > rpeak")
    bench = row["benchmark"].strip()
    if bench.upper() in KNOWN_BENCHMARKS:
        bench = bench.upper()

    def optional(column, convert):
        text = (row.get(column) or "").strip()
        return convert(text, column) if text else None

    return MachineRecord(
        name=row["name"].strip(),
        year=int(row["year"]),
        rank=_count(row["rank"], "rank", 1),
        benchmark=bench,
        rpeak=rpeak,
        rmax=rmax,
        cores=_count(row["cores"], "cores", 1),
        nodes=optional("nodes", lambda v, c: _count(v, c, 1)),
        clock_ghz=optional("clock_ghz", _positive_float),
        perf_factor=optional("perf_factor", _positive_float),
        source=(row.get("source") or "").strip(),
    )


def parse_records(
    stream: Union[IO[str], Iterable[str]],
    delimiter: Optional[str] = None,
    unit: Optional[str] = None,
) -> ParseResult:
    """Parse a measurement table in one pass.

    Bad rows are collected as ``RowError`` with their 1-based line number;
    a missing header or mandatory column raises ``IngestError``.
    """
    default_unit = unit or DEFAULT_UNIT
    header = None
    records, errors = [], []
    try:
        for lineno, line in enumerate(stream, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text.lstrip("#").strip()
                if unit is None and body.lower().startswith("unit:"):
                    default_unit = body.split(":", 1)[1].strip()
                    unit_scale(default_unit)
                continue
            if header is None:
                if delimiter is None:
                    delimiter = "\t" if "\t" in line else ","
                header = [h.strip().lower() for h in next(csv.reader([line], delimiter=delimiter))]
                missing = [c for c in MANDATORY if c not in header]
                if missing:
                    raise IngestError(f"line {lineno}: missing mandatory columns: {', '.join(missing)}")
                continue
            cells = next(csv.reader([line], delimiter=delimiter))
            if len(cells) != len(header):
                errors.append(RowError(lineno, f"expected {len(header)} fields, found {len(cells)}"))
                continue
            try:
                records.append(_record_from_row(dict(zip(header, cells)), default_unit))
            except ValueError as exc:
                errors.append(RowError(lineno, str(exc)))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable input: {exc}") from exc
    if header is None:
        raise IngestError("no header row")
    return ParseResult(records, errors)


def read_records(path: str, **kwargs) -> ParseResult:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_records(fh, **kwargs)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def derive(record: MachineRecord, k_column: str = "cores") -> DerivedMetrics:
    """Efficiency, ``1 - alpha`` and gain of one record.

    ``k_column`` picks the processor count: ``cores`` (default) or ``nodes``.
    """
    if k_column not in K_COLUMNS:
        raise ValueError(f"k_column must be one of {K_COLUMNS}, got {k_column!r}")
    k = getattr(record, k_column)
    if k is None:
        raise IngestError(f"{record.name} ({record.year}): no {k_column} value")
    if k < 2:
        raise SingularityError(f"{record.name} ({record.year}): {k_column} = {k}, alpha undefined")
    e = record.efficiency
    oma = one_minus_alpha_from_efficiency(e, k)
    return DerivedMetrics(efficiency=e, one_minus_alpha=oma, gain=gain(one_minus_alpha=oma), k=k)


def record_from_alpha(one_minus_alpha: float, k: int, rpeak: float = 1e18, **kw) -> MachineRecord:
    """Synthetic record whose measured efficiency matches a known ``1 - alpha``."""
    e = 1.0 / (k * one_minus_alpha + (1.0 - one_minus_alpha))
    base = dict(name="synthetic", year=2000, rank=1, benchmark="HPL")
    base.update(kw)
    return MachineRecord(rpeak=rpeak, rmax=rpeak * e, cores=k, **base)


RECORD_COLUMNS = [f.name for f in fields(MachineRecord)]
DERIVED_COLUMNS = ["efficiency", "one_minus_alpha", "gain"]


def _cell(value) -> str:
    if value is None:
        return ""
    if value is UNBOUNDED:
        return "unbounded"
    if isinstance(value, float):
        return f"{value:.16e}"  # 17 significant digits: exact round trip
    return str(value)


def write_records(
    records: Iterable[MachineRecord],
    stream: IO[str],
    derived: bool = True,
    k_column: str = "cores",
    delimiter: str = ",",
) -> List[RowError]:
    """Write records in flop/s, optionally with derived columns.

    Rows that cannot be derived (k < 2, sub-serial efficiency) keep empty
    derived cells; the reasons are returned, numbered by data row.
    """
    records = list(records)
    with_nodes = derived and k_column == "cores" and any(r.nodes is not None for r in records)
    header = RECORD_COLUMNS[:4] + ["rpeak", "rmax", "unit"] + RECORD_COLUMNS[6:]
    if derived:
        header += DERIVED_COLUMNS + (["one_minus_alpha_nodes"] if with_nodes else [])
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header)
    problems = []
    for i, r in enumerate(records, 1):
        row = [_cell(getattr(r, c)) for c in RECORD_COLUMNS[:6]] + ["flop/s"]
        row += [_cell(getattr(r, c)) for c in RECORD_COLUMNS[6:]]
        if derived:
            try:
                m = derive(r, k_column)
                row += [_cell(m.efficiency), _cell(m.one_minus_alpha), _cell(m.gain)]
            except (ValueError, ArithmeticError) as exc:
                problems.append(RowError(i, str(exc)))
                row += ["", "", ""]
            if with_nodes:
                try:
                    row.append(_cell(derive(r, "nodes").one_minus_alpha) if r.nodes is not None else "")
                except ValueError:
                    row.append("")
        writer.writerow(row)
    return problems


def fixture_text() -> str:
    return resources.files(__package__).joinpath("data/fixture.csv").read_text(encoding="utf-8")


def load_fixture() -> List[MachineRecord]:
    result = parse_records(io.StringIO(fixture_text()))
    if result.errors:
        raise IngestError("bundled fixture has bad rows: " + "; ".join(map(str, result.errors)))
    return result.records
