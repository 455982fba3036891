"""Figure datasets: hillside grid, gain timeline, RMax-vs-RPeak with bands.

Everything here is a pure transformation of record lists; the writers emit
comma-separated text with 9 significant digits and empty cells for gaps.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Dict, List, Optional, Sequence, Tuple

from .amdahl import UNBOUNDED, DomainError, Gain
from .contributions import CurvePoint, MachineParams, constant_alpha_curve
from .ingest import MachineRecord, derive

DEFAULT_LEVELS = (1e-8, 1e-7, 5e-7, 1e-6, 1e-5, 5e-5, 1e-4, 3e-4)


class ReportError(ValueError):
    pass


@dataclass
class HillsideGrid:
    years: List[int]
    ranks: List[int]
    values: List[List[Optional[float]]]  # values[i][j] for years[i], ranks[j]

    def column(self, year: int) -> List[Optional[float]]:
        return self.values[self.years.index(year)]

    def present(self, years: Optional[Sequence[int]] = None) -> List[float]:
        rows = self.values if years is None else [self.column(y) for y in years if y in self.years]
        return [v for row in rows for v in row if v is not None]


def hillside(records: Sequence[MachineRecord], benchmark: str = "HPL", k_column: str = "cores") -> HillsideGrid:
    """``1 - alpha`` on a (year, rank) grid; cells without a record are ``None``."""
    cells: Dict[Tuple[int, int], float] = {}
    dupes = set()
    for r in records:
        if r.benchmark != benchmark:
            continue
        key = (r.year, r.rank)
        if key in cells:
            dupes.add(key)
        cells[key] = derive(r, k_column).one_minus_alpha
    if dupes:
        listed = ", ".join(f"({y}, {k})" for y, k in sorted(dupes))
        raise ReportError(f"duplicate (year, rank) pairs: {listed}")
    years = sorted({y for y, _ in cells})
    ranks = list(range(1, max((k for _, k in cells), default=0) + 1))
    values = [[cells.get((y, k)) for k in ranks] for y in years]
    return HillsideGrid(years, ranks, values)


@dataclass
class GainYear:
    year: int
    rank_gains: List[Optional[Gain]]  # by RMax order; None past the last machine
    rank_names: List[Optional[str]]
    best_gain: Gain
    best_name: str


@dataclass
class GainTimeline:
    entries: List[GainYear] = field(default_factory=list)
    notices: List[str] = field(default_factory=list)

    @property
    def years(self) -> List[int]:
        return [e.year for e in self.entries]

    def best(self, year: int) -> Gain:
        return next(e.best_gain for e in self.entries if e.year == year)


def _gain_key(g: Gain) -> float:
    return math.inf if g is UNBOUNDED else g


def gain_timeline(
    records: Sequence[MachineRecord],
    top: int = 3,
    benchmark: str = "HPL",
    k_column: str = "cores",
) -> GainTimeline:
    """Per year: gains of the ``top`` machines by RMax and of the best-by-alpha machine."""
    by_year = defaultdict(list)
    notices = []
    for r in records:
        if r.benchmark != benchmark:
            continue
        try:
            by_year[r.year].append((r, derive(r, k_column)))
        except ValueError as exc:
            notices.append(f"{r.year} {r.name}: skipped ({exc})")
    timeline = GainTimeline(notices=notices)
    for year in sorted(by_year):
        rows = by_year[year]
        if not rows:
            timeline.notices.append(f"{year}: no usable records")
            continue
        ranked = sorted(rows, key=lambda rm: (-rm[0].rmax, rm[0].rank))[:top]
        best_rec, best_m = min(rows, key=lambda rm: (rm[1].one_minus_alpha, rm[0].rank))
        pad = top - len(ranked)
        timeline.entries.append(GainYear(
            year=year,
            rank_gains=[m.gain for _, m in ranked] + [None] * pad,
            rank_names=[r.name for r, _ in ranked] + [None] * pad,
            best_gain=best_m.gain,
            best_name=best_rec.name,
        ))
    return timeline


def classify(one_minus_alpha: float, levels: Sequence[float]) -> float:
    """Nearest level on a log10 scale; ties go to the smaller level."""
    levels = sorted(levels)
    if not levels:
        raise DomainError("no levels to classify against")
    if one_minus_alpha <= 0:
        return levels[0]
    x = math.log10(one_minus_alpha)
    return min(levels, key=lambda lv: abs(x - math.log10(lv)))


@dataclass(frozen=True)
class ScatterPoint:
    name: str
    year: int
    benchmark: str
    rpeak: float
    rmax: float
    one_minus_alpha: float
    level: float
    one_minus_alpha_nodes: Optional[float] = None


@dataclass
class ScatterDataset:
    points: List[ScatterPoint]
    curves: Dict[float, List[CurvePoint]]
    levels: List[float]


def scatter_with_bands(
    records: Sequence[MachineRecord],
    levels: Sequence[float] = DEFAULT_LEVELS,
    params: Optional[MachineParams] = None,
    samples: int = 101,
    k_column: str = "cores",
    apply_perf_factor: bool = False,
    rpeak_range: Optional[Tuple[float, float]] = None,
) -> ScatterDataset:
    """Measured points tagged with their nearest ``1 - alpha`` level, plus one curve per level.

    With ``apply_perf_factor`` a record's RMax is multiplied by its
    ``perf_factor`` (when present) before classification.
    """
    levels = sorted(float(x) for x in levels)
    for lv in levels:
        if not 0.0 < lv < 1.0:
            raise DomainError(f"levels must lie in (0, 1), got {lv!r}")
    params = params or MachineParams()
    points = []
    for r in records:
        if apply_perf_factor and r.perf_factor is not None:
            r = MachineRecord(**{**r.__dict__, "rmax": min(r.rmax * r.perf_factor, r.rpeak)})
        m = derive(r, k_column)
        nodes_oma = None
        if k_column == "cores" and r.nodes is not None and r.nodes >= 2:
            try:
                nodes_oma = derive(r, "nodes").one_minus_alpha
            except ValueError:
                pass
        points.append(ScatterPoint(r.name, r.year, r.benchmark, r.rpeak, r.rmax,
                                   m.one_minus_alpha, classify(m.one_minus_alpha, levels), nodes_oma))
    if rpeak_range is None:
        if points:
            rpeak_range = (min(p.rpeak for p in points), max(p.rpeak for p in points))
        else:
            rpeak_range = (1e15, 1.1e18)
    lo, hi = rpeak_range
    lo = max(lo, params.per_core_flops)
    grid = [lo * (hi / lo) ** (i / (samples - 1)) for i in range(samples)] if samples > 1 and hi > lo else [lo]
    curves = {lv: constant_alpha_curve(lv, params.per_core_flops, grid) for lv in levels}
    return ScatterDataset(points, curves, levels)


def _num(x) -> str:
    if x is None:
        return ""
    if x is UNBOUNDED:
        return "unbounded"
    return f"{float(x):.8e}"


def write_hillside(grid: HillsideGrid, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["year"] + [f"rank_{k}" for k in grid.ranks])
    for year, row in zip(grid.years, grid.values):
        w.writerow([year] + [_num(v) for v in row])


def write_gain_timeline(timeline: GainTimeline, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    top = max((len(e.rank_gains) for e in timeline.entries), default=3)
    w.writerow(["year"] + [f"gain_rank_{i}" for i in range(1, top + 1)] + ["gain_best", "best_name"])
    for e in timeline.entries:
        w.writerow([e.year] + [_num(g) for g in e.rank_gains] + [_num(e.best_gain), e.best_name])


def write_scatter(data: ScatterDataset, stream: IO[str]) -> None:
    """Points and curves in one table, told apart by the ``kind`` column."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["kind", "label", "benchmark", "rpeak", "rmax", "one_minus_alpha", "level", "one_minus_alpha_nodes"])
    for p in data.points:
        w.writerow(["point", f"{p.name} {p.year}", p.benchmark, _num(p.rpeak), _num(p.rmax),
                    _num(p.one_minus_alpha), _num(p.level), _num(p.one_minus_alpha_nodes)])
    for lv in data.levels:
        for c in data.curves[lv]:
            w.writerow(["curve", _num(lv), "", _num(c.rpeak), _num(c.rmax), _num(lv), _num(lv), ""])


_PLOTS = {
    "hillside": (
        "set datafile separator ','\nset logscale z\nset xlabel 'rank'\nset ylabel 'year'\n"
        "set zlabel '1-alpha'\n# columns rank_1..rank_R per year row\n"
        "plot for [i=2:*] '{data}' using 1:i with linespoints title columnheader(i)\n"
    ),
    "gain": (
        "set datafile separator ','\nset logscale y\nset xlabel 'year'\nset ylabel 'gain'\n"
        "plot for [i=2:5] '{data}' using 1:i with linespoints title columnheader(i)\n"
    ),
    "scatter": (
        "set datafile separator ','\nset logscale xy\nset xlabel 'RPeak (flop/s)'\n"
        "set ylabel 'RMax (flop/s)'\n"
        "plot '{data}' using ($1 eq 'point' ? $4 : 1/0):5 with points title 'measured', \\\n"
        "     '{data}' using ($1 eq 'curve' ? $4 : 1/0):5 with dots title 'constant 1-alpha'\n"
    ),
}


def plot_script(which: str, data_path: str) -> str:
    """A small gnuplot stub for a written dataset."""
    try:
        return _PLOTS[which].replace("{data}", data_path)
    except KeyError:
        raise ReportError(f"unknown figure {which!r}") from None
