"""Decomposition of the non-parallelizable fraction into physical sources.

Every contribution is a time share of the benchmark's clock budget
(``total_clocks``). The parts are summed linearly; that is a modelling
simplification, not a law, and sources may interact in real machines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .amdahl import DomainError, Gain, ModelSaturatedError, efficiency, gain

SPEED_OF_LIGHT = 299_792_458.0  # m/s

CONTRIBUTION_TERMS = ("sw", "os_context", "addressing", "propagation")


@dataclass(frozen=True)
class MachineParams:
    """Machine and benchmark-run constants.

    Defaults: a 2e13-cycle benchmark run at 1 GHz, a 2e4-cycle context switch
    and a 2e3-cycle signal round trip. ``per_core_flops`` defaults to 100
    Gflop/s per processing unit.

    ``signal_cycles_roundtrip`` acts as a floor on the round trip derived from
    ``distance_m``; set it to ``None`` to use the pure time-of-flight value.
    ``dispatch_cycles`` is the cost of one addressing step.
    """

    clock_ghz: float = 1.0
    per_core_flops: float = 1e11
    total_clocks: float = 2e13
    context_switch_cycles: float = 2e4
    signal_cycles_roundtrip: Optional[float] = 2e3
    cluster_size: int = 1
    distance_m: float = 100.0
    dispatch_cycles: float = 1.0
    addressing: bool = True

    def __post_init__(self):
        for name in ("clock_ghz", "per_core_flops", "total_clocks"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        for name in ("context_switch_cycles", "distance_m", "dispatch_cycles"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be non-negative and finite, got {value!r}")
        if self.signal_cycles_roundtrip is not None and not self.signal_cycles_roundtrip >= 0:
            raise DomainError("signal_cycles_roundtrip must be non-negative")
        if int(self.cluster_size) != self.cluster_size or self.cluster_size < 1:
            raise DomainError(f"cluster_size must be an integer >= 1, got {self.cluster_size!r}")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class BenchmarkProfile:
    name: str
    sw_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.sw_fraction < 1.0:
            raise DomainError(f"sw_fraction must lie in [0, 1), got {self.sw_fraction!r}")


HPL_LIKE = BenchmarkProfile("hpl", 2e-8)
HPCG_LIKE = BenchmarkProfile("hpcg", 2e-6)
PROFILES = {p.name: p for p in (HPL_LIKE, HPCG_LIKE)}


@dataclass(frozen=True)
class ContributionSet:
    """Named ``(1 - alpha)`` parts. ``access`` is reported but never summed."""

    sw: float = 0.0
    os_context: float = 0.0
    addressing: float = 0.0
    propagation: float = 0.0
    access: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value >= 0.0:
                raise DomainError(f"contribution {f.name} must be non-negative, got {value!r}")
            if value >= 1.0:
                raise ModelSaturatedError(f"model saturated: {f.name} alone is {value!r}")

    def total(self, terms: Iterable[str] = CONTRIBUTION_TERMS) -> float:
        total = math.fsum(getattr(self, t) for t in terms)
        if total >= 1.0:
            raise ModelSaturatedError(f"model saturated: non-parallelizable parts sum to {total!r}")
        return total


@dataclass(frozen=True)
class CurvePoint:
    n_procs: float
    rpeak: float
    rmax: float
    one_minus_alpha: float


@dataclass(frozen=True)
class Breakdown:
    n_star: float
    rpeak_star: float
    rmax_star: float


def addressing_steps(params: MachineParams, n_procs: float) -> float:
    if not params.addressing:
        return 0.0
    return float(math.ceil(n_procs / params.cluster_size))


def os_contribution(params: MachineParams, n_procs: float) -> float:
    """Context switch plus one dispatch step per addressed unit, per clock budget."""
    if not n_procs >= 1:
        raise DomainError(f"n_procs must be >= 1, got {n_procs!r}")
    cycles = params.context_switch_cycles + addressing_steps(params, n_procs) * params.dispatch_cycles
    return cycles / params.total_clocks


def roundtrip_cycles(params: MachineParams, distance_m: Optional[float] = None) -> float:
    d = params.distance_m if distance_m is None else distance_m
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d!r}")
    if d == 0:
        return 0.0
    flight = 2.0 * d / SPEED_OF_LIGHT * params.clock_ghz * 1e9
    if params.signal_cycles_roundtrip is None:
        return flight
    return max(params.signal_cycles_roundtrip, flight)


def pd_contribution(params: MachineParams, distance_m: Optional[float] = None) -> float:
    return roundtrip_cycles(params, distance_m) / params.total_clocks


def inherent_limit_floor(params: MachineParams) -> float:
    """One clock each for fork and join: the absolute floor of ``1 - alpha_eff``."""
    return 2.0 / params.total_clocks


def total_non_parallelizable(parts: ContributionSet) -> float:
    return parts.total()


def contribution_set(params: MachineParams, profile: BenchmarkProfile, n_procs: float) -> ContributionSet:
    if not n_procs >= 1:
        raise DomainError(f"n_procs must be >= 1, got {n_procs!r}")
    return ContributionSet(
        sw=profile.sw_fraction,
        os_context=params.context_switch_cycles / params.total_clocks,
        addressing=addressing_steps(params, n_procs) * params.dispatch_cycles / params.total_clocks,
        propagation=pd_contribution(params),
    )


def one_minus_alpha_at(params: MachineParams, profile: BenchmarkProfile, n_procs: float) -> float:
    return contribution_set(params, profile, n_procs).total()


def rmax_at(params: MachineParams, profile: BenchmarkProfile, n_procs: float) -> float:
    oma = one_minus_alpha_at(params, profile, n_procs)
    return n_procs * params.per_core_flops * efficiency(one_minus_alpha=oma, k=n_procs)


def _log_grid(lo: float, hi: float, samples: int) -> np.ndarray:
    if not (0 < lo <= hi):
        raise DomainError(f"need 0 < lo <= hi, got ({lo!r}, {hi!r})")
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples!r}")
    grid = np.geomspace(lo, hi, samples)
    grid[0], grid[-1] = lo, hi
    return grid


def rmax_curve(
    params: MachineParams,
    profile: BenchmarkProfile,
    rpeak_min: float,
    rpeak_max: float,
    samples: int = 501,
) -> List[CurvePoint]:
    """Predicted RMax over log-spaced RPeak values (flop/s).

    The processor count is virtual, ``rpeak / per_core_flops``; the
    non-parallelizable fraction is re-assembled at each count.
    """
    points = []
    for rpeak in _log_grid(rpeak_min, rpeak_max, samples):
        rpeak = float(rpeak)
        n = rpeak / params.per_core_flops
        if n < 1:
            raise DomainError(f"rpeak {rpeak:g} is below one processing unit")
        oma = one_minus_alpha_at(params, profile, n)
        rmax = rpeak * efficiency(one_minus_alpha=oma, k=n)
        points.append(CurvePoint(n_procs=n, rpeak=rpeak, rmax=rmax, one_minus_alpha=oma))
    return points


def constant_alpha_curve(one_minus_alpha: float, per_core_flops: float, rpeaks: Sequence[float]) -> List[CurvePoint]:
    """RMax(RPeak) at a fixed ``1 - alpha``, scaling the core count virtually."""
    points = []
    for rpeak in rpeaks:
        n = float(rpeak) / per_core_flops
        if n < 1:
            raise DomainError(f"rpeak {rpeak:g} is below one processing unit")
        rmax = float(rpeak) * efficiency(one_minus_alpha=one_minus_alpha, k=n)
        points.append(CurvePoint(n_procs=n, rpeak=float(rpeak), rmax=rmax, one_minus_alpha=one_minus_alpha))
    return points


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def find_breakdown(
    params: MachineParams,
    profile: BenchmarkProfile,
    n_max: float,
    grid_points: int = 1000,
) -> Optional[Breakdown]:
    """Processor count on ``[1, n_max]`` where predicted RMax peaks.

    Returns ``None`` when RMax keeps growing up to ``n_max``.
    """
    if not n_max >= 2:
        raise DomainError(f"n_max must be >= 2, got {n_max!r}")
    grid = _log_grid(1.0, float(n_max), grid_points)
    values = np.array([rmax_at(params, profile, float(n)) for n in grid])
    i = int(np.argmax(values))  # first occurrence: ties go to smaller N
    if i == len(grid) - 1:
        return None

    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[i + 1])
    log_n, best = _golden_max(lambda x: rmax_at(params, profile, math.exp(x)), lo, hi)
    n_star = math.exp(log_n)
    if best < values[i]:
        n_star, best = float(grid[i]), float(values[i])
    return Breakdown(n_star=n_star, rpeak_star=n_star * params.per_core_flops, rmax_star=best)


def gain_limit(
    params: MachineParams,
    profile: BenchmarkProfile,
    n_procs: float,
    terms: Iterable[str] = CONTRIBUTION_TERMS,
) -> Gain:
    """Gain ceiling ``1 / (1 - alpha)`` from the selected contribution terms.

    ``terms`` may also name ``"floor"``, the fork/join clock floor.
    """
    terms = tuple(terms)
    unknown = set(terms) - set(CONTRIBUTION_TERMS) - {"floor"}
    if unknown:
        raise ValueError(f"unknown contribution terms: {sorted(unknown)}")
    parts = contribution_set(params, profile, n_procs)
    values = [getattr(parts, t) for t in terms if t != "floor"]
    if "floor" in terms:
        values.append(inherent_limit_floor(params))
    total = math.fsum(values)
    if total >= 1.0:
        raise ModelSaturatedError(f"model saturated: non-parallelizable parts sum to {total!r}")
    return gain(one_minus_alpha=total)


@dataclass(frozen=True)
class LimitsReport:
    floor: float
    propagation: float
    os: float
    n_procs: float
    cluster_size: int
    gain_floor: Gain
    gain_propagation: Gain
    gain_os: Gain
    gain_os_propagation: Gain


def limits(params: MachineParams, n_procs: float = 1e7) -> LimitsReport:
    floor = inherent_limit_floor(params)
    pd = pd_contribution(params)
    os_ = os_contribution(params, n_procs)
    return LimitsReport(
        floor=floor,
        propagation=pd,
        os=os_,
        n_procs=n_procs,
        cluster_size=params.cluster_size,
        gain_floor=gain(one_minus_alpha=floor),
        gain_propagation=gain(one_minus_alpha=pd),
        gain_os=gain(one_minus_alpha=os_),
        gain_os_propagation=gain(one_minus_alpha=os_ + pd),
    )
