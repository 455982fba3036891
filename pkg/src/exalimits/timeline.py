"""Discrete-event model of one fork/join round.

Timeline, in integer clock cycles, measured from the end of external access:

    sw_pre, os_pre                 serial, on the initiator
    dispatch x n                   serial, ``dispatch_cost`` each, in policy order
    pd_out[i] -> payload[i] -> pd_back[i]   per processor, overlapping
    join                           when the last result has arrived
    os_post, sw_post               serial

``Total`` (the makespan) excludes ``access_init``/``access_term``;
``Extended`` includes them. Only ``Total`` enters ``alpha_eff``.
"""

from __future__ import annotations

import dataclasses
import statistics
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .amdahl import SingularityError
from .contributions import SPEED_OF_LIGHT, BenchmarkProfile, MachineParams, contribution_set

POLICIES = ("as-given", "nearest-first", "farthest-first")
MAX_CYCLES = 2**63 - 1

IntList = Union[int, Sequence[int]]


class TimelineError(ValueError):
    pass


def _as_cycles(name: str, value, minimum: int = 0) -> int:
    if isinstance(value, bool):
        raise TimelineError(f"{name} must be an integer cycle count, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise TimelineError(f"{name} must be a whole number of cycles, got {value!r}")
        value = int(value)
    if not isinstance(value, (int, np.integer)):
        raise TimelineError(f"{name} must be an integer cycle count, got {value!r}")
    if value < minimum:
        raise TimelineError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def _as_list(name: str, value, n: int, minimum: int = 0) -> List[int]:
    if value is None:
        value = 0
    if isinstance(value, (int, float, np.integer)) and not isinstance(value, bool):
        return [_as_cycles(name, value, minimum)] * n
    items = [_as_cycles(f"{name}[{i}]", v, minimum) for i, v in enumerate(value)]
    if len(items) != n:
        raise TimelineError(f"{name} has {len(items)} entries, expected n_procs = {n}")
    return items


def constant_payloads(n: int, cycles: int) -> List[int]:
    return [cycles] * n


def uniform_payloads(n: int, low: int, high: int, seed: int = 0) -> List[int]:
    """Integer payloads drawn uniformly from ``[low, high]``, reproducible by seed."""
    if not 0 < low <= high:
        raise TimelineError(f"need 0 < low <= high, got ({low}, {high})")
    rng = np.random.default_rng(seed)
    return [int(x) for x in rng.integers(low, high, size=n, endpoint=True)]


@dataclass
class TimelineConfig:
    n_procs: int
    payloads: IntList
    sw_pre: int = 0
    sw_post: int = 0
    os_pre: int = 0
    os_post: int = 0
    dispatch_cost: int = 0
    pd_out: Optional[IntList] = None
    pd_back: Optional[IntList] = None
    access_init: int = 0
    access_term: int = 0
    dispatch_order: str = "as-given"
    initiator_works: bool = False
    join_cost: int = 0

    def __post_init__(self):
        self.n_procs = _as_cycles("n_procs", self.n_procs, 1)
        n = self.n_procs
        if not isinstance(self.payloads, (int, float, np.integer)) and len(self.payloads) == 0:
            raise TimelineError("payload list is empty")
        self.payloads = _as_list("payloads", self.payloads, n, minimum=1)
        self.pd_out = _as_list("pd_out", self.pd_out, n)
        self.pd_back = _as_list("pd_back", self.pd_back, n)
        for name in ("sw_pre", "sw_post", "os_pre", "os_post", "dispatch_cost",
                     "access_init", "access_term", "join_cost"):
            setattr(self, name, _as_cycles(name, getattr(self, name)))
        if self.dispatch_order not in POLICIES:
            raise TimelineError(f"unknown dispatch policy {self.dispatch_order!r}; choose from {POLICIES}")
        self.initiator_works = bool(self.initiator_works)
        if self._cycle_bound() > MAX_CYCLES:
            raise TimelineError("configuration exceeds the 2**63 cycle counter")

    def _cycle_bound(self) -> int:
        return (self.access_init + self.access_term + self.serial_cycles
                + self.n_procs * (self.dispatch_cost + self.join_cost)
                + max(self.pd_out) + max(self.pd_back) + sum(self.payloads))

    @property
    def serial_cycles(self) -> int:
        return self.sw_pre + self.os_pre + self.os_post + self.sw_post

    def replace(self, **changes) -> "TimelineConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SimResult:
    n_procs: int
    makespan: int
    extended_makespan: int
    payload_sum: int
    serial_time: int  # T1: what one processor would spend without overheads
    speedup: float
    payload_std: float
    per_proc_busy: List[float] = field(repr=False)
    completion: List[int] = field(repr=False)  # result arrival time per processor
    order: List[int] = field(repr=False)

    @property
    def one_minus_alpha_eff(self) -> float:
        """``1 - alpha_eff`` from the integer times with a single rounding."""
        n = self.n_procs
        if n == 1:
            raise SingularityError("alpha_eff is undefined for a single processor")
        return (n * self.makespan - self.serial_time) / ((n - 1) * self.serial_time)

    @property
    def alpha_eff(self) -> float:
        """Alpha implied by the simulated speedup. Negative when the run is slower than serial."""
        n = self.n_procs
        if n == 1:
            raise SingularityError("alpha_eff is undefined for a single processor")
        return n * (self.serial_time - self.makespan) / ((n - 1) * self.serial_time)


def apply_policy(config: TimelineConfig, policy: Optional[str] = None) -> List[int]:
    """Dispatch order for the processors of ``config``.

    Distance is the round trip ``pd_out + pd_back``; ties fall back to
    ``pd_out`` and then the processor index.
    """
    policy = config.dispatch_order if policy is None else policy
    idx = range(config.n_procs)
    rt = [o + b for o, b in zip(config.pd_out, config.pd_back)]
    if policy == "as-given":
        return list(idx)
    if policy == "nearest-first":
        return sorted(idx, key=lambda i: (rt[i], config.pd_out[i], i))
    if policy == "farthest-first":
        return sorted(idx, key=lambda i: (-rt[i], -config.pd_out[i], i))
    raise TimelineError(f"unknown dispatch policy {policy!r}; choose from {POLICIES}")


def dispatch_orders() -> tuple:
    return POLICIES


def simulate(config: TimelineConfig, order: Optional[Sequence[int]] = None) -> SimResult:
    """Run the schedule. ``order`` overrides the configured policy."""
    n = config.n_procs
    order = apply_policy(config) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise TimelineError("order must be a permutation of the processor indices")

    t = config.sw_pre + config.os_pre
    arrival = [0] * n
    if n == 1:
        # the initiator runs the only payload itself
        arrival[0] = t + config.payloads[0]
        dispatch_end = t
    else:
        remote = [i for i in order if not (config.initiator_works and i == 0)]
        for pos, i in enumerate(remote, start=1):
            start = t + pos * config.dispatch_cost + config.pd_out[i]
            arrival[i] = start + config.payloads[i] + config.pd_back[i]
        dispatch_end = t + len(remote) * config.dispatch_cost
        if config.initiator_works:
            arrival[0] = dispatch_end + config.payloads[0]

    if config.join_cost:
        join = dispatch_end
        for a in sorted(arrival):
            join = max(join, a) + config.join_cost
    else:
        join = max(dispatch_end, max(arrival))

    makespan = join + config.os_post + config.sw_post
    payload_sum = sum(config.payloads)
    serial_time = config.serial_cycles + payload_sum
    return SimResult(
        n_procs=n,
        makespan=makespan,
        extended_makespan=makespan + config.access_init + config.access_term,
        payload_sum=payload_sum,
        serial_time=serial_time,
        speedup=serial_time / makespan,
        payload_std=statistics.pstdev(config.payloads),
        per_proc_busy=[p / makespan for p in config.payloads],
        completion=arrival,
        order=order,
    )


@dataclass(frozen=True)
class AnalyticComparison:
    alpha_sim: float
    alpha_model: float
    one_minus_alpha_sim: float
    one_minus_alpha_model: float
    relative_gap: float


def analytic_machine(config: TimelineConfig, params: Optional[MachineParams] = None):
    """Express a uniform-payload config as (MachineParams, BenchmarkProfile).

    The clock budget is the serial-equivalent time T1; propagation cycles are
    turned into a distance at the machine clock so the time-of-flight path
    reproduces them.
    """
    if len(set(config.payloads)) != 1:
        raise TimelineError("analytic comparison needs uniform payloads")
    params = MachineParams() if params is None else params
    t1 = config.serial_cycles + sum(config.payloads)
    rt = max(o + b for o, b in zip(config.pd_out, config.pd_back))
    machine = dataclasses.replace(
        params,
        total_clocks=float(t1),
        context_switch_cycles=float(config.os_pre + config.os_post),
        dispatch_cycles=float(config.dispatch_cost),
        signal_cycles_roundtrip=None,
        distance_m=rt * SPEED_OF_LIGHT / (2.0 * params.clock_ghz * 1e9),
        cluster_size=1,
        addressing=True,
    )
    profile = BenchmarkProfile("scenario", (config.sw_pre + config.sw_post) / t1)
    return machine, profile


def compare_with_analytic(config: TimelineConfig, params: Optional[MachineParams] = None) -> AnalyticComparison:
    """Simulated vs contribution-model ``alpha_eff``; the gap is relative on ``1 - alpha``."""
    machine, profile = analytic_machine(config, params)
    dispatched = config.n_procs - 1 if config.initiator_works else config.n_procs
    result = simulate(config)
    oma_sim = result.one_minus_alpha_eff  # raises for a single processor
    oma_model = contribution_set(machine, profile, dispatched).total()
    scale = max(abs(oma_sim), abs(oma_model))
    gap = 0.0 if scale == 0 else abs(oma_sim - oma_model) / scale
    return AnalyticComparison(
        alpha_sim=result.alpha_eff,
        alpha_model=1.0 - oma_model,
        one_minus_alpha_sim=oma_sim,
        one_minus_alpha_model=oma_model,
        relative_gap=gap,
    )


# -- scenario files ---------------------------------------------------------

_INT_KEYS = ("n_procs", "sw_pre", "sw_post", "os_pre", "os_post", "dispatch_cost",
             "access_init", "access_term", "join_cost")
_LIST_KEYS = ("payloads", "pd_out", "pd_back")
_GEN_KEYS = ("payload", "payload_dist", "payload_min", "payload_max", "seed")
SCENARIO_KEYS = _INT_KEYS + _LIST_KEYS + _GEN_KEYS + ("dispatch_order", "policy", "initiator_works")


def parse_key_values(text: str, source: str = "<scenario>") -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Later keys win."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TimelineError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise TimelineError(f"{source}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        try:
            f = float(value)
        except ValueError:
            raise TimelineError(f"{key}: not a number: {value!r}") from None
        if not f.is_integer():
            raise TimelineError(f"{key}: not a whole number of cycles: {value!r}")
        return int(f)


def _bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise TimelineError(f"{key}: expected a boolean, got {value!r}")


def config_from_mapping(values: Dict[str, str]) -> TimelineConfig:
    unknown = sorted(set(values) - set(SCENARIO_KEYS))
    if unknown:
        raise TimelineError(f"unknown scenario keys: {', '.join(unknown)}")
    if "n_procs" not in values:
        raise TimelineError("scenario is missing n_procs")
    kw: Dict[str, object] = {k: _int(k, values[k]) for k in _INT_KEYS if k in values}
    n = kw["n_procs"]
    for key in ("pd_out", "pd_back"):
        if key in values:
            parts = [p.strip() for p in values[key].split(",") if p.strip()]
            kw[key] = _int(key, parts[0]) if len(parts) == 1 else [_int(key, p) for p in parts]

    dist = values.get("payload_dist", "list" if "payloads" in values else "constant")
    if dist == "list":
        if "payloads" not in values:
            raise TimelineError("payload_dist=list needs a payloads key")
        kw["payloads"] = [_int("payloads", p) for p in values["payloads"].split(",") if p.strip()]
    elif dist == "constant":
        if "payload" not in values:
            raise TimelineError("constant payloads need a payload key")
        kw["payloads"] = constant_payloads(n, _int("payload", values["payload"]))
    elif dist == "uniform":
        for key in ("payload_min", "payload_max"):
            if key not in values:
                raise TimelineError(f"payload_dist=uniform needs {key}")
        seed = _int("seed", values.get("seed", "0"))
        kw["payloads"] = uniform_payloads(n, _int("payload_min", values["payload_min"]),
                                          _int("payload_max", values["payload_max"]), seed)
    else:
        raise TimelineError(f"unknown payload_dist {dist!r}; choose constant, uniform or list")

    order = values.get("policy", values.get("dispatch_order"))
    if order is not None:
        kw["dispatch_order"] = order
    if "initiator_works" in values:
        kw["initiator_works"] = _bool("initiator_works", values["initiator_works"])
    return TimelineConfig(**kw)


def load_scenario(text: str, source: str = "<scenario>", **overrides: str) -> TimelineConfig:
    values = parse_key_values(text, source)
    values.update({k.replace("-", "_"): str(v) for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


def format_result(result: SimResult) -> str:
    lines = [
        f"n_procs={result.n_procs}",
        f"makespan={result.makespan}",
        f"extended_makespan={result.extended_makespan}",
        f"payload_sum={result.payload_sum}",
        f"serial_time={result.serial_time}",
        f"speedup={result.speedup:.9e}",
        f"payload_std={result.payload_std:.9e}",
    ]
    if result.n_procs > 1:
        lines.append(f"alpha_eff={result.alpha_eff:.9e}")
        lines.append(f"one_minus_alpha_eff={result.one_minus_alpha_eff:.9e}")
    else:
        lines.append("alpha_eff=undefined")
        lines.append("one_minus_alpha_eff=undefined")
    lines.append(f"min_busy={min(result.per_proc_busy):.9e}")
    lines.append(f"max_busy={max(result.per_proc_busy):.9e}")
    return "\n".join(lines) + "\n"
