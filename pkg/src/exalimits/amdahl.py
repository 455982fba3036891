"""Classic and reinterpreted Amdahl algebra.

All functions work on the parallelizable fraction ``alpha`` and a processor
count ``k``. Where a caller already holds the small quantity ``1 - alpha``
(typical for supercomputers, where it sits between 1e-13 and 1e-1) it should
pass it through the ``one_minus_alpha`` keyword instead of forming
``1 - alpha`` from a value close to one.

``1 - alpha_eff`` is numerically the same as the Karp-Flatt serial fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union


class AmdahlError(ValueError):
    """Base class for model-domain errors."""


class DomainError(AmdahlError):
    pass


class SingularityError(AmdahlError):
    """Raised where the model divides by ``k - 1`` with ``k == 1``."""


class SubSerialEfficiencyError(DomainError):
    """Efficiency below 1/k: the measurement implies a negative alpha."""


class ModelSaturatedError(AmdahlError):
    """The non-parallelizable parts add up to one or more."""


class _Unbounded:
    """Sentinel for a gain with no finite ceiling (``alpha == 1``)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __str__(self) -> str:
        return "unbounded"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()

Gain = Union[float, _Unbounded]


def _check_k(k: float, minimum: int = 1) -> None:
    if not k >= minimum or math.isinf(k):
        raise DomainError(f"processor count must be >= {minimum}, got {k!r}")


def _resolve(alpha: Optional[float], one_minus_alpha: Optional[float]) -> tuple[float, float]:
    if (alpha is None) == (one_minus_alpha is None):
        raise TypeError("give exactly one of alpha or one_minus_alpha")
    if one_minus_alpha is None:
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
        return alpha, 1.0 - alpha
    if not 0.0 <= one_minus_alpha <= 1.0:
        raise DomainError(f"1 - alpha must lie in [0, 1], got {one_minus_alpha!r}")
    return 1.0 - one_minus_alpha, one_minus_alpha


def speedup(alpha: Optional[float] = None, k: float = 1, *, one_minus_alpha: Optional[float] = None) -> float:
    """Amdahl speedup ``k / (k (1 - alpha) + alpha)``."""
    a, oma = _resolve(alpha, one_minus_alpha)
    _check_k(k)
    return k / (k * oma + a)


def efficiency(alpha: Optional[float] = None, k: float = 1, *, one_minus_alpha: Optional[float] = None) -> float:
    """Parallel efficiency ``S / k = 1 / (k (1 - alpha) + alpha)``."""
    a, oma = _resolve(alpha, one_minus_alpha)
    _check_k(k)
    return 1.0 / (k * oma + a)


def alpha_from_speedup(s: float, k: float) -> float:
    """Effective parallelization from a measured speedup on ``k`` processors."""
    if k == 1:
        raise SingularityError("alpha_eff is undefined for k = 1")
    _check_k(k, 2)
    if s > k:
        raise DomainError(f"super-linear speedup {s!r} > k = {k!r} is outside the model")
    if s < 1:
        raise DomainError(f"speedup {s!r} < 1 is outside the model")
    return (k / (k - 1)) * ((s - 1) / s)


def one_minus_alpha_from_efficiency(e: float, k: float) -> float:
    """``(1 - e) / (e (k - 1))``; the stable form for efficiencies near one."""
    if k == 1:
        raise SingularityError("alpha_eff is undefined for k = 1")
    _check_k(k, 2)
    if not 0.0 < e <= 1.0:
        raise DomainError(f"efficiency must lie in (0, 1], got {e!r}")
    if e * k < 1.0:
        raise SubSerialEfficiencyError(
            f"sub-serial efficiency: e*k = {e * k!r} < 1 implies negative alpha"
        )
    return (1.0 - e) / (e * (k - 1))


def alpha_from_efficiency(e: float, k: float) -> float:
    """Effective parallelization ``(e k - 1) / (e (k - 1))``."""
    one_minus_alpha_from_efficiency(e, k)  # domain checks
    return (e * k - 1.0) / (e * (k - 1))


def gain(alpha: Optional[float] = None, *, one_minus_alpha: Optional[float] = None) -> Gain:
    """Performance gain ``1 / (1 - alpha)``, the k -> infinity speedup ceiling.

    Returns :data:`UNBOUNDED` when ``1 - alpha`` is zero.
    """
    _, oma = _resolve(alpha, one_minus_alpha)
    if oma == 0.0:
        return UNBOUNDED
    return 1.0 / oma


@dataclass(frozen=True)
class EffectiveParallelization:
    """An (alpha, k) pair with its derived speedup, efficiency and gain."""

    alpha: float
    k: int
    speedup: float
    efficiency: float
    gain: Gain
    one_minus_alpha: float

    @classmethod
    def from_alpha(cls, alpha: Optional[float] = None, k: int = 2, *, one_minus_alpha: Optional[float] = None):
        a, oma = _resolve(alpha, one_minus_alpha)
        _check_k(k, 2)
        s = speedup(one_minus_alpha=oma, k=k)
        return cls(alpha=a, k=k, speedup=s, efficiency=s / k,
                   gain=gain(one_minus_alpha=oma), one_minus_alpha=oma)

    @classmethod
    def from_speedup(cls, s: float, k: int):
        a = alpha_from_speedup(s, k)
        return cls(alpha=a, k=k, speedup=s, efficiency=s / k,
                   gain=gain(a), one_minus_alpha=1.0 - a)

    @classmethod
    def from_efficiency(cls, e: float, k: int):
        oma = one_minus_alpha_from_efficiency(e, k)
        return cls(alpha=1.0 - oma, k=k, speedup=e * k, efficiency=e,
                   gain=gain(one_minus_alpha=oma), one_minus_alpha=oma)
