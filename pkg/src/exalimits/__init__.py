"""Extended Amdahl model toolkit."""

from .amdahl import (
    UNBOUNDED,
    AmdahlError,
    DomainError,
    EffectiveParallelization,
    ModelSaturatedError,
    SingularityError,
    SubSerialEfficiencyError,
    alpha_from_efficiency,
    alpha_from_speedup,
    efficiency,
    gain,
    one_minus_alpha_from_efficiency,
    speedup,
)

__version__ = "0.1.0"
