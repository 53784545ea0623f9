"""
Core data structures for the architecture model.

All rates are in Hz (1/s) and all lifetimes in seconds.
"""

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidParameterError


class Arch(str, Enum):
    """Processor architecture: single device (SD) or double device (DD)."""
    SD = "SD"
    DD = "DD"


def _require_positive(name: str, value: float, allow_inf: bool = False) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    if math.isnan(value) or value <= 0.0:
        raise InvalidParameterError(f"{name} must be strictly positive, got {value}")
    if math.isinf(value) and not allow_inf:
        raise InvalidParameterError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class ArchParams:
    """Queueing rates of one architecture.

    Attributes:
        lambda_e: Entanglement request rate
        mu_e: Entanglement generation rate
        lambda_m: Move request rate
        mu_m: Move completion rate
        lambda_c: Computation request rate (0 disables computations)
        mu_c: Computation rate, ``math.inf`` for instantaneous computations
        arch: Which architecture these rates describe
    """
    lambda_e: float
    mu_e: float
    lambda_m: float
    mu_m: float
    lambda_c: float = 0.0
    mu_c: float = math.inf
    arch: Arch = Arch.SD

    def __post_init__(self):
        _require_positive("lambda_e", self.lambda_e)
        _require_positive("mu_e", self.mu_e)
        _require_positive("lambda_m", self.lambda_m)
        _require_positive("mu_m", self.mu_m)
        _require_positive("mu_c", self.mu_c, allow_inf=True)
        if isinstance(self.lambda_c, bool) or not isinstance(self.lambda_c, (int, float)) \
                or math.isnan(self.lambda_c) or math.isinf(self.lambda_c) or self.lambda_c < 0.0:
            raise InvalidParameterError(f"lambda_c must be finite and non-negative, got {self.lambda_c!r}")
        if not isinstance(self.arch, Arch):
            object.__setattr__(self, "arch", Arch(self.arch))

    @property
    def alpha(self) -> float:
        return self.lambda_e + self.mu_e

    @property
    def beta(self) -> float:
        return self.lambda_e + self.lambda_m

    @property
    def drift_gamma(self) -> float:
        """λe + μm, the third diagonal rate of the level generator."""
        return self.lambda_e + self.mu_m

    @property
    def instant_computation(self) -> bool:
        return math.isinf(self.mu_c)

    def replace(self, **changes) -> "ArchParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MemoryParams:
    """Memory lifetimes of the stored qubits.

    ``T`` parameterizes depolarizing noise, ``T1``/``T2`` amplitude damping and
    dephasing. The composite storage model additionally needs ``T2 <= 2*T1``.
    """
    T: float
    T1: float
    T2: float

    def __post_init__(self):
        _require_positive("T", self.T)
        _require_positive("T1", self.T1)
        _require_positive("T2", self.T2)

    @classmethod
    def from_t1_t2(cls, T1: float, T2: float) -> "MemoryParams":
        # T2 as the depolarizing lifetime is the worst case of the two
        return cls(T=T2, T1=T1, T2=T2)

    @property
    def composite_valid(self) -> bool:
        return self.T2 <= 2.0 * self.T1

    def require_composite(self) -> None:
        if not self.composite_valid:
            raise InvalidParameterError(
                f"composite channel needs T2 <= 2*T1, got T1={self.T1}, T2={self.T2}")

    def replace(self, **changes) -> "MemoryParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GateNoiseTable:
    """Depolarizing probabilities for the NV gate set.

    Defaults reproduce the hardware table used for the state-transfer circuits.
    ``include_electron_init`` adds the electron initialization step in front of
    the single-device move.
    """
    p_electron_init: float = 0.02
    p_carbon_init: float = 0.006 / 4
    p_rz_carbon: float = 0.001 / 3
    p_rx_electron: float = 0.0
    p_rcx: float = 0.005
    p_rcy: float = 0.005
    include_electron_init: bool = False

    def __post_init__(self):
        for field in dataclasses.fields(self):
            if not field.name.startswith("p_"):
                continue
            value = getattr(self, field.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) \
                    or math.isnan(value) or not 0.0 <= value <= 0.25:
                raise InvalidParameterError(f"{field.name} must lie in [0, 1/4], got {value!r}")

    @classmethod
    def noiseless(cls) -> "GateNoiseTable":
        return cls(p_electron_init=0.0, p_carbon_init=0.0, p_rz_carbon=0.0,
                   p_rx_electron=0.0, p_rcx=0.0, p_rcy=0.0)

    def replace(self, **changes) -> "GateNoiseTable":
        return dataclasses.replace(self, **changes)
