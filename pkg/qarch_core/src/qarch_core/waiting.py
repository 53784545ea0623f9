"""
Waiting-time distributions of computations and of freshly entangled qubits.

Every distribution is a point mass at zero plus a finite mixture of
exponential densities, which keeps fidelity averages in closed form.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import EmptySampleError, InvalidParameterError, StabilityError
from .qbd import require_drift
from .structs import ArchParams

MASS_TOL = 1e-12


@dataclass(frozen=True)
class WaitingTimeDist:
    """Density atom·δ(t) + Σ coefficient·exp(−rate·t) on t ≥ 0."""
    atom_at_zero: float
    components: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((float(c), float(r)) for c, r in self.components))
        for coef, rate in self.components:
            if not (rate > 0.0 and math.isfinite(rate)):
                raise InvalidParameterError(f"component rate must be positive, got {rate}")
            if coef < 0.0:
                raise InvalidParameterError(f"component coefficient must be non-negative, got {coef}")
        if not -MASS_TOL <= self.atom_at_zero <= 1.0 + MASS_TOL:
            raise InvalidParameterError(f"atom at zero must lie in [0, 1], got {self.atom_at_zero}")
        if abs(self.total_mass() - 1.0) > MASS_TOL:
            raise InvalidParameterError(f"distribution mass is {self.total_mass()!r}, expected 1")

    def total_mass(self) -> float:
        return self.atom_at_zero + sum(c / r for c, r in self.components)

    @property
    def mean(self) -> float:
        return sum(c / r ** 2 for c, r in self.components)

    @property
    def min_rate(self) -> float:
        return min(r for _, r in self.components) if self.components else math.inf

    def pdf(self, t):
        """Continuous part of the density."""
        t = np.asarray(t, dtype=float)
        value = sum(c * np.exp(-r * t) for c, r in self.components) if self.components else np.zeros_like(t)
        return np.where(t >= 0.0, value, 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        value = self.atom_at_zero + sum((c / r) * (1.0 - np.exp(-r * t)) for c, r in self.components)
        return np.where(t >= 0.0, value, 0.0)

    def laplace(self, s: float) -> float:
        """E[exp(−s·W)]."""
        return self.atom_at_zero + sum(c / (r + s) for c, r in self.components)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        weights = np.array([max(self.atom_at_zero, 0.0)] + [c / r for c, r in self.components])
        choice = rng.choice(len(weights), size=size, p=weights / weights.sum())
        out = np.zeros(size)
        for idx, (_, rate) in enumerate(self.components, start=1):
            mask = choice == idx
            out[mask] = rng.exponential(1.0 / rate, size=int(mask.sum()))
        return out

    def ks_distance(self, samples) -> float:
        """Kolmogorov–Smirnov distance, accounting for the jump at zero."""
        x = np.sort(np.asarray(samples, dtype=float))
        if x.size == 0:
            raise EmptySampleError("no samples to compare")
        values, counts = np.unique(x, return_counts=True)
        upper = np.cumsum(counts) / x.size
        lower = upper - counts / x.size
        model_upper = self.cdf(values)
        model_lower = model_upper - np.where(values == 0.0, self.atom_at_zero, 0.0)
        return float(max(np.max(np.abs(upper - model_upper)), np.max(np.abs(lower - model_lower))))


def waiting_dist_sd(p: ArchParams) -> WaitingTimeDist:
    """Computation waiting time when one device serializes networking and computing."""
    require_drift(p)
    blocked = p.lambda_e / p.mu_e + p.lambda_e / p.mu_m
    if blocked > 1.0:
        raise StabilityError(f"blocked fraction {blocked} exceeds one")
    return WaitingTimeDist(1.0 - blocked, ((p.lambda_e, p.mu_e), (p.lambda_e, p.mu_m)))


def waiting_dist_dd(p: ArchParams) -> WaitingTimeDist:
    """Computation waiting time when only state transfers block the computing device."""
    require_drift(p)
    blocked = p.lambda_e / p.mu_m
    if blocked > 1.0:
        raise StabilityError(f"blocked fraction {blocked} exceeds one")
    return WaitingTimeDist(1.0 - blocked, ((p.lambda_e, p.mu_m),))


def move_waiting_dist(lambda_m: float) -> WaitingTimeDist:
    """Time a newly entangled qubit waits for its move request: Exp(λm)."""
    if not (lambda_m > 0.0 and math.isfinite(lambda_m)):
        raise InvalidParameterError(f"lambda_m must be positive, got {lambda_m}")
    return WaitingTimeDist(0.0, ((lambda_m, lambda_m),))
