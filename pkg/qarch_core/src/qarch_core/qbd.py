"""
Quasi-birth-death model of the entanglement pipeline.

Levels count outstanding entanglement requests. Phases 1-3 are the stages of
the request at the head of the line: generation, waiting for the move request,
and move execution.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg as la

from .errors import InvalidParameterError, StabilityError
from .structs import ArchParams

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
DEFAULT_TRUNCATION_LEVELS = 200


@dataclass(frozen=True, eq=False)
class QbdBlocks:
    B00: float
    B01: np.ndarray  # 1x3
    B10: np.ndarray  # 3x1
    A0: np.ndarray   # level n -> n-1
    A1: np.ndarray   # within level
    A2: np.ndarray   # level n -> n+1


def build_blocks(p: ArchParams) -> QbdBlocks:
    le, me, lm, mm = p.lambda_e, p.mu_e, p.lambda_m, p.mu_m
    A1 = np.array([[-p.alpha, me, 0.0],
                   [0.0, -p.beta, lm],
                   [0.0, 0.0, -p.drift_gamma]])
    A0 = np.zeros((3, 3))
    A0[2, 0] = mm
    return QbdBlocks(
        B00=-le,
        B01=np.array([[le, 0.0, 0.0]]),
        B10=np.array([[0.0], [0.0], [mm]]),
        A0=A0,
        A1=A1,
        A2=le * np.eye(3),
    )


def drift_margin(p: ArchParams) -> float:
    """1/λe − (1/μe + 1/λm + 1/μm); positive means the chain is ergodic."""
    return 1.0 / p.lambda_e - (1.0 / p.mu_e + 1.0 / p.lambda_m + 1.0 / p.mu_m)


def mean_drift_ok(p: ArchParams) -> bool:
    return drift_margin(p) > 0.0


def require_drift(p: ArchParams) -> None:
    margin = drift_margin(p)
    if not margin > 0.0:
        raise StabilityError(
            f"{p.arch.value} chain is not ergodic: 1/lambda_e={1.0 / p.lambda_e:.6g} must exceed "
            f"1/mu_e + 1/lambda_m + 1/mu_m by a positive margin, got {margin:.6g}")


def spectral_radius(m: np.ndarray) -> float:
    return float(np.max(np.abs(la.eigvals(m))))


def rate_matrix(p: ArchParams) -> np.ndarray:
    """Minimal non-negative solution R of A2 + R·A1 + R²·A0 = 0, in closed form."""
    require_drift(p)
    le, me, lm, mm = p.lambda_e, p.mu_e, p.lambda_m, p.mu_m
    beta, gamma = p.beta, p.drift_gamma
    scale = le / (lm * me * mm)
    return scale * np.array([
        [beta * gamma, gamma * me, me * lm],
        [le * (gamma + lm), gamma * me, me * lm],
        [le * beta, le * me, me * lm],
    ])


def rate_matrix_from_inverse(p: ArchParams) -> np.ndarray:
    """R = −A2 (A1 + A2·1·(1,0,0))⁻¹, valid because A0 has rank one."""
    require_drift(p)
    blocks = build_blocks(p)
    correction = blocks.A2 @ np.ones((3, 1)) @ np.array([[1.0, 0.0, 0.0]])
    return -blocks.A2 @ la.inv(blocks.A1 + correction)


@dataclass(frozen=True, eq=False)
class QbdSolution:
    blocks: QbdBlocks
    R: np.ndarray
    pi0: float
    pi1: np.ndarray
    phase1_mass: float
    phase3_mass: float

    @property
    def phase2_mass(self) -> float:
        return 1.0 - self.pi0 - self.phase1_mass - self.phase3_mass

    def level(self, n: int) -> np.ndarray:
        """Stationary probabilities of level ``n`` ≥ 1 (π_n = π_1 R^{n−1})."""
        if n < 1:
            raise InvalidParameterError(f"levels start at 1, got {n}; use pi0 for the empty system")
        return self.pi1 @ np.linalg.matrix_power(self.R, n - 1)

    def tail_masses(self) -> np.ndarray:
        """Σ_{n≥1} π_n, phase by phase, from the geometric tail."""
        return self.pi1 @ la.inv(np.eye(3) - self.R)

    @property
    def mean_requests_in_system(self) -> float:
        inv = la.inv(np.eye(3) - self.R)
        return float(self.pi1 @ inv @ inv @ np.ones(3))


def boundary_probs(p: ArchParams) -> QbdSolution:
    require_drift(p)
    le, me, lm, mm = p.lambda_e, p.mu_e, p.lambda_m, p.mu_m
    delta = lm * me * mm - le * lm * me - le * lm * mm - le * me * mm
    pi0 = delta / (lm * me * mm)
    pi1 = np.array([
        le * p.beta * p.drift_gamma * delta / (lm * me * mm) ** 2,
        le * p.drift_gamma * delta / (lm ** 2 * me * mm ** 2),
        le * delta / (lm * me * mm ** 2),
    ])
    R = rate_matrix(p)
    solution = QbdSolution(blocks=build_blocks(p), R=R, pi0=pi0, pi1=pi1,
                           phase1_mass=le / me, phase3_mass=le / mm)

    total = pi0 + float(solution.tail_masses().sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        logger.warning("QBD normalization off by %.3e for %s", total - 1.0, p)
    return solution


# ---------------------------------------------------------------------------
# Truncated brute-force solve, used as an independent oracle
# ---------------------------------------------------------------------------

def assemble_generator(p: ArchParams, levels: int = DEFAULT_TRUNCATION_LEVELS) -> np.ndarray:
    """Finite generator over levels 0..``levels``; arrivals at the top level are dropped."""
    if levels < 2:
        raise InvalidParameterError(f"need at least two levels, got {levels}")
    b = build_blocks(p)
    size = 1 + 3 * levels
    Q = np.zeros((size, size))
    Q[0, 0] = b.B00
    Q[0, 1:4] = b.B01[0]
    Q[1:4, 0] = b.B10[:, 0]
    for n in range(1, levels + 1):
        lo = 1 + 3 * (n - 1)
        Q[lo:lo + 3, lo:lo + 3] = b.A1 if n < levels else b.A1 + b.A2
        if n < levels:
            Q[lo:lo + 3, lo + 3:lo + 6] = b.A2
        if n > 1:
            Q[lo:lo + 3, lo - 3:lo] = b.A0
    return Q


def truncated_stationary(p: ArchParams, levels: int = DEFAULT_TRUNCATION_LEVELS) -> np.ndarray:
    """Solve πQ = 0, π·1 = 1 on the truncated generator."""
    Q = assemble_generator(p, levels)
    M = Q.copy()
    M[:, 0] = 1.0
    rhs = np.zeros(Q.shape[0])
    rhs[0] = 1.0
    return la.solve(M.T, rhs)


def split_levels(pi: np.ndarray) -> List[np.ndarray]:
    """[π0 as a length-1 array, π1, π2, ...] from a flat truncated vector."""
    return [pi[:1]] + [pi[i:i + 3] for i in range(1, len(pi), 3)]
