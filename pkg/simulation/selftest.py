"""
Oracle-equivalence checks, run by ``cli.py selftest``.

Each check compares a closed form against an independent construction on
seeded random draws and prints one status line.
"""

import math
import time
from typing import Callable, List, Tuple

import numpy as np

from qarch_core import (
    Arch,
    ArchParams,
    ChannelKind,
    DensityMatrix,
    GateNoiseTable,
    MemoryParams,
    NoiseChannel,
    avg_fidelity_over_dist,
    avg_fidelity_quadrature,
    avg_post_move_fidelity,
    avg_post_move_fidelity_quadrature,
    boundary_probs,
    build_blocks,
    dd_move_circuit,
    gate_fidelity_bowdrey,
    gate_fidelity_choi_oracle,
    gate_fidelity_closed,
    rate_matrix,
    rate_matrix_from_inverse,
    sd_move_circuit,
    split_levels,
    truncated_stationary,
    waiting_dist_dd,
    waiting_dist_sd,
)


def log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return float(math.exp(rng.uniform(math.log(low), math.log(high))))


def random_memory(rng: np.random.Generator, composite: bool = True) -> MemoryParams:
    t1 = log_uniform(rng, 1e-4, 10.0)
    t2 = t1 * rng.uniform(0.05, 2.0) if composite else log_uniform(rng, 1e-4, 10.0)
    return MemoryParams(T=log_uniform(rng, 1e-4, 10.0), T1=t1, T2=t2)


def random_stable_params(rng: np.random.Generator, arch: Arch = Arch.SD, load: Tuple[float, float] = (0.05, 0.8),
                         mu_e: float = None) -> ArchParams:
    """Rates whose drift condition holds with the offered load drawn from ``load``."""
    mu_e = log_uniform(rng, 1.0, 1e3) if mu_e is None else mu_e
    lambda_m = log_uniform(rng, 10.0, 1e4)
    mu_m = log_uniform(rng, 1e2, 1e4)
    service = 1.0 / mu_e + 1.0 / lambda_m + 1.0 / mu_m
    lambda_e = rng.uniform(*load) / service
    return ArchParams(lambda_e, mu_e, lambda_m, mu_m, arch=arch)


def check_gate_fidelity_forms(rng, draws: int = 200) -> float:
    worst = 0.0
    kinds = list(ChannelKind)
    for _ in range(draws):
        channel = NoiseChannel(kinds[rng.integers(len(kinds))], random_memory(rng))
        t = log_uniform(rng, 1e-6, 50.0)
        closed = gate_fidelity_closed(channel, t)
        worst = max(worst, abs(closed - gate_fidelity_bowdrey(channel, t)),
                    abs(closed - gate_fidelity_choi_oracle(channel, t)))
    return worst


def check_rate_matrix(rng, draws: int = 30) -> float:
    worst = 0.0
    for _ in range(draws):
        p = random_stable_params(rng)
        b = build_blocks(p)
        R = rate_matrix(p)
        residual = np.max(np.abs(b.A2 + R @ b.A1 + R @ R @ b.A0))
        worst = max(worst, residual, np.max(np.abs(R - rate_matrix_from_inverse(p))))
    return worst


def check_boundary_probabilities(rng, draws: int = 5) -> float:
    worst = 0.0
    for _ in range(draws):
        p = random_stable_params(rng, load=(0.05, 0.6))
        sol = boundary_probs(p)
        levels = split_levels(truncated_stationary(p, 200))
        worst = max(worst, abs(levels[0][0] - sol.pi0), np.max(np.abs(levels[1] - sol.pi1)))
    return worst


def check_waiting_averages(rng, draws: int = 40) -> float:
    worst = 0.0
    kinds = list(ChannelKind)
    for i in range(draws):
        p = random_stable_params(rng, Arch.SD if i % 2 == 0 else Arch.DD)
        dist = waiting_dist_sd(p) if p.arch is Arch.SD else waiting_dist_dd(p)
        channel = NoiseChannel(kinds[i % len(kinds)], random_memory(rng))
        worst = max(worst, abs(avg_fidelity_over_dist(dist, channel) - avg_fidelity_quadrature(dist, channel)))
    return worst


def check_post_move_average(rng, draws: int = 20) -> float:
    worst = 0.0
    noise = GateNoiseTable()
    for _ in range(draws):
        m = random_memory(rng)
        lam = log_uniform(rng, 1.0, 1e5)
        worst = max(worst, abs(avg_post_move_fidelity(noise, lam, m).gate
                               - avg_post_move_fidelity_quadrature(noise, lam, m)))
    return worst


def check_ideal_transfer(rng) -> float:
    """Largest 1 − F over basis and random inputs for both noiseless circuits."""
    noiseless = GateNoiseTable.noiseless()
    inputs = [DensityMatrix.basis(0), DensityMatrix.basis(1),
              DensityMatrix(np.full((2, 2), 0.5, dtype=complex)),
              DensityMatrix(np.array([[0.5, -0.5j], [0.5j, 0.5]]))]
    worst = 0.0
    for rho in inputs:
        worst = max(worst, 1.0 - sd_move_circuit(noiseless, rho).transfer_fidelity,
                    1.0 - dd_move_circuit(noiseless, rho, averaged=True).transfer_fidelity)
    worst = max(worst, 1.0 - sd_move_circuit(noiseless).post_move_ent_fidelity,
                1.0 - dd_move_circuit(noiseless, averaged=True).post_move_ent_fidelity)
    return worst


CHECKS: List[Tuple[str, Callable, float]] = [
    ("gate fidelity: closed form vs Pauli sum vs Choi oracle", check_gate_fidelity_forms, 1e-10),
    ("rate matrix: residual and inverse construction", check_rate_matrix, 1e-10),
    ("boundary probabilities vs truncated solve", check_boundary_probabilities, 1e-8),
    ("waiting-time averages: closed form vs quadrature", check_waiting_averages, 1e-9),
    ("post-move average: closed form vs quadrature", check_post_move_average, 1e-10),
    ("noiseless transfer circuits", check_ideal_transfer, 1e-10),
]


def run_all(seed: int = 1) -> bool:
    """Run every check and print a summary"""
    print("=" * 50)
    print("ORACLE EQUIVALENCE SELF TEST")
    print("=" * 50)
    passed = 0
    for name, check, tol in CHECKS:
        start = time.time()
        try:
            deviation = check(np.random.default_rng(seed))
            ok = deviation <= tol
            print(f"{'✅' if ok else '❌'} {name}: max deviation {deviation:.2e} "
                  f"(tol {tol:.0e}, {time.time() - start:.2f}s)")
        except Exception as e:
            ok = False
            print(f"❌ {name}: {e}")
        passed += ok
    print("=" * 50)
    print(f"Results: {passed}/{len(CHECKS)} checks passed")
    return passed == len(CHECKS)
