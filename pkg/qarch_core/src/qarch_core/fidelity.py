"""
Average gate fidelities of both architectures and the SD/DD comparison predicates.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from scipy import integrate

from .errors import HypothesisError, InvalidParameterError
from .kernel import ChannelKind, NoiseChannel, fidelity_terms
from .qbd import require_drift
from .structs import Arch, ArchParams, MemoryParams
from .waiting import WaitingTimeDist, waiting_dist_dd, waiting_dist_sd

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
QUAD_EPSABS = 1e-11
QUAD_CUTOFF = 50.0


class Winner(str, Enum):
    SD = "SD"
    DD = "DD"
    TIE = "Tie"


@dataclass(frozen=True)
class FidelityReport:
    f_avg_sd: float
    f_avg_dd: float
    f_e_premove: float
    f_e_premove_dd: float
    winner: Winner

    @property
    def difference(self) -> float:
        """F_avg(SD) − F_avg(DD); negative when DD wins."""
        return self.f_avg_sd - self.f_avg_dd


def avg_fidelity_over_dist(dist: WaitingTimeDist, channel: NoiseChannel) -> float:
    """Average gate fidelity over the waiting-time distribution, in closed form.

    Each exponential term of F(t) integrates against each mixture component
    to a rate-shifted fraction, which is exactly the Laplace transform of the
    distribution evaluated at the term's decay rate.
    """
    terms = fidelity_terms(channel)
    value = terms.constant * dist.total_mass()
    for weight, decay in terms.terms:
        value += weight * dist.laplace(decay)
    return float(value)


def avg_fidelity_quadrature(dist: WaitingTimeDist, channel: NoiseChannel) -> float:
    """Same average by adaptive quadrature on [0, 50/min_rate]."""
    terms = fidelity_terms(channel)
    value = dist.atom_at_zero * terms.evaluate(0.0)
    if not dist.components:
        return float(value)
    upper = QUAD_CUTOFF / dist.min_rate
    for coef, rate in dist.components:
        breaks = [1.0 / (rate + decay) for _, decay in terms.terms if 1.0 / (rate + decay) < upper]
        part, _ = integrate.quad(lambda t: coef * math.exp(-rate * t) * terms.evaluate(t),
                                 0.0, upper, epsabs=QUAD_EPSABS, epsrel=1e-12,
                                 limit=500, points=breaks or None)
        value += part
    return float(value)


def _x_over(rate: float, lifetime: float) -> float:
    """lifetime/(rate·lifetime + 1) = ∫ e^{−rate·t} e^{−t/lifetime} dt."""
    return lifetime / (rate * lifetime + 1.0)


def f1_avg(p: ArchParams, m: MemoryParams) -> float:
    """SD average gate fidelity under composite storage noise."""
    require_drift(p)
    le, me, mm = p.lambda_e, p.mu_e, p.mu_m
    return (1.0 - (le / 2.0) * (1.0 / me + 1.0 / mm)
            + (le / 6.0) * (2.0 * _x_over(me, m.T2) + _x_over(me, m.T1)
                            + 2.0 * _x_over(mm, m.T2) + _x_over(mm, m.T1)))


def f2_avg(p: ArchParams, m: MemoryParams) -> float:
    """DD average gate fidelity under composite storage noise."""
    require_drift(p)
    le, mm = p.lambda_e, p.mu_m
    return 1.0 - le / (2.0 * mm) + (le / 6.0) * (2.0 * _x_over(mm, m.T2) + _x_over(mm, m.T1))


def f_e_premove(lambda_m: float, m: MemoryParams) -> float:
    """Entanglement fidelity of a fresh pair half after waiting Exp(λm) in composite noise."""
    if not (lambda_m > 0.0):
        raise InvalidParameterError(f"lambda_m must be positive, got {lambda_m}")
    if math.isinf(lambda_m):
        return 1.0
    return 0.25 + (lambda_m / 4.0) * (_x_over(lambda_m, m.T1) + 2.0 * _x_over(lambda_m, m.T2))


def avg_fidelity_for_arch(p: ArchParams, channel: NoiseChannel) -> float:
    """Average gate fidelity of computations for any of the four channels."""
    dist = waiting_dist_sd(p) if p.arch is Arch.SD else waiting_dist_dd(p)
    return avg_fidelity_over_dist(dist, channel)


def _shared_lambda_e(p_sd: ArchParams, p_dd: ArchParams) -> None:
    if not math.isclose(p_sd.lambda_e, p_dd.lambda_e, rel_tol=1e-12):
        raise InvalidParameterError(
            f"architectures must share lambda_e to be compared, got {p_sd.lambda_e} and {p_dd.lambda_e}")


def composite_condition(p_sd: ArchParams, p_dd: ArchParams, m_sd: MemoryParams, m_dd: MemoryParams) -> bool:
    """True iff the SD architecture has the higher average gate fidelity."""
    require_drift(p_sd)
    require_drift(p_dd)
    _shared_lambda_e(p_sd, p_dd)
    me, mm1, mm2 = p_sd.mu_e, p_sd.mu_m, p_dd.mu_m
    lhs = 1.0 / me + 1.0 / mm1 - (2.0 * _x_over(me, m_sd.T2) + _x_over(me, m_sd.T1)
                                  + 2.0 * _x_over(mm1, m_sd.T2) + _x_over(mm1, m_sd.T1)) / 3.0
    rhs = 1.0 / mm2 - (2.0 * _x_over(mm2, m_dd.T2) + _x_over(mm2, m_dd.T1)) / 3.0
    return lhs < rhs


def sd_memory_sufficient_bound(p_sd: ArchParams, p_dd: ArchParams, t1_dd: float,
                               printed_form: bool = False) -> float:
    """T2 threshold above which an SD memory is guaranteed to beat the DD one.

    ``printed_form=True`` returns the expression without the square on
    (μe + μm⁽¹⁾); under the hypothesis it is smaller than the derived threshold
    and not sufficient on its own.
    """
    me, mm1, mm2 = p_sd.mu_e, p_sd.mu_m, p_dd.mu_m
    if not me > 1.0:
        raise HypothesisError(f"mu_e must exceed 1 s^-1, got {me}")
    if not me < mm2 < mm1:
        raise HypothesisError(f"need mu_e < mu_m(DD) < mu_m(SD), got {me}, {mm2}, {mm1}")
    if not t1_dd > 0.0:
        raise InvalidParameterError(f"T1 of the DD memory must be positive, got {t1_dd}")
    total = me + mm1
    product = me * mm1
    spread = total if printed_form else total ** 2
    return mm2 * (mm2 * t1_dd + 1.0) * spread / product ** 2 - total / (math.sqrt(2.0) * product)


def lemma_inequalities_check(a: float, b: float, x: float, y: float) -> Tuple[bool, bool]:
    """Truth of x/(ax+1) > y/(ay+1) and of 1/(a(ax+1)) + 1/(b(bx+1)) < 2/(c(cx+1)), c = √2ab/(a+b)."""
    if min(a, b, x, y) <= 0.0:
        raise InvalidParameterError("all arguments must be positive")
    first = x / (a * x + 1.0) > y / (a * y + 1.0)
    c = math.sqrt(2.0) * a * b / (a + b)
    second = 1.0 / (a * (a * x + 1.0)) + 1.0 / (b * (b * x + 1.0)) < 2.0 / (c * (c * x + 1.0))
    return first, second


def compare_architectures(p_sd: ArchParams, p_dd: ArchParams,
                          m_sd: MemoryParams, m_dd: MemoryParams) -> FidelityReport:
    f_sd = f1_avg(p_sd, m_sd)
    f_dd = f2_avg(p_dd, m_dd)
    if abs(f_sd - f_dd) < TIE_TOL:
        winner = Winner.TIE
    else:
        winner = Winner.SD if f_sd > f_dd else Winner.DD
    report = FidelityReport(
        f_avg_sd=f_sd,
        f_avg_dd=f_dd,
        f_e_premove=f_e_premove(p_sd.lambda_m, m_sd),
        f_e_premove_dd=f_e_premove(p_dd.lambda_m, m_dd),
        winner=winner,
    )
    logger.debug("SD %.12f vs DD %.12f -> %s", f_sd, f_dd, winner.value)
    return report


def composite_channel(m: MemoryParams) -> NoiseChannel:
    return NoiseChannel(ChannelKind.COMPOSITE, m)

