#!/usr/bin/env python3
"""
Tests for the architecture fidelities and the SD/DD comparison predicates.
"""

import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), 'simulation'))
sys.path.append(os.path.join(os.path.dirname(__file__), 'qarch_core', 'src'))

import numpy as np
import pytest

from qarch_core import (
    Arch,
    ArchParams,
    ChannelKind,
    HypothesisError,
    InvalidParameterError,
    MemoryParams,
    NoiseChannel,
    StabilityError,
    WaitingTimeDist,
    Winner,
    avg_fidelity_for_arch,
    avg_fidelity_over_dist,
    avg_fidelity_quadrature,
    compare_architectures,
    composite_condition,
    ent_fidelity_from_gate,
    f1_avg,
    f2_avg,
    f_e_premove,
    lemma_inequalities_check,
    move_waiting_dist,
    sd_memory_sufficient_bound,
    waiting_dist_dd,
    waiting_dist_sd,
)
from selftest import log_uniform, random_memory, random_stable_params

DEFAULT_SD = ArchParams(lambda_e=1.0, mu_e=10.0, lambda_m=1000.0, mu_m=1667.0, lambda_c=150.0)
DEFAULT_DD = DEFAULT_SD.replace(mu_m=700.0, arch=Arch.DD)
DEFAULT_MEMORY = MemoryParams.from_t1_t2(0.00286, 0.001)


def _composite(m):
    return NoiseChannel(ChannelKind.COMPOSITE, m)


def _random_pair(rng, mu_m_dd=None):
    """SD and DD rates sharing lambda_e, both stable"""
    mu_e = log_uniform(rng, 1.0, 1e3)
    lambda_m = log_uniform(rng, 10.0, 1e4)
    mu_m_sd = log_uniform(rng, 1e2, 1e4)
    mu_m_dd = log_uniform(rng, 1e2, 1e4) if mu_m_dd is None else mu_m_dd(mu_e)
    worst = max(1 / mu_e + 1 / lambda_m + 1 / mu_m_sd, 1 / mu_e + 1 / lambda_m + 1 / mu_m_dd)
    lambda_e = rng.uniform(0.05, 0.9) / worst
    p_sd = ArchParams(lambda_e, mu_e, lambda_m, mu_m_sd, arch=Arch.SD)
    return p_sd, p_sd.replace(mu_m=mu_m_dd, arch=Arch.DD)


def test_average_over_dist_cases():
    """Test the mixture average on an atom and on Exp(lambda_m)"""
    print("=== Testing Mixture Average ===")
    m = MemoryParams(T=0.3, T1=0.5, T2=0.2)
    for kind in ChannelKind:
        assert abs(avg_fidelity_over_dist(WaitingTimeDist(1.0, ()), NoiseChannel(kind, m)) - 1.0) < 1e-15
    lam = 40.0
    expected = 0.5 + (lam / 6) * (m.T1 / (lam * m.T1 + 1) + 2 * m.T2 / (lam * m.T2 + 1))
    assert abs(avg_fidelity_over_dist(move_waiting_dist(lam), _composite(m)) - expected) < 1e-12
    print("✅ PASS: atom gives 1, Exp(lambda_m) matches the closed expression")


def test_closed_forms_match_generic_average():
    """Test f1/f2 against the generic mixture integral and the quadrature oracle"""
    print("\n=== Testing Closed Forms vs Mixture Integral ===")
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        p_sd, p_dd = _random_pair(rng)
        m = random_memory(rng)
        generic_sd = avg_fidelity_over_dist(waiting_dist_sd(p_sd), _composite(m))
        generic_dd = avg_fidelity_over_dist(waiting_dist_dd(p_dd), _composite(m))
        assert abs(f1_avg(p_sd, m) - generic_sd) < 1e-12
        assert abs(f2_avg(p_dd, m) - generic_dd) < 1e-12
        for p, dist in ((p_sd, waiting_dist_sd(p_sd)), (p_dd, waiting_dist_dd(p_dd))):
            kind = list(ChannelKind)[rng.integers(4)]
            channel = NoiseChannel(kind, m)
            closed = avg_fidelity_for_arch(p, channel)
            worst = max(worst, abs(closed - avg_fidelity_quadrature(dist, channel)))
    assert worst < 1e-9, worst
    print(f"✅ PASS: closed forms exact, quadrature within {worst:.2e}")


def test_default_regime_values():
    """Test the default rates where DD wins"""
    print("\n=== Testing Default Regime ===")
    f1 = f1_avg(DEFAULT_SD, DEFAULT_MEMORY)
    f2 = f2_avg(DEFAULT_DD, DEFAULT_MEMORY)
    assert abs(f1 - 0.9507) < 1e-4
    assert abs(f2 - 0.99964) < 1e-5
    report = compare_architectures(DEFAULT_SD, DEFAULT_DD, DEFAULT_MEMORY, DEFAULT_MEMORY)
    assert report.winner is Winner.DD
    assert report.difference < 0.0
    assert report.f_e_premove == pytest.approx(f_e_premove(1000.0, DEFAULT_MEMORY))
    assert not composite_condition(DEFAULT_SD, DEFAULT_DD, DEFAULT_MEMORY, DEFAULT_MEMORY)
    print(f"✅ PASS: F1={f1:.5f}, F2={f2:.5f}, DD wins")


def test_better_sd_memories_regime():
    """Test the regime with five times longer SD memories"""
    print("\n=== Testing Better SD Memories ===")
    p_sd = ArchParams(50.0, 500.0, 1000.0, 1667.0, arch=Arch.SD)
    p_dd = p_sd.replace(mu_m=700.0, arch=Arch.DD)
    m_sd = MemoryParams.from_t1_t2(10.0, 0.01)
    m_dd = MemoryParams.from_t1_t2(2.0, 0.002)
    assert composite_condition(p_sd, p_dd, m_sd, m_dd)
    report = compare_architectures(p_sd, p_dd, m_sd, m_dd)
    assert report.winner is Winner.SD and report.difference > 0.0
    print(f"✅ PASS: SD wins by {report.difference:.3e}")


def test_limits():
    """Test the no-traffic, perfect-memory and move-rate limits"""
    print("\n=== Testing Limits ===")
    quiet_sd = DEFAULT_SD.replace(lambda_e=1e-12)
    quiet_dd = DEFAULT_DD.replace(lambda_e=1e-12)
    assert abs(f1_avg(quiet_sd, DEFAULT_MEMORY) - 1.0) < 1e-9
    assert abs(f2_avg(quiet_dd, DEFAULT_MEMORY) - 1.0) < 1e-9

    perfect = MemoryParams(T=1e9, T1=1e9, T2=1e9)
    assert abs(f1_avg(DEFAULT_SD, perfect) - 1.0) < 1e-5
    assert abs(f2_avg(DEFAULT_DD, perfect) - 1.0) < 1e-5

    assert f_e_premove(math.inf, DEFAULT_MEMORY) == 1.0
    assert abs(f_e_premove(1e-12, MemoryParams(1.0, 1.0, 1.0)) - 0.25) < 1e-9
    with pytest.raises(InvalidParameterError):
        f_e_premove(0.0, DEFAULT_MEMORY)
    with pytest.raises(StabilityError):
        f1_avg(ArchParams(1.0, 1.0, 1.0, 1.0), DEFAULT_MEMORY)
    print("✅ PASS: fidelity tends to 1 and the pre-move floor is 1/4")


def test_premove_matches_conversion():
    """Test the pre-move entanglement fidelity against the gate-fidelity route"""
    print("\n=== Testing Pre-move Entanglement Fidelity ===")
    rng = np.random.default_rng(5)
    for _ in range(200):
        m = random_memory(rng)
        lam = log_uniform(rng, 1.0, 1e5)
        via_gate = ent_fidelity_from_gate(avg_fidelity_over_dist(move_waiting_dist(lam), _composite(m)), 2)
        assert abs(f_e_premove(lam, m) - via_gate) < 1e-12
    print("✅ PASS: 200 draws agree within 1e-12")


def test_fidelities_bounded():
    """Test that composite averages stay in [1/4, 1]"""
    print("\n=== Testing Fidelity Range ===")
    rng = np.random.default_rng(8)
    for _ in range(500):
        p_sd, p_dd = _random_pair(rng)
        m = random_memory(rng)
        for value in (f1_avg(p_sd, m), f2_avg(p_dd, m), f_e_premove(p_sd.lambda_m, m)):
            assert 0.25 <= value <= 1.0
    print("✅ PASS: 500 draws in range")


def test_dd_wins_with_shared_memory():
    """Test that DD is never worse with shared memories and mu_e <= mu_m(DD)"""
    print("\n=== Testing DD Dominance ===")
    rng = np.random.default_rng(31)
    for _ in range(1000):
        p_sd, p_dd = _random_pair(rng, mu_m_dd=lambda mu_e: mu_e * log_uniform(rng, 1.0, 100.0))
        m = random_memory(rng)
        assert f2_avg(p_dd, m) - f1_avg(p_sd, m) >= -1e-12
        assert not composite_condition(p_sd, p_dd, m, m)
    print("✅ PASS: 1000 draws")


def test_composite_condition_is_comparison():
    """Test that the inequality agrees with comparing f1 and f2 directly"""
    print("\n=== Testing Comparison Inequality ===")
    rng = np.random.default_rng(99)
    checked = sd_wins = 0
    for _ in range(1000):
        p_sd, p_dd = _random_pair(rng)
        m_sd, m_dd = random_memory(rng), random_memory(rng)
        f1, f2 = f1_avg(p_sd, m_sd), f2_avg(p_dd, m_dd)
        if abs(f1 - f2) < 1e-12:
            continue
        assert composite_condition(p_sd, p_dd, m_sd, m_dd) == (f1 > f2)
        checked += 1
        sd_wins += f1 > f2
    assert checked > 990 and 0 < sd_wins < checked

    with pytest.raises(InvalidParameterError):
        composite_condition(DEFAULT_SD, DEFAULT_DD.replace(lambda_e=2.0), DEFAULT_MEMORY, DEFAULT_MEMORY)
    print(f"✅ PASS: {checked} draws, SD ahead in {sd_wins}")


def _hypothesis_pair(rng):
    mu_e = log_uniform(rng, 2.0, 200.0)
    mu_m_dd = mu_e * log_uniform(rng, 1.1, 20.0)
    mu_m_sd = mu_m_dd * log_uniform(rng, 1.1, 20.0)
    lambda_m = log_uniform(rng, 10.0, 1e4)
    worst = 1 / mu_e + 1 / lambda_m + 1 / mu_m_dd
    lambda_e = rng.uniform(0.05, 0.9) / worst
    p_sd = ArchParams(lambda_e, mu_e, lambda_m, mu_m_sd, arch=Arch.SD)
    return p_sd, p_sd.replace(mu_m=mu_m_dd, arch=Arch.DD)


def test_sufficient_memory_bound():
    """Test that SD memories above the bound always win"""
    print("\n=== Testing Sufficient SD Memory Bound ===")
    rng = np.random.default_rng(2718)
    for _ in range(500):
        p_sd, p_dd = _hypothesis_pair(rng)
        t1_dd = log_uniform(rng, 1e-4, 1.0)
        m_dd = MemoryParams.from_t1_t2(t1_dd, t1_dd * rng.uniform(0.05, 1.0))
        bound = sd_memory_sufficient_bound(p_sd, p_dd, t1_dd)
        t2_sd = max(bound, 0.0) * (1.0 + rng.uniform(0.01, 1.0)) + 1e-6
        m_sd = MemoryParams.from_t1_t2(t2_sd * (1.0 + rng.uniform(0.0, 10.0)), t2_sd)
        assert composite_condition(p_sd, p_dd, m_sd, m_dd), f"bound {bound} for {p_sd}, {p_dd}"
    print("✅ PASS: 500 draws above the bound favour SD")


def test_bound_shape_and_hypothesis():
    """Test the monotonicity of the bound and its preconditions"""
    print("\n=== Testing Bound Shape ===")
    p_sd = ArchParams(1.0, 10.0, 1000.0, 1667.0, arch=Arch.SD)
    p_dd = p_sd.replace(mu_m=700.0, arch=Arch.DD)
    t1_values = [1e-4, 1e-3, 1e-2, 1e-1]
    bounds = [sd_memory_sufficient_bound(p_sd, p_dd, t) for t in t1_values]
    assert all(a < b for a, b in zip(bounds, bounds[1:]))

    by_mu_e = [sd_memory_sufficient_bound(p_sd.replace(mu_e=mu_e), p_dd.replace(mu_e=mu_e), 1e-3)
               for mu_e in (2.0, 5.0, 20.0, 100.0, 500.0)]
    assert all(a > b for a, b in zip(by_mu_e, by_mu_e[1:]))

    printed = sd_memory_sufficient_bound(p_sd, p_dd, 1e-3, printed_form=True)
    assert printed < sd_memory_sufficient_bound(p_sd, p_dd, 1e-3)

    with pytest.raises(HypothesisError):
        sd_memory_sufficient_bound(p_sd.replace(mu_e=0.5), p_dd.replace(mu_e=0.5), 1e-3)
    with pytest.raises(HypothesisError):
        sd_memory_sufficient_bound(p_sd, p_dd.replace(mu_m=2000.0), 1e-3)
    with pytest.raises(InvalidParameterError):
        sd_memory_sufficient_bound(p_sd, p_dd, 0.0)
    print("✅ PASS: increasing in T1(DD), decreasing in mu_e, printed form smaller")


def test_lemma_inequalities():
    """Test both auxiliary inequalities on random positive draws"""
    print("\n=== Testing Auxiliary Inequalities ===")
    rng = np.random.default_rng(4)
    for _ in range(10_000):
        a, b, y = (log_uniform(rng, 1e-2, 1e2) for _ in range(3))
        x = y * (1.0 + rng.uniform(0.01, 10.0))
        first, second = lemma_inequalities_check(a, b, x, y)
        assert first and second, (a, b, x, y)
    assert lemma_inequalities_check(2.0, 3.0, 1.5, 1.5)[0] is False
    assert lemma_inequalities_check(2.0, 2.0, 1.5, 0.5)[1] is True
    with pytest.raises(InvalidParameterError):
        lemma_inequalities_check(-1.0, 1.0, 1.0, 1.0)
    print("✅ PASS: 10000 draws, strict at x = y and a = b")


def main():
    """Run all fidelity tests"""
    print("🧪 FIDELITY EVALUATION TESTS")
    print("=" * 50)
    tests = [
        test_average_over_dist_cases,
        test_closed_forms_match_generic_average,
        test_default_regime_values,
        test_better_sd_memories_regime,
        test_limits,
        test_premove_matches_conversion,
        test_fidelities_bounded,
        test_dd_wins_with_shared_memory,
        test_composite_condition_is_comparison,
        test_sufficient_memory_bound,
        test_bound_shape_and_hypothesis,
        test_lemma_inequalities,
    ]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            failed += 1
            print(f"❌ FAIL: {test.__name__}: {e}")
    print("\n" + "=" * 50)
    print(f"Results: {len(tests) - failed}/{len(tests)} passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
