#!/usr/bin/env python3
"""
Statistical tests of the discrete-event simulator against the analytic model.
"""

import math
import os
import sys
import tempfile

sys.path.append(os.path.join(os.path.dirname(__file__), 'simulation'))
sys.path.append(os.path.join(os.path.dirname(__file__), 'qarch_core', 'src'))

import numpy as np
import pytest

from qarch_core import (
    Arch,
    ArchParams,
    ChannelKind,
    EmptySampleError,
    InvalidParameterError,
    MemoryParams,
    NoiseChannel,
    SimulationInvariantError,
    f1_avg,
    f2_avg,
    f_e_premove,
    move_waiting_dist,
    waiting_dist_dd,
    waiting_dist_sd,
)
from run_simulation import (
    COMP,
    GEN,
    MOVE,
    ArchitectureSimulation,
    ArrivalScript,
    SimConfig,
    SimResult,
    _ActivityMonitor,
    batch_means_stderr,
    estimate_fidelities,
    run_replications,
    simulate,
    write_samples_csv,
)

DEFAULT_SD = ArchParams(lambda_e=1.0, mu_e=10.0, lambda_m=1000.0, mu_m=1667.0, lambda_c=150.0)
DEFAULT_DD = DEFAULT_SD.replace(mu_m=700.0, arch=Arch.DD)
MEMORY = MemoryParams.from_t1_t2(0.00286, 0.001)


def _cfg(params, duration=20_000.0, seed=1, **kwargs):
    return SimConfig(params, MEMORY, duration, seed, **kwargs)


def test_phase_fractions():
    """Test head-of-line phase occupancy against lambda_e/mu per phase"""
    print("=== Testing Phase Fractions ===")
    for params in (DEFAULT_SD, DEFAULT_DD):
        result = simulate(_cfg(params))
        expected = np.array([params.lambda_e / params.mu_e,
                             params.lambda_e / params.lambda_m,
                             params.lambda_e / params.mu_m])
        assert np.all(np.abs(result.phase_time_fractions - expected) < 0.1 * expected), \
            (params.arch, result.phase_time_fractions, expected)
        assert abs(result.idle_fraction + result.phase_time_fractions.sum() - 1.0) < 1e-9
        print(f"  {params.arch.value}: {np.round(result.phase_time_fractions, 5)}")
    print("✅ PASS: within 10% of the analytic phase masses")


def test_waiting_times_match_distributions():
    """Test simulated waits against the analytic CDFs"""
    print("\n=== Testing Waiting-Time Distributions ===")
    for params, dist in ((DEFAULT_SD, waiting_dist_sd(DEFAULT_SD)), (DEFAULT_DD, waiting_dist_dd(DEFAULT_DD))):
        result = simulate(_cfg(params))
        comp_ks = dist.ks_distance(result.comp_wait_samples)
        assert comp_ks < 0.01, (params.arch, comp_ks)

        moves = simulate(_cfg(params.replace(lambda_c=0.0), duration=100_000.0, seed=2))
        assert moves.move_wait_samples.size > 90_000
        move_ks = move_waiting_dist(params.lambda_m).ks_distance(moves.move_wait_samples)
        assert move_ks < 0.01, (params.arch, move_ks)
        print(f"  {params.arch.value}: KS comp {comp_ks:.4f}, move {move_ks:.4f}")
    print("✅ PASS: computation and move waits follow the analytic laws")


def test_fidelity_estimates_match_closed_forms():
    """Test sample-mean fidelities against the closed forms within 3 sigma"""
    print("\n=== Testing Fidelity Estimates ===")
    for params, analytic in ((DEFAULT_SD, f1_avg), (DEFAULT_DD, f2_avg)):
        result = simulate(_cfg(params))
        est = result.f_avg_estimate
        expected = analytic(params, MEMORY)
        assert abs(est.value - expected) <= 3 * est.sigma, (params.arch, est, expected)
        f_e = result.f_e_estimate
        assert abs(f_e.value - f_e_premove(params.lambda_m, MEMORY)) <= 3 * f_e.sigma
        print(f"  {params.arch.value}: {est} vs {expected:.8f}")
    print("✅ PASS: both architectures agree")


def test_run_conservation_and_empty_computations():
    """Test request conservation and a run without computations"""
    print("\n=== Testing Conservation ===")
    result = simulate(_cfg(DEFAULT_SD.replace(lambda_c=0.0), duration=2_000.0))
    assert result.ent_arrived == result.ent_completed + result.ent_in_system
    assert result.comp_wait_samples.size == 0
    assert result.f_avg_estimate is None
    assert result.move_wait_samples.size > 0
    assert result.mean_queue_length > 0.0
    f_e = result.f_e_estimate
    assert f_e is not None and f_e.samples == result.move_wait_samples.size
    assert abs(f_e.value - f_e_premove(DEFAULT_SD.lambda_m, MEMORY)) <= 4 * f_e.sigma
    print(f"✅ PASS: {result.ent_arrived} requests accounted for, no computations, F_e {f_e}")


def _scripted(arch, script):
    params = DEFAULT_SD.replace(mu_c=1.0, arch=arch)
    sim = ArchitectureSimulation(_cfg(params, duration=10.0, warmup_fraction=0.0), script=script)
    return sim, sim.run()


def _starts(trace):
    return [(kind, t) for t, kind, edge in trace if edge == "start"]


def test_move_overtakes_queued_computations():
    """Test that a DD move waits for the computation in service, then jumps the queue"""
    print("\n=== Testing Move Priority Without Preemption ===")
    script = ArrivalScript(ent_arrivals=(0.05,), comp_arrivals=(0.0, 0.1, 0.2),
                           generation=0.1, move_request=0.1, move=0.5, computation=1.0)
    sim, result = _scripted(Arch.DD, script)
    starts = _starts(sim.trace)
    assert [k for k, _ in starts] == [COMP, MOVE, COMP, COMP]
    assert [t for _, t in starts] == pytest.approx([0.0, 1.0, 1.5, 2.5])
    # the computation in service finishes before the move takes the device
    stop = next(i for i, (_, kind, edge) in enumerate(sim.trace) if kind == COMP and edge == "stop")
    move = next(i for i, (_, kind, _) in enumerate(sim.trace) if kind == MOVE)
    assert stop < move
    assert sim.trace[stop][0] == pytest.approx(1.0) and sim.trace[move][0] == pytest.approx(1.0)
    assert list(result.comp_wait_samples) == pytest.approx([0.0, 1.4, 2.3])
    assert list(result.move_wait_samples) == pytest.approx([0.85])
    assert result.ent_completed == 1 and result.ent_in_system == 0
    print(f"✅ PASS: {starts}")


def test_sd_generation_queues_with_computations():
    """Test that SD generation waits its FIFO turn while moves still go first"""
    print("\n=== Testing SD Generation Blocking ===")
    script = ArrivalScript(ent_arrivals=(0.2,), comp_arrivals=(0.0, 0.1, 0.5, 2.35),
                           generation=0.3, move_request=0.1, move=0.5, computation=1.0)
    sim, result = _scripted(Arch.SD, script)
    starts = _starts(sim.trace)
    assert [k for k, _ in starts] == [COMP, COMP, GEN, COMP, MOVE, COMP]
    assert [t for _, t in starts] == pytest.approx([0.0, 1.0, 2.0, 2.3, 3.3, 3.8])
    assert list(result.comp_wait_samples) == pytest.approx([0.0, 0.9, 1.8, 1.45])
    assert list(result.move_wait_samples) == pytest.approx([1.0])
    # the device is handed over without idling while work is queued
    stops = [t for t, _, edge in sim.trace if edge == "stop"]
    assert all(t == pytest.approx(stop) for stop, (_, t) in zip(stops, starts[1:]))
    print(f"✅ PASS: {starts}")


def test_instant_computations_with_script():
    """Test bulk computations against scripted blocking intervals"""
    print("\n=== Testing Scripted Instant Computations ===")
    # SD blocks over [1.0, 1.25] and [1.3, 1.5]; DD over the move only
    script = ArrivalScript(ent_arrivals=(1.0,), comp_arrivals=(0.5, 1.2, 1.28, 1.4, 2.0),
                           generation=0.25, move_request=0.05, move=0.2, computation=0.0)
    for arch, expected in ((Arch.SD, [0.0, 0.05, 0.0, 0.1, 0.0]), (Arch.DD, [0.0, 0.0, 0.0, 0.1, 0.0])):
        params = DEFAULT_SD.replace(arch=arch)
        sim = ArchitectureSimulation(_cfg(params, duration=10.0, warmup_fraction=0.0), script=script)
        result = sim.run()
        assert list(result.comp_wait_samples) == pytest.approx(expected), arch
        assert result.comp_arrived == 5
    print("✅ PASS: waits end at the unblock instant")


def test_invalid_arrival_script():
    """Test that unsorted or negative scripted inputs are rejected"""
    print("\n=== Testing Invalid Arrival Script ===")
    with pytest.raises(InvalidParameterError):
        ArrivalScript((1.0, 0.5), (), 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(InvalidParameterError):
        ArrivalScript((), (-1.0,), 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(InvalidParameterError):
        ArrivalScript((), (), -0.1, 0.1, 0.1, 0.1)
    print("✅ PASS")


def test_activity_monitor():
    """Test the overlap rules of each architecture"""
    print("\n=== Testing Activity Monitor ===")
    sd = _ActivityMonitor(Arch.SD)
    sd.start(GEN, 0.0)
    with pytest.raises(SimulationInvariantError):
        sd.start(COMP, 0.1)
    dd = _ActivityMonitor(Arch.DD)
    dd.start(COMP, 0.0)
    with pytest.raises(SimulationInvariantError):
        dd.start(MOVE, 0.1)
    dd.stop(COMP)
    dd.start(MOVE, 0.2)
    print("✅ PASS")


def test_queue_length_stabilizes():
    """Test that the time-averaged queue settles by 1e5 seconds"""
    print("\n=== Testing Queue Stabilization ===")
    for params in (DEFAULT_SD, DEFAULT_DD):
        result = simulate(_cfg(params.replace(lambda_c=0.0), duration=100_000.0, seed=6))
        series = result.queue_length_timeseries
        n = series.size
        middle = series[n // 4: 3 * n // 4].mean()
        last = series[n // 2:].mean()
        assert abs(last - middle) <= 0.1 * middle, (params.arch, last, middle)
        print(f"  {params.arch.value}: middle {middle:.5f}, last {last:.5f}")
    print("✅ PASS: last-half mean within 10% of the middle-half mean")


def test_finite_computation_rate():
    """Test finite service rates with move priority"""
    print("\n=== Testing Finite Computation Rate ===")
    for params in (DEFAULT_SD, DEFAULT_DD):
        result = simulate(_cfg(params.replace(mu_c=1e5), duration=500.0))
        assert result.comp_wait_samples.size > 0
        assert np.all(result.comp_wait_samples >= 0.0)
        assert result.ent_arrived == result.ent_completed + result.ent_in_system
    print("✅ PASS: no overlapping activities at mu_c = 1e5")


def test_determinism_and_streams():
    """Test that seeds and stream indices fix the random draws"""
    print("\n=== Testing Determinism ===")
    cfg = _cfg(DEFAULT_SD, duration=1_000.0)
    a, b = simulate(cfg), simulate(cfg)
    assert np.array_equal(a.comp_wait_samples, b.comp_wait_samples)
    assert np.array_equal(a.move_wait_samples, b.move_wait_samples)
    other = simulate(cfg, stream_index=1)
    assert not np.array_equal(a.move_wait_samples, other.move_wait_samples)

    replicated = _cfg(DEFAULT_SD, duration=1_000.0, replications=2)
    serial = run_replications(replicated, workers=1)
    parallel = run_replications(replicated, workers=2)
    for s, p in zip(serial.results, parallel.results):
        assert np.array_equal(s.comp_wait_samples, p.comp_wait_samples)
    assert serial.f_avg.value == parallel.f_avg.value
    assert np.array_equal(serial.results[0].move_wait_samples, a.move_wait_samples)
    print("✅ PASS: same seed, same draws; worker count does not matter")


def test_standard_error_shrinks():
    """Test that doubling the duration shrinks the error by about 1/sqrt(2)"""
    print("\n=== Testing Standard Error Scaling ===")
    short = simulate(_cfg(DEFAULT_SD, duration=5_000.0)).f_avg_estimate
    long = simulate(_cfg(DEFAULT_SD, duration=10_000.0)).f_avg_estimate
    ratio = long.stderr / short.stderr
    assert abs(ratio - 1 / math.sqrt(2)) < 0.1, ratio
    print(f"✅ PASS: ratio {ratio:.3f}")


def test_statistics_helpers():
    """Test batch means, empty samples and the samples file"""
    print("\n=== Testing Statistics Helpers ===")
    assert batch_means_stderr(np.array([1.0])) == math.inf
    small = np.array([1.0, 2.0, 3.0, 4.0])
    assert batch_means_stderr(small) == pytest.approx(small.std(ddof=1) / 2.0)
    rng = np.random.default_rng(0)
    iid = rng.standard_normal(100_000)
    naive = iid.std(ddof=1) / math.sqrt(iid.size)
    assert 0.7 * naive < batch_means_stderr(iid) < 1.3 * naive

    empty = SimResult(Arch.SD, np.array([]), np.array([]), np.zeros(2), np.zeros(3), np.zeros(3),
                      1.0, 1.0, 0, 0, 0, 0)
    with pytest.raises(EmptySampleError):
        estimate_fidelities(empty, NoiseChannel(ChannelKind.COMPOSITE, MEMORY))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "waits.csv")
        samples = [0.0, 0.125, 1e-3]
        assert write_samples_csv(samples, path) == 3
        with open(path, encoding="utf-8") as f:
            assert [float(line) for line in f] == samples
    print("✅ PASS: fallbacks, empty samples and file output")


def test_invalid_sim_config():
    """Test SimConfig validation"""
    print("\n=== Testing Invalid SimConfig ===")
    for bad in (dict(duration=0.0), dict(duration=math.inf), dict(seed=-1), dict(seed=True),
                dict(replications=0), dict(warmup_fraction=1.0), dict(batches=1)):
        kwargs = dict(duration=10.0, seed=1)
        kwargs.update(bad)
        duration, seed = kwargs.pop("duration"), kwargs.pop("seed")
        with pytest.raises(InvalidParameterError):
            SimConfig(DEFAULT_SD, MEMORY, duration, seed, **kwargs)
    assert _cfg(DEFAULT_SD, channel="dephasing").channel is ChannelKind.DEPHASING
    print("✅ PASS: invalid settings rejected")


@pytest.mark.slow
def test_long_run_fidelity():
    """Test a million computations per architecture in both rate regimes"""
    print("\n=== Testing Long Runs ===")
    fast = DEFAULT_SD.replace(lambda_e=50.0, mu_e=500.0)
    regimes = ((DEFAULT_SD, DEFAULT_DD), (fast, fast.replace(mu_m=700.0, arch=Arch.DD)))
    for p_sd, p_dd in regimes:
        for params, analytic in ((p_sd, f1_avg), (p_dd, f2_avg)):
            result = simulate(_cfg(params, duration=7_500.0, seed=3))
            assert result.comp_wait_samples.size > 1_000_000
            est = result.f_avg_estimate
            assert abs(est.value - analytic(params, MEMORY)) <= 3 * est.sigma, (params, est)
            print(f"  {params.arch.value} at lambda_e={params.lambda_e:g}: {est}")
    print("✅ PASS: within 3 sigma")


@pytest.mark.slow
def test_long_run_phase_masses():
    """Test the generation and move phase masses within 3 sigma"""
    print("\n=== Testing Long-run Phase Masses ===")
    params = DEFAULT_SD.replace(lambda_c=0.0)
    result = simulate(_cfg(params, duration=100_000.0, seed=4))
    for phase, expected in ((0, params.lambda_e / params.mu_e), (2, params.lambda_e / params.mu_m)):
        observed = result.phase_time_fractions[phase]
        assert abs(observed - expected) <= 3 * result.phase_time_stderr[phase], (phase, observed, expected)
    print(f"✅ PASS: {np.round(result.phase_time_fractions, 6)}")


def main():
    """Run all simulation tests"""
    print("🧪 SIMULATION TESTS")
    print("=" * 50)
    tests = [
        test_phase_fractions,
        test_waiting_times_match_distributions,
        test_fidelity_estimates_match_closed_forms,
        test_run_conservation_and_empty_computations,
        test_move_overtakes_queued_computations,
        test_sd_generation_queues_with_computations,
        test_instant_computations_with_script,
        test_invalid_arrival_script,
        test_activity_monitor,
        test_queue_length_stabilizes,
        test_finite_computation_rate,
        test_determinism_and_streams,
        test_standard_error_shrinks,
        test_statistics_helpers,
        test_invalid_sim_config,
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
