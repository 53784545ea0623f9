#!/usr/bin/env python3
"""
Discrete-event simulator of the SD and DD architectures.

Each run implements the following loop as simpy processes:
1. Draw Poisson entanglement requests; each one passes FIFO through
   generation Exp(μe), waiting for its move request Exp(λm), and move
   execution Exp(μm)
2. Block computations while the device they need is busy:
   - SD: during generation and move execution
   - DD: during move execution only
3. With μc = ∞, computations arriving while blocked are flushed at the
   unblock instant; otherwise they are served Exp(μc) with moves taking
   non-preemptive priority
4. Discard the warm-up window, then collect waiting times, queue length and
   head-of-line phase occupancy
5. Convert waiting times into fidelity estimates with batch-means errors
"""

import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import simpy

# Add current directory to path for imports
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)
sys.path.insert(0, os.path.join(os.path.dirname(current_dir), "qarch_core", "src"))

try:
    from qarch_core import (
        Arch,
        ArchParams,
        ChannelKind,
        EmptySampleError,
        InvalidParameterError,
        MemoryParams,
        NoiseChannel,
        SimulationInvariantError,
        ent_fidelity_from_gate,
        gate_fidelity_closed,
        mean_drift_ok,
    )
except ImportError:
    print("Error: qarch_core not found. Install it with 'pip install -e qarch_core' first.")
    sys.exit(1)

logger = logging.getLogger(__name__)

DEFAULT_WARMUP_FRACTION = 0.05
DEFAULT_QUEUE_BINS = 100
DEFAULT_BATCHES = 50

# device request priorities (lower is served first)
MOVE_PRIORITY = 0
COMP_PRIORITY = 1

GEN = "generation"
REQUEST = "move_request"
MOVE = "move"
COMP = "computation"

SCRIPT_FIELDS = {GEN: "generation", REQUEST: "move_request", MOVE: "move", COMP: "computation"}


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment for a single architecture."""
    params: ArchParams
    memory: MemoryParams
    duration: float
    seed: int
    replications: int = 1
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION
    queue_bins: int = DEFAULT_QUEUE_BINS
    batches: int = DEFAULT_BATCHES
    channel: ChannelKind = ChannelKind.COMPOSITE

    def __post_init__(self):
        if not (self.duration > 0.0 and math.isfinite(self.duration)):
            raise InvalidParameterError(f"duration must be positive and finite, got {self.duration}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidParameterError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.replications < 1:
            raise InvalidParameterError(f"replications must be at least 1, got {self.replications}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise InvalidParameterError(f"warmup_fraction must lie in [0, 1), got {self.warmup_fraction}")
        if self.queue_bins < 2 or self.batches < 2:
            raise InvalidParameterError("queue_bins and batches must be at least 2")
        if not isinstance(self.channel, ChannelKind):
            object.__setattr__(self, "channel", ChannelKind(self.channel))

    @property
    def warmup(self) -> float:
        return self.duration * self.warmup_fraction

    def noise_channel(self) -> NoiseChannel:
        return NoiseChannel(self.channel, self.memory)


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    stderr: float
    batch_stderr: float
    samples: int

    @property
    def sigma(self) -> float:
        """The error bar used for 3σ checks."""
        return max(self.stderr, self.batch_stderr)

    def __str__(self):
        return f"{self.value:.8f} ± {self.sigma:.2e} (n={self.samples})"


@dataclass(eq=False)
class SimResult:
    """Stores the result of one simulation run"""
    arch: Arch
    comp_wait_samples: np.ndarray
    move_wait_samples: np.ndarray
    queue_length_timeseries: np.ndarray
    phase_time_fractions: np.ndarray
    phase_time_stderr: np.ndarray
    idle_fraction: float
    observed_time: float
    ent_arrived: int
    ent_completed: int
    ent_in_system: int
    comp_arrived: int
    f_avg_estimate: Optional[FidelityEstimate] = None
    f_e_estimate: Optional[FidelityEstimate] = None
    wall_seconds: float = 0.0

    @property
    def mean_queue_length(self) -> float:
        return float(self.queue_length_timeseries.mean())

    def __str__(self):
        phases = ", ".join(f"{x:.5f}" for x in self.phase_time_fractions)
        return (f"{self.arch.value}: {len(self.comp_wait_samples)} computations, "
                f"{len(self.move_wait_samples)} moves, phases=({phases}), "
                f"F_avg={self.f_avg_estimate}, F_e={self.f_e_estimate}")


@dataclass(eq=False)
class ReplicatedResult:
    """Replications of one configuration with across-replication error bars."""
    results: List[SimResult]
    f_avg: Optional[FidelityEstimate]
    f_e: Optional[FidelityEstimate]
    phase_time_fractions: np.ndarray
    phase_time_stderr: np.ndarray

    def pooled_comp_waits(self) -> np.ndarray:
        return np.concatenate([r.comp_wait_samples for r in self.results])

    def pooled_move_waits(self) -> np.ndarray:
        return np.concatenate([r.move_wait_samples for r in self.results])


# ---------------------------------------------------------------------------
# Statistics helpers
# ---------------------------------------------------------------------------

def batch_means_stderr(values: np.ndarray, batches: int = DEFAULT_BATCHES) -> float:
    """Standard error of the mean from contiguous batch means.

    Falls back to the naive error when there are too few samples per batch.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        return math.inf
    if n < 2 * batches:
        return float(values.std(ddof=1) / math.sqrt(n))
    means = np.array([chunk.mean() for chunk in np.array_split(values, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


def _estimate(values: np.ndarray, batches: int) -> FidelityEstimate:
    n = values.size
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return FidelityEstimate(float(values.mean()), stderr, batch_means_stderr(values, batches), n)


def gate_fidelity_estimate(comp_waits: np.ndarray, channel: NoiseChannel,
                           batches: int = DEFAULT_BATCHES) -> FidelityEstimate:
    """F_avg over computation waits."""
    if np.size(comp_waits) == 0:
        raise EmptySampleError("no computation waiting times to average over")
    return _estimate(np.asarray(gate_fidelity_closed(channel, comp_waits), dtype=float), batches)


def ent_fidelity_estimate(move_waits: np.ndarray, channel: NoiseChannel,
                          batches: int = DEFAULT_BATCHES) -> FidelityEstimate:
    """F_e of the moved pairs over move waits."""
    if np.size(move_waits) == 0:
        raise EmptySampleError("no move waiting times to average over")
    moved = np.asarray(gate_fidelity_closed(channel, move_waits), dtype=float)
    return _estimate(np.asarray(ent_fidelity_from_gate(moved, 2), dtype=float), batches)


def estimate_fidelities(result: SimResult, channel: NoiseChannel,
                        batches: int = DEFAULT_BATCHES) -> Tuple[FidelityEstimate, FidelityEstimate]:
    """Sample-mean fidelities over simulated waits: (F_avg of computations, F_e of moved pairs)."""
    return (gate_fidelity_estimate(result.comp_wait_samples, channel, batches),
            ent_fidelity_estimate(result.move_wait_samples, channel, batches))


def write_samples_csv(samples: Iterable[float], path: str) -> int:
    """Write one waiting time per line; returns the number of lines."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for x in samples:
            f.write(f"{float(x)!r}\n")
            count += 1
    return count


def replication_streams(seed: int, index: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Independent (pipeline, computation) generators of replication ``index``."""
    pipeline, comp = np.random.SeedSequence(seed, spawn_key=(index,)).spawn(2)
    return np.random.default_rng(pipeline), np.random.default_rng(comp)


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrivalScript:
    """Fixed arrival instants and activity durations in place of the random draws.

    Used to trace the queue discipline on a known input.
    """
    ent_arrivals: Tuple[float, ...]
    comp_arrivals: Tuple[float, ...]
    generation: float
    move_request: float
    move: float
    computation: float

    def __post_init__(self):
        for name in ("ent_arrivals", "comp_arrivals"):
            times = tuple(float(t) for t in getattr(self, name))
            if any(t < 0.0 for t in times) or list(times) != sorted(times):
                raise InvalidParameterError(f"{name} must be sorted and non-negative")
            object.__setattr__(self, name, times)
        for name in (GEN, REQUEST, MOVE, COMP):
            if not getattr(self, SCRIPT_FIELDS[name]) >= 0.0:
                raise InvalidParameterError(f"scripted {name} time must be non-negative")

    def span(self, kind: str) -> float:
        return getattr(self, SCRIPT_FIELDS[kind])


class _ActivityMonitor:
    """Raises when activities that share a device overlap."""

    def __init__(self, arch: Arch):
        self.arch = arch
        self.active = set()

    def start(self, kind: str, now: float) -> None:
        if self.arch is Arch.SD:
            clash = bool(self.active)
        else:
            clash = (kind == MOVE and COMP in self.active) or (kind == COMP and MOVE in self.active)
        if clash or kind in self.active:
            raise SimulationInvariantError(
                f"{self.arch.value}: {kind} started at t={now:.9g} while {sorted(self.active)} active")
        self.active.add(kind)

    def stop(self, kind: str) -> None:
        self.active.discard(kind)


class ArchitectureSimulation:
    """Process-based simulation of one architecture on a simpy environment.

    The device that computations need is a ``simpy.PriorityResource``: moves
    request it at priority 0, computations (and SD generation) at priority 1,
    so equal-priority jobs are served in request order and a job in service is
    never preempted.
    """

    def __init__(self, cfg: SimConfig, stream_index: int = 0, script: Optional[ArrivalScript] = None):
        self.cfg = cfg
        self.p = cfg.params
        self.arch = cfg.params.arch
        self.script = script
        has_comps = cfg.params.lambda_c > 0.0 if script is None else bool(script.comp_arrivals)
        self.finite_comp = not cfg.params.instant_computation and has_comps
        self.rng, self.comp_rng = replication_streams(cfg.seed, stream_index)

        if cfg.params.instant_computation and not mean_drift_ok(cfg.params):
            logger.warning("%s configuration violates the drift condition; the queue will grow",
                           self.arch.value)

        self.env = simpy.Environment()
        self.device = simpy.PriorityResource(self.env, capacity=1)
        self.requests = simpy.Store(self.env)
        self._monitor = _ActivityMonitor(self.arch)

        self.head_phase = 0
        self.head_active = False
        self.ent_arrived = 0
        self.ent_completed = 0
        self.comp_arrived = 0

        # samples
        self.comp_waits: List[float] = []
        self.move_waits: List[float] = []
        self.block_starts: List[float] = []
        self.block_ends: List[float] = []
        # (time, activity, "start" | "stop"), scripted runs only
        self.trace: List[Tuple[float, str, str]] = []

        # time accounting over [warmup, duration]
        self.edges = np.linspace(cfg.warmup, cfg.duration, cfg.queue_bins + 1)
        self.bin_phase_time = np.zeros((cfg.queue_bins, 4))
        self.bin_queue_area = np.zeros(cfg.queue_bins)
        self.clock = 0.0

        logger.debug("%s simulation: %s, duration=%g s, stream %d",
                     self.arch.value, self.p, cfg.duration, stream_index)

    # -- bookkeeping ---------------------------------------------------------

    def _span(self, kind: str) -> float:
        if self.script is not None:
            return self.script.span(kind)
        if kind == COMP:
            return self.comp_rng.exponential(1.0 / self.p.mu_c)
        rate = {GEN: self.p.mu_e, REQUEST: self.p.lambda_m, MOVE: self.p.mu_m}[kind]
        return self.rng.exponential(1.0 / rate)

    def _advance(self, now: float) -> None:
        """Accumulate phase occupancy and queue area over [clock, now]."""
        a = max(self.clock, self.edges[0])
        b = min(now, self.edges[-1])
        n_in_system = self.ent_arrived - self.ent_completed
        while a < b:
            i = min(int(np.searchsorted(self.edges, a, side="right")) - 1, len(self.bin_queue_area) - 1)
            end = min(b, self.edges[i + 1])
            span = end - a
            self.bin_phase_time[i, self.head_phase] += span
            self.bin_queue_area[i] += n_in_system * span
            a = end
        self.clock = max(self.clock, now)

    def _set_phase(self, phase: int) -> None:
        self._advance(self.env.now)
        self.head_phase = phase

    def _occupy(self, kind: str, span: float):
        """Hold the device for ``span`` seconds as activity ``kind``."""
        start = self.env.now
        self._monitor.start(kind, start)
        if self.script is not None:
            self.trace.append((start, kind, "start"))
        if kind != COMP and not self.finite_comp:
            self.block_starts.append(start)
            self.block_ends.append(start + span)
        yield self.env.timeout(span)
        self._monitor.stop(kind)
        if self.script is not None:
            self.trace.append((self.env.now, kind, "stop"))

    # -- processes -----------------------------------------------------------

    def _poisson(self, rate: float, rng: np.random.Generator, arrive):
        while True:
            yield self.env.timeout(rng.exponential(1.0 / rate))
            arrive()

    def _scripted(self, times: Sequence[float], arrive):
        for at in times:
            yield self.env.timeout(at - self.env.now)
            arrive()

    def _request_arrives(self) -> None:
        self._advance(self.env.now)
        self.ent_arrived += 1
        self.requests.put(self.env.now)

    def _computation_arrives(self) -> None:
        self.comp_arrived += 1
        self.env.process(self._computation(self.env.now))

    def _pipeline(self):
        """Head-of-line entanglement request: generation, move request, move."""
        env = self.env
        while True:
            yield self.requests.get()
            self.head_active = True
            self._set_phase(1)
            if self.arch is Arch.SD:
                # the communication qubit queues with computations
                with self.device.request(priority=COMP_PRIORITY) as req:
                    yield req
                    yield from self._occupy(GEN, self._span(GEN))
            else:
                yield env.timeout(self._span(GEN))
            self._set_phase(2)
            gen_end = env.now
            yield env.timeout(self._span(REQUEST))
            with self.device.request(priority=MOVE_PRIORITY) as req:
                yield req
                self._set_phase(3)
                if gen_end >= self.cfg.warmup:
                    self.move_waits.append(env.now - gen_end)
                yield from self._occupy(MOVE, self._span(MOVE))
            self._advance(env.now)
            self.ent_completed += 1
            self.head_active = False
            self.head_phase = 0

    def _computation(self, arrival: float):
        with self.device.request(priority=COMP_PRIORITY) as req:
            yield req
            if arrival >= self.cfg.warmup:
                self.comp_waits.append(self.env.now - arrival)
            yield from self._occupy(COMP, self._span(COMP))

    def _instant_computation_waits(self) -> np.ndarray:
        """Bulk computations resolved against the recorded blocking intervals."""
        duration = self.cfg.duration
        if self.script is not None:
            arrivals = np.asarray([t for t in self.script.comp_arrivals if t <= duration])
        else:
            count = int(self.comp_rng.poisson(self.p.lambda_c * duration)) if self.p.lambda_c > 0 else 0
            arrivals = np.sort(self.comp_rng.uniform(0.0, duration, size=count))
        self.comp_arrived = int(arrivals.size)
        arrivals = arrivals[arrivals >= self.cfg.warmup]
        starts = np.asarray(self.block_starts)
        ends = np.asarray(self.block_ends)
        if starts.size > 1 and np.any(starts[1:] < ends[:-1] - 1e-12):
            raise SimulationInvariantError(f"{self.arch.value}: blocking intervals overlap")
        waits = np.zeros(arrivals.size)
        if starts.size:
            idx = np.searchsorted(starts, arrivals, side="right") - 1
            inside = idx >= 0
            blocked = np.zeros(arrivals.size, dtype=bool)
            blocked[inside] = arrivals[inside] < ends[idx[inside]]
            waits[blocked] = ends[idx[blocked]] - arrivals[blocked]
        return waits

    def run(self) -> SimResult:
        """Run the complete simulation"""
        start_time = time.time()
        cfg, env = self.cfg, self.env
        if self.script is None:
            env.process(self._poisson(self.p.lambda_e, self.rng, self._request_arrives))
            if self.finite_comp:
                env.process(self._poisson(self.p.lambda_c, self.comp_rng, self._computation_arrives))
        else:
            env.process(self._scripted(self.script.ent_arrivals, self._request_arrives))
            if self.finite_comp:
                env.process(self._scripted(self.script.comp_arrivals, self._computation_arrives))
        env.process(self._pipeline())
        env.run(until=cfg.duration)
        self._advance(cfg.duration)

        in_system = len(self.requests.items) + int(self.head_active)
        if self.ent_arrived != self.ent_completed + in_system:
            raise SimulationInvariantError(
                f"{self.ent_arrived} requests arrived but {self.ent_completed} completed "
                f"and {in_system} remain")

        if self.finite_comp:
            comp_waits = np.asarray(self.comp_waits, dtype=float)
        else:
            comp_waits = self._instant_computation_waits()

        width = np.diff(self.edges)
        observed = float(self.bin_phase_time.sum())
        totals = self.bin_phase_time.sum(axis=0)
        bin_fractions = self.bin_phase_time[:, 1:] / width[:, None]
        result = SimResult(
            arch=self.arch,
            comp_wait_samples=comp_waits,
            move_wait_samples=np.asarray(self.move_waits, dtype=float),
            queue_length_timeseries=self.bin_queue_area / width,
            phase_time_fractions=totals[1:] / observed,
            phase_time_stderr=bin_fractions.std(axis=0, ddof=1) / math.sqrt(len(width)),
            idle_fraction=float(totals[0] / observed),
            observed_time=observed,
            ent_arrived=self.ent_arrived,
            ent_completed=self.ent_completed,
            ent_in_system=in_system,
            comp_arrived=self.comp_arrived,
        )
        channel = cfg.noise_channel()
        if comp_waits.size:
            result.f_avg_estimate = gate_fidelity_estimate(comp_waits, channel, cfg.batches)
        if result.move_wait_samples.size:
            result.f_e_estimate = ent_fidelity_estimate(result.move_wait_samples, channel, cfg.batches)
        result.wall_seconds = time.time() - start_time
        logger.info("%s run finished in %.2f s: %d requests, %d computations",
                    self.arch.value, result.wall_seconds, self.ent_arrived, comp_waits.size)
        return result


def simulate(cfg: SimConfig, stream_index: int = 0, script: Optional[ArrivalScript] = None) -> SimResult:
    return ArchitectureSimulation(cfg, stream_index, script).run()


def _run_indexed(args: Tuple[SimConfig, int]) -> SimResult:
    cfg, index = args
    return simulate(cfg, index)


def _across(estimates: Sequence[Optional[FidelityEstimate]]) -> Optional[FidelityEstimate]:
    if any(e is None for e in estimates):
        return None
    if len(estimates) == 1:
        return estimates[0]
    values = np.array([e.value for e in estimates])
    spread = float(values.std(ddof=1) / math.sqrt(len(values)))
    pooled = float(math.sqrt(sum(e.batch_stderr ** 2 for e in estimates)) / len(estimates))
    return FidelityEstimate(float(values.mean()), spread, pooled, sum(e.samples for e in estimates))


def run_replications(cfg: SimConfig, workers: int = 1) -> ReplicatedResult:
    """Run ``cfg.replications`` independent streams and aggregate them.

    Results are ordered by replication index whatever the worker count.
    """
    jobs = [(cfg, i) for i in range(cfg.replications)]
    if workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(job) for job in jobs]

    phases = np.array([r.phase_time_fractions for r in results])
    if len(results) > 1:
        phase_err = phases.std(axis=0, ddof=1) / math.sqrt(len(results))
    else:
        phase_err = results[0].phase_time_stderr
    return ReplicatedResult(
        results=results,
        f_avg=_across([r.f_avg_estimate for r in results]),
        f_e=_across([r.f_e_estimate for r in results]),
        phase_time_fractions=phases.mean(axis=0),
        phase_time_stderr=phase_err,
    )


def main():
    """Main function"""
    import config
    from qarch_core import f1_avg, f2_avg

    print("=" * 50)
    print("SD/DD ARCHITECTURE SIMULATION")
    print("=" * 50)

    try:
        cfg = config.default_config()
        config.print_config(cfg)
        duration = min(cfg.sim.duration, 1e4)
        for arch, analytic in ((Arch.SD, f1_avg), (Arch.DD, f2_avg)):
            sim_cfg = SimConfig(cfg.arch(arch), cfg.memory(arch), duration, cfg.sim.seed,
                                replications=1, warmup_fraction=cfg.sim.warmup_fraction)
            result = simulate(sim_cfg)
            print(result)
            expected = analytic(cfg.arch(arch), cfg.memory(arch))
            est = result.f_avg_estimate
            ok = est is not None and abs(est.value - expected) < 3 * est.sigma
            print(f"{'✅' if ok else '❌'} {arch.value} analytic F_avg {expected:.8f}")
        return 0
    except Exception as e:
        print(f"\n❌ Simulation failed with error: {e}")
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
