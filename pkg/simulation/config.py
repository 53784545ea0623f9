"""
Configuration parameters for the SD/DD architecture experiments.

Module constants are the defaults; ``load_config`` overlays a strict JSON
document with sections arch_sd, arch_dd, memory_sd, memory_dd, gate_noise,
sweep and sim. All rates are in Hz (1/s) and all times in seconds.
"""

import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional, Tuple

current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)
sys.path.insert(0, os.path.join(os.path.dirname(current_dir), "qarch_core", "src"))

from qarch_core import Arch, ArchParams, GateNoiseTable, MemoryParams, QarchError
from sweeps import SweepSpec, sweep_from_dict

# Queueing rates (SD/DD comparison with equal memories)
LAMBDA_E = 1.0  # entanglement request rate
MU_E = 10.0  # entanglement generation rate
LAMBDA_M = 1000.0  # move request rate
MU_M_SD = 1667.0  # local swap to memory takes 600 us
MU_M_DD = 700.0  # device-to-device transfer, between a third and a half of the SD rate
LAMBDA_C = 150.0  # computation request rate
MU_C = math.inf  # instantaneous computations

# Memory lifetimes
T1_SD = 0.00286
T2_SD = 0.001
T1_DD = 0.00286
T2_DD = 0.001

# Gate noise (depolarizing probabilities of the NV gate set)
P_ELECTRON_INIT = 0.02
P_CARBON_INIT = 0.006 / 4
P_RZ_CARBON = 0.001 / 3
P_RX_ELECTRON = 0.0
P_RCX = 0.005
P_RCY = 0.005
INCLUDE_ELECTRON_INIT = False
LAMBDA_M_VALUES = (10.0, 100.0, 1000.0, 1e4, 1e5)

# Simulation
SIM_DURATION = 1e5  # seconds per run
SIM_REPLICATIONS = 5  # runs averaged per data point
SIM_WARMUP_FRACTION = 0.05
SIM_SEED = 1
SIM_QUEUE_BINS = 100
SIM_WORKERS = 1


class ConfigError(QarchError):
    """The configuration document cannot be parsed or holds invalid values."""


@dataclass(frozen=True)
class SimSettings:
    duration: float = SIM_DURATION
    seed: int = SIM_SEED
    replications: int = SIM_REPLICATIONS
    warmup_fraction: float = SIM_WARMUP_FRACTION
    queue_bins: int = SIM_QUEUE_BINS
    workers: int = SIM_WORKERS

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ConfigError(f"sim.duration must be positive, got {self.duration}")
        if self.seed < 0:
            raise ConfigError(f"sim.seed must be non-negative, got {self.seed}")
        if self.replications < 1:
            raise ConfigError(f"sim.replications must be at least 1, got {self.replications}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError(f"sim.warmup_fraction must lie in [0, 1), got {self.warmup_fraction}")
        if self.queue_bins < 2:
            raise ConfigError(f"sim.queue_bins must be at least 2, got {self.queue_bins}")
        if self.workers < 1:
            raise ConfigError(f"sim.workers must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class ExperimentConfig:
    arch_sd: ArchParams
    arch_dd: ArchParams
    memory_sd: MemoryParams
    memory_dd: MemoryParams
    gate_noise: GateNoiseTable
    sim: SimSettings = field(default_factory=SimSettings)
    sweep: Optional[SweepSpec] = None
    lambda_m_values: Tuple[float, ...] = LAMBDA_M_VALUES

    def arch(self, which: Arch) -> ArchParams:
        return self.arch_sd if Arch(which) is Arch.SD else self.arch_dd

    def memory(self, which: Arch) -> MemoryParams:
        return self.memory_sd if Arch(which) is Arch.SD else self.memory_dd


def default_config() -> ExperimentConfig:
    """Build the default experiment from the module constants."""
    return ExperimentConfig(
        arch_sd=ArchParams(LAMBDA_E, MU_E, LAMBDA_M, MU_M_SD, LAMBDA_C, MU_C, Arch.SD),
        arch_dd=ArchParams(LAMBDA_E, MU_E, LAMBDA_M, MU_M_DD, LAMBDA_C, MU_C, Arch.DD),
        memory_sd=MemoryParams.from_t1_t2(T1_SD, T2_SD),
        memory_dd=MemoryParams.from_t1_t2(T1_DD, T2_DD),
        gate_noise=GateNoiseTable(P_ELECTRON_INIT, P_CARBON_INIT, P_RZ_CARBON, P_RX_ELECTRON,
                                  P_RCX, P_RCY, INCLUDE_ELECTRON_INIT),
    )


# ---------------------------------------------------------------------------
# JSON loading
# ---------------------------------------------------------------------------

SECTIONS = ("arch_sd", "arch_dd", "memory_sd", "memory_dd", "gate_noise", "sweep", "sim")
ARCH_KEYS = ("lambda_e", "mu_e", "lambda_m", "mu_m", "lambda_c", "mu_c")
MEMORY_KEYS = ("T", "T1", "T2")
NOISE_KEYS = tuple(f.name for f in fields(GateNoiseTable)) + ("lambda_m_values",)
SIM_KEYS = tuple(f.name for f in fields(SimSettings))


def parse_number(value: Any, where: str, allow_inf: bool = False) -> float:
    """A JSON number, or the literal string "inf" where infinity is allowed."""
    if allow_inf and value == "inf":
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _parse_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _check_keys(section: str, body: Any, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    if not isinstance(body, dict):
        raise ConfigError(f"section {section!r} must be an object")
    unknown = sorted(set(body) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(unknown)}")
    return body


def _parse_arch(section: str, body: Any, base: ArchParams) -> ArchParams:
    body = _check_keys(section, body, ARCH_KEYS)
    changes = {k: parse_number(v, f"{section}.{k}", allow_inf=(k == "mu_c")) for k, v in body.items()}
    try:
        return base.replace(**changes)
    except QarchError as e:
        raise ConfigError(f"{section}: {e}") from e


def _parse_memory(section: str, body: Any, base: MemoryParams) -> MemoryParams:
    body = _check_keys(section, body, MEMORY_KEYS)
    values = {k: parse_number(v, f"{section}.{k}") for k, v in body.items()}
    t1 = values.get("T1", base.T1)
    t2 = values.get("T2", base.T2)
    try:
        return MemoryParams(T=values.get("T", t2), T1=t1, T2=t2)
    except QarchError as e:
        raise ConfigError(f"{section}: {e}") from e


def _parse_noise(body: Any, base: GateNoiseTable) -> Tuple[GateNoiseTable, Tuple[float, ...]]:
    body = _check_keys("gate_noise", body, NOISE_KEYS)
    changes = {}
    lambda_m_values = LAMBDA_M_VALUES
    for key, value in body.items():
        if key == "include_electron_init":
            if not isinstance(value, bool):
                raise ConfigError(f"gate_noise.include_electron_init must be true or false, got {value!r}")
            changes[key] = value
        elif key == "lambda_m_values":
            if not isinstance(value, list) or not value:
                raise ConfigError("gate_noise.lambda_m_values must be a non-empty list")
            lambda_m_values = tuple(parse_number(v, "gate_noise.lambda_m_values", allow_inf=True) for v in value)
            if any(v <= 0.0 for v in lambda_m_values):
                raise ConfigError("gate_noise.lambda_m_values must be positive")
        else:
            changes[key] = parse_number(value, f"gate_noise.{key}")
    try:
        return base.replace(**changes), lambda_m_values
    except QarchError as e:
        raise ConfigError(f"gate_noise: {e}") from e


def _parse_sim(body: Any) -> SimSettings:
    body = _check_keys("sim", body, SIM_KEYS)
    values: Dict[str, Any] = {}
    for key, value in body.items():
        if key in ("seed", "replications", "queue_bins", "workers"):
            values[key] = _parse_int(value, f"sim.{key}")
        else:
            values[key] = parse_number(value, f"sim.{key}")
    return SimSettings(**values)


def config_from_dict(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")

    base = default_config()
    arch_sd = _parse_arch("arch_sd", doc.get("arch_sd", {}), base.arch_sd)
    arch_dd = _parse_arch("arch_dd", doc.get("arch_dd", {}), base.arch_dd)
    memory_sd = _parse_memory("memory_sd", doc.get("memory_sd", {}), base.memory_sd)
    memory_dd = _parse_memory("memory_dd", doc.get("memory_dd", {}), base.memory_dd)
    noise, lambda_m_values = _parse_noise(doc.get("gate_noise", {}), base.gate_noise)
    sim = _parse_sim(doc.get("sim", {}))

    cfg = ExperimentConfig(arch_sd, arch_dd, memory_sd, memory_dd, noise, sim,
                           lambda_m_values=lambda_m_values)
    if "sweep" in doc:
        try:
            sweep = sweep_from_dict(doc["sweep"])
            for value in sweep.values:
                sweep.apply(cfg, value)
        except QarchError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"sweep: {e}") from e
        except ValueError as e:
            raise ConfigError(f"sweep: {e}") from e
        cfg = ExperimentConfig(arch_sd, arch_dd, memory_sd, memory_dd, noise, sim, sweep, lambda_m_values)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment configuration."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return config_from_dict(doc)


def print_config(cfg: Optional[ExperimentConfig] = None, file=None):
    """Print the configuration for debugging"""
    cfg = cfg or default_config()
    out = file or sys.stdout
    print("=== Experiment Configuration ===", file=out)
    for arch in (Arch.SD, Arch.DD):
        p, m = cfg.arch(arch), cfg.memory(arch)
        print(f"{arch.value}: lambda_e={p.lambda_e}, mu_e={p.mu_e}, lambda_m={p.lambda_m}, "
              f"mu_m={p.mu_m}, lambda_c={p.lambda_c}, mu_c={p.mu_c}", file=out)
        print(f"{arch.value} memory: T={m.T}s, T1={m.T1}s, T2={m.T2}s", file=out)
    n = cfg.gate_noise
    print(f"Gate noise: init e={n.p_electron_init}, init C={n.p_carbon_init}, RZ={n.p_rz_carbon}, "
          f"RX={n.p_rx_electron}, RCX={n.p_rcx}, RCY={n.p_rcy}, "
          f"electron init in SD move={n.include_electron_init}", file=out)
    s = cfg.sim
    print(f"Simulation: {s.duration}s x {s.replications} runs, warm-up {s.warmup_fraction:.0%}, "
          f"seed={s.seed}, workers={s.workers}", file=out)
    if cfg.sweep is not None:
        print(f"Sweep: {cfg.sweep.variable} over {len(cfg.sweep.values)} values "
              f"[{cfg.sweep.values[0]:g} .. {cfg.sweep.values[-1]:g}], channel={cfg.sweep.channel.value}",
              file=out)
    print("=" * 50, file=out)
