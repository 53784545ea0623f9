"""
Parameter sweeps and their output rows.

A sweep variable names a rate (``lambda_e``, ``mu_c``...), a memory lifetime
(``T``, ``T1``, ``T2``) or a gate noise probability (``p_rcx``...). Rate and
lifetime names without a suffix change both architectures; ``_sd`` or
``_dd`` targets one.
"""

import csv
import dataclasses
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from run_simulation import SimConfig, run_replications, write_samples_csv
from qarch_core import (
    Arch,
    ChannelKind,
    InvalidParameterError,
    NoiseChannel,
    StabilityError,
    Winner,
    avg_fidelity_for_arch,
    compare_architectures,
    mean_drift_ok,
)

logger = logging.getLogger(__name__)

ARCH_FIELDS = ("lambda_e", "mu_e", "lambda_m", "mu_m", "lambda_c", "mu_c")
MEMORY_FIELDS = ("T", "T1", "T2")
NOISE_FIELDS = ("p_electron_init", "p_carbon_init", "p_rz_carbon", "p_rx_electron", "p_rcx", "p_rcy")
SWEEP_KEYS = ("variable", "values", "start", "stop", "count", "scale", "channel")

STATUS_OK = "OK"
STATUS_UNSTABLE = "UNSTABLE"
CHECK_PASS = "PASS"
CHECK_FAIL = "FAIL"
TIE_TOL = 1e-12

COLUMNS = (
    "index", "variable", "value", "status",
    "f1_avg", "f2_avg", "difference", "winner",
    "f_e_premove_sd", "f_e_premove_dd",
    "sim_f1_avg", "sim_f1_err", "sim_f2_avg", "sim_f2_err", "sim_difference",
    "sim_f_e_sd", "sim_f_e_sd_err", "sim_f_e_dd", "sim_f_e_dd_err",
    "check_sd", "check_dd",
)


def _resolve(variable: str) -> Tuple[str, str, Tuple[Arch, ...]]:
    """(section, field, architectures) addressed by a sweep variable."""
    if variable in NOISE_FIELDS:
        return "noise", variable, ()
    name, targets = variable, (Arch.SD, Arch.DD)
    for suffix, arch in (("_sd", Arch.SD), ("_dd", Arch.DD)):
        if variable.endswith(suffix):
            name, targets = variable[: -len(suffix)], (arch,)
    if name in ARCH_FIELDS:
        return "arch", name, targets
    if name in MEMORY_FIELDS:
        return "memory", name, targets
    raise InvalidParameterError(f"unknown sweep variable {variable!r}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: Tuple[float, ...]
    channel: ChannelKind = ChannelKind.COMPOSITE

    def __post_init__(self):
        _resolve(self.variable)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise InvalidParameterError("sweep has no values")
        if any(math.isnan(v) for v in self.values):
            raise InvalidParameterError("sweep values must be numbers")
        if not isinstance(self.channel, ChannelKind):
            object.__setattr__(self, "channel", ChannelKind(self.channel))

    def apply(self, cfg, value: float):
        """A copy of the experiment config with the variable set to ``value``."""
        section, name, targets = _resolve(self.variable)
        if section == "noise":
            return dataclasses.replace(cfg, gate_noise=cfg.gate_noise.replace(**{name: value}))
        changes = {}
        for arch in targets:
            key = f"{section}_{arch.value.lower()}"
            current = getattr(cfg, key)
            if section == "arch":
                changes[key] = current.replace(**{name: value})
            else:
                update = {name: value}
                # T follows T2 when it was left tied to it
                if name == "T2" and current.T == current.T2:
                    update["T"] = value
                changes[key] = current.replace(**update)
        return dataclasses.replace(cfg, **changes)


def sweep_values(start: float, stop: float, count: int, scale: str = "linear") -> Tuple[float, ...]:
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise InvalidParameterError(f"sweep count must be a positive integer, got {count!r}")
    if scale == "linear":
        return tuple(np.linspace(start, stop, count).tolist())
    if scale == "log":
        if start <= 0.0 or stop <= 0.0:
            raise InvalidParameterError("log sweep needs positive start and stop")
        return tuple(np.geomspace(start, stop, count).tolist())
    raise InvalidParameterError(f"sweep scale must be 'linear' or 'log', got {scale!r}")


def _number(value: Any, where: str) -> float:
    if value == "inf":
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameterError(f"{where} must be a number, got {value!r}")
    return float(value)


def sweep_from_dict(body: Any) -> SweepSpec:
    if not isinstance(body, dict):
        raise InvalidParameterError("section 'sweep' must be an object")
    unknown = sorted(set(body) - set(SWEEP_KEYS))
    if unknown:
        raise InvalidParameterError(f"unknown key(s) in 'sweep': {', '.join(unknown)}")
    if "variable" not in body:
        raise InvalidParameterError("sweep.variable is required")
    if "values" in body:
        if any(k in body for k in ("start", "stop", "count", "scale")):
            raise InvalidParameterError("give either sweep.values or start/stop/count, not both")
        if not isinstance(body["values"], list):
            raise InvalidParameterError("sweep.values must be a list")
        values = tuple(_number(v, "sweep.values") for v in body["values"])
    else:
        missing = [k for k in ("start", "stop", "count") if k not in body]
        if missing:
            raise InvalidParameterError(f"sweep is missing {', '.join(missing)}")
        values = sweep_values(_number(body["start"], "sweep.start"), _number(body["stop"], "sweep.stop"),
                              body["count"], body.get("scale", "linear"))
    try:
        channel = ChannelKind(body.get("channel", ChannelKind.COMPOSITE.value))
    except ValueError:
        raise InvalidParameterError(f"unknown channel {body.get('channel')!r}") from None
    return SweepSpec(str(body["variable"]), values, channel)


# ---------------------------------------------------------------------------
# Output rows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutputRow:
    index: int
    variable: str
    value: float
    status: str
    f1_avg: Optional[float] = None
    f2_avg: Optional[float] = None
    difference: Optional[float] = None
    winner: Optional[str] = None
    f_e_premove_sd: Optional[float] = None
    f_e_premove_dd: Optional[float] = None
    sim_f1_avg: Optional[float] = None
    sim_f1_err: Optional[float] = None
    sim_f2_avg: Optional[float] = None
    sim_f2_err: Optional[float] = None
    sim_difference: Optional[float] = None
    sim_f_e_sd: Optional[float] = None
    sim_f_e_sd_err: Optional[float] = None
    sim_f_e_dd: Optional[float] = None
    sim_f_e_dd_err: Optional[float] = None
    check_sd: Optional[str] = None
    check_dd: Optional[str] = None

    @property
    def stable(self) -> bool:
        return self.status == STATUS_OK

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in COLUMNS}


def _winner(f_sd: float, f_dd: float) -> str:
    if abs(f_sd - f_dd) < TIE_TOL:
        return Winner.TIE.value
    return (Winner.SD if f_sd > f_dd else Winner.DD).value


def analyze_point(cfg, index: int, variable: str, value: float,
                  channel: ChannelKind = ChannelKind.COMPOSITE) -> OutputRow:
    """Closed-form comparison of both architectures at one configuration.

    The closed forms hold for instantaneous computations only, so an
    architecture with finite μc gets empty analytic columns, and so do
    ``difference`` and ``winner``.
    """
    p_sd, p_dd = cfg.arch_sd, cfg.arch_dd
    if not (mean_drift_ok(p_sd) and mean_drift_ok(p_dd)):
        logger.info("sweep point %d (%s=%g) is unstable", index, variable, value)
        return OutputRow(index, variable, value, STATUS_UNSTABLE)
    if channel is ChannelKind.COMPOSITE:
        report = compare_architectures(p_sd, p_dd, cfg.memory_sd, cfg.memory_dd)
        f_sd, f_dd = report.f_avg_sd, report.f_avg_dd
        fe_sd, fe_dd = report.f_e_premove, report.f_e_premove_dd
    else:
        f_sd = avg_fidelity_for_arch(p_sd, NoiseChannel(channel, cfg.memory_sd))
        f_dd = avg_fidelity_for_arch(p_dd, NoiseChannel(channel, cfg.memory_dd))
        fe_sd = fe_dd = None
    if not p_sd.instant_computation:
        f_sd = fe_sd = None
    if not p_dd.instant_computation:
        f_dd = fe_dd = None
    compared = f_sd is not None and f_dd is not None
    return OutputRow(index, variable, value, STATUS_OK, f1_avg=f_sd, f2_avg=f_dd,
                     difference=f_sd - f_dd if compared else None,
                     winner=_winner(f_sd, f_dd) if compared else None,
                     f_e_premove_sd=fe_sd, f_e_premove_dd=fe_dd)


def _check(analytic: Optional[float], estimate) -> Optional[str]:
    if analytic is None or estimate is None:
        return None
    return CHECK_PASS if abs(analytic - estimate.value) < 3.0 * estimate.sigma else CHECK_FAIL


def samples_path(samples_dir: str, index: int, arch: Arch, kind: str) -> str:
    """File holding the pooled ``kind`` ("comp" or "move") waits of one sweep point."""
    return os.path.join(samples_dir, f"point{index:03d}_{arch.value.lower()}_{kind}.csv")


def _write_samples(samples_dir: str, index: int, arch: Arch, rep) -> None:
    os.makedirs(samples_dir, exist_ok=True)
    for kind, waits in (("comp", rep.pooled_comp_waits()), ("move", rep.pooled_move_waits())):
        path = samples_path(samples_dir, index, arch, kind)
        count = write_samples_csv(waits, path)
        logger.debug("wrote %d %s waits to %s", count, kind, path)


def simulate_point(cfg, index: int, variable: str, value: float,
                   channel: ChannelKind = ChannelKind.COMPOSITE,
                   samples_dir: Optional[str] = None) -> OutputRow:
    """Simulated estimates next to the closed forms, flagged PASS/FAIL within 3σ.

    When either architecture computes at a finite rate, ``difference`` and
    ``winner`` come from the simulated estimates.
    """
    row = analyze_point(cfg, index, variable, value, channel)
    sims = {}
    for arch in (Arch.SD, Arch.DD):
        p = cfg.arch(arch)
        if p.instant_computation and not mean_drift_ok(p):
            sims[arch] = None
            continue
        sim_cfg = SimConfig(p, cfg.memory(arch), cfg.sim.duration, cfg.sim.seed,
                            replications=cfg.sim.replications,
                            warmup_fraction=cfg.sim.warmup_fraction,
                            queue_bins=cfg.sim.queue_bins, channel=channel)
        sims[arch] = run_replications(sim_cfg)
        if samples_dir is not None:
            _write_samples(samples_dir, index, arch, sims[arch])

    def est(arch, attr):
        rep = sims[arch]
        return None if rep is None else getattr(rep, attr)

    f_sd, f_dd = est(Arch.SD, "f_avg"), est(Arch.DD, "f_avg")
    fe_sd, fe_dd = est(Arch.SD, "f_e"), est(Arch.DD, "f_e")
    sim_difference = f_sd.value - f_dd.value if f_sd and f_dd else None
    difference, winner = row.difference, row.winner
    if row.stable and difference is None and sim_difference is not None:
        difference, winner = sim_difference, _winner(f_sd.value, f_dd.value)
    return dataclasses.replace(
        row,
        difference=difference, winner=winner,
        sim_f1_avg=f_sd.value if f_sd else None, sim_f1_err=f_sd.sigma if f_sd else None,
        sim_f2_avg=f_dd.value if f_dd else None, sim_f2_err=f_dd.sigma if f_dd else None,
        sim_difference=sim_difference,
        sim_f_e_sd=fe_sd.value if fe_sd else None, sim_f_e_sd_err=fe_sd.sigma if fe_sd else None,
        sim_f_e_dd=fe_dd.value if fe_dd else None, sim_f_e_dd_err=fe_dd.sigma if fe_dd else None,
        check_sd=_check(row.f1_avg, f_sd), check_dd=_check(row.f2_avg, f_dd),
    )


def _evaluate(args) -> OutputRow:
    cfg, index, value, with_sim, samples_dir = args
    sweep = cfg.sweep
    point = sweep.apply(cfg, value)
    try:
        if with_sim:
            return simulate_point(point, index, sweep.variable, value, sweep.channel, samples_dir)
        return analyze_point(point, index, sweep.variable, value, sweep.channel)
    except StabilityError:
        return OutputRow(index, sweep.variable, value, STATUS_UNSTABLE)


def evaluate_sweep(cfg, with_sim: bool = False, workers: int = 1,
                   samples_dir: Optional[str] = None) -> List[OutputRow]:
    """One row per sweep value, always in sweep-index order.

    With ``samples_dir`` set, simulated waits of each point are written there.
    """
    if cfg.sweep is None:
        raise InvalidParameterError("configuration has no sweep")
    jobs = [(cfg, i, v, with_sim, samples_dir) for i, v in enumerate(cfg.sweep.values)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(job) for job in jobs]


def single_point_sweep(cfg) -> SweepSpec:
    """Sweep of one point at the configured SD computation rate."""
    return SweepSpec("mu_c_sd", (cfg.arch_sd.mu_c,))


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def format_value(value: Any) -> str:
    """Locale-independent text for a CSV cell."""
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.12g" % value
    return str(value)


def rows_to_csv(rows: Sequence[OutputRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([format_value(row.as_dict()[c]) for c in COLUMNS])
    return buf.getvalue()


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def to_json(payload: Any) -> str:
    return json.dumps(_json_safe(payload), indent=2, sort_keys=False) + "\n"


def rows_to_json(rows: Sequence[OutputRow]) -> str:
    return to_json({"columns": list(COLUMNS), "rows": [row.as_dict() for row in rows]})


def all_unstable(rows: Sequence[OutputRow]) -> bool:
    return bool(rows) and all(not row.stable for row in rows)

