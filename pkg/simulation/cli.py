#!/usr/bin/env python3
"""
Command-line front end.

    python simulation/cli.py analyze  --config scenarios/equal_memories.json
    python simulation/cli.py simulate --config scenarios/mu_c_sweep.json --seed 7 --out sim.csv
    python simulation/cli.py simulate --samples waits/
    python simulation/cli.py circuit  --format json
    python simulation/cli.py selftest

Data goes to stdout (or --out); logs and banners go to stderr.
Exit codes: 0 ok, 1 unexpected failure or failing self test, 2 configuration
error, 3 every sweep point unstable, 130 interrupted.
"""

import argparse
import dataclasses
import logging
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)
sys.path.insert(0, os.path.join(os.path.dirname(current_dir), "qarch_core", "src"))

import config
from config import ConfigError, ExperimentConfig
from qarch_core import (
    Arch,
    InvalidParameterError,
    MemoryParams,
    avg_circuit_post_move_fidelity,
    avg_post_move_fidelity,
    circuit_post_move_fidelity,
    f_e_premove,
    published_post_move_ent_fidelity,
    post_move_gate_fidelity_closed,
)
from qarch_core.circuits import PUBLISHED_ENT_TERMS, PUBLISHED_GATE_TERMS, post_move_terms
from sweeps import all_unstable, evaluate_sweep, rows_to_csv, rows_to_json, single_point_sweep, to_json
import selftest

logger = logging.getLogger("qarch.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_INTERRUPTED = 130

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DISCREPANCY_TOL = 1e-10


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qarch",
        description="Compare single-device and double-device networked quantum processors.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration (defaults if omitted)")
    common.add_argument("--out", metavar="PATH", help="write results here instead of stdout")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (csv for sweeps, json for circuit reports)")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--log-level", default="WARNING",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="logging threshold")
    common.add_argument("--verbose", action="store_true", help="print the configuration banner to stderr")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed-form fidelities over the sweep")
    simulate = sub.add_parser("simulate", parents=[common], help="simulated estimates next to the closed forms")
    simulate.add_argument("--samples", metavar="DIR",
                          help="write the raw waiting times of every point here, one per line")
    sub.add_parser("circuit", parents=[common], help="pre- and post-move fidelities of the transfer circuits")
    sub.add_parser("selftest", parents=[common], help="run the oracle-equivalence checks")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = config.load_config(args.config) if args.config else config.default_config()
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, **overrides))
    if cfg.sweep is None:
        cfg = dataclasses.replace(cfg, sweep=single_point_sweep(cfg))
    return cfg


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def cmd_analyze(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    rows = evaluate_sweep(cfg, with_sim=False, workers=cfg.sim.workers)
    emit(rows_to_json(rows) if args.format == "json" else rows_to_csv(rows), args.out)
    return EXIT_UNSTABLE if all_unstable(rows) else EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    rows = evaluate_sweep(cfg, with_sim=True, workers=cfg.sim.workers, samples_dir=args.samples)
    emit(rows_to_json(rows) if args.format == "json" else rows_to_csv(rows), args.out)
    failing = [r.index for r in rows if "FAIL" in (r.check_sd, r.check_dd)]
    if failing:
        logger.warning("simulation outside 3 sigma of the closed form at points %s", failing)
    return EXIT_UNSTABLE if all_unstable(rows) else EXIT_OK


def _post_move_pair(gate: float, ent: float) -> Dict[str, float]:
    return {"gate": gate, "ent": ent}


def circuit_report(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Closed form, circuit oracle and published numerics of the post-move fidelity."""
    noise = cfg.gate_noise
    m_sd: MemoryParams = cfg.memory_sd
    m_dd: MemoryParams = cfg.memory_dd
    terms = post_move_terms(noise, m_sd)

    closed_gate_t0 = post_move_gate_fidelity_closed(noise, 0.0, m_sd)
    oracle_sd = circuit_post_move_fidelity(noise, 0.0, m_sd, Arch.SD)
    oracle_sd_init = circuit_post_move_fidelity(noise.replace(include_electron_init=not noise.include_electron_init),
                                                0.0, m_sd, Arch.SD)
    oracle_dd = circuit_post_move_fidelity(noise, 0.0, m_dd, Arch.DD)
    published_ent_t0 = sum(PUBLISHED_ENT_TERMS)

    sweep: List[Dict[str, Any]] = []
    max_dev = 0.0
    for lam in cfg.lambda_m_values:
        if math.isinf(lam):
            closed = _post_move_pair(closed_gate_t0, (3 * closed_gate_t0 - 1) / 2)
            sd, dd = oracle_sd, oracle_dd
        else:
            c = avg_post_move_fidelity(noise, lam, m_sd)
            closed = _post_move_pair(c.gate, c.ent)
            sd = avg_circuit_post_move_fidelity(noise, lam, m_sd, Arch.SD)
            dd = avg_circuit_post_move_fidelity(noise, lam, m_dd, Arch.DD)
        max_dev = max(max_dev, abs(closed["gate"] - sd.gate))
        sweep.append({
            "lambda_m": lam,
            "closed_form_gate": closed["gate"],
            "closed_form_ent": closed["ent"],
            "published_ent": published_post_move_ent_fidelity(lam, m_sd),
            "oracle_sd_ent": sd.ent,
            "oracle_dd_ent": dd.ent,
            "premove_ent_sd": f_e_premove(lam, m_sd),
            "premove_ent_dd": f_e_premove(lam, m_dd),
        })

    if abs(closed_gate_t0 - oracle_sd.gate) > DISCREPANCY_TOL:
        logger.warning("closed-form post-move fidelity differs from the circuit oracle by %.3e at t=0",
                       closed_gate_t0 - oracle_sd.gate)

    return {
        "gate_noise": dataclasses.asdict(noise),
        "closed_form": {
            "constant": terms.constant,
            "t1_coefficient": terms.terms[0][0],
            "t2_coefficient": terms.terms[1][0],
            "gate_t0": closed_gate_t0,
            "ent_t0": (3 * closed_gate_t0 - 1) / 2,
        },
        "published": {
            "gate_terms": list(PUBLISHED_GATE_TERMS),
            "ent_terms": list(PUBLISHED_ENT_TERMS),
            "ent_t0": published_ent_t0,
        },
        "oracle": {
            "sd": _post_move_pair(oracle_sd.gate, oracle_sd.ent),
            "sd_electron_init_toggled": _post_move_pair(oracle_sd_init.gate, oracle_sd_init.ent),
            "dd": _post_move_pair(oracle_dd.gate, oracle_dd.ent),
        },
        "discrepancy": {
            "closed_minus_oracle_gate_t0": closed_gate_t0 - oracle_sd.gate,
            "published_minus_oracle_ent_t0": published_ent_t0 - oracle_sd.ent,
            "max_abs_closed_vs_oracle_gate": max_dev,
        },
        "lambda_m_sweep": sweep,
    }


SWEEP_COLUMNS = ("lambda_m", "closed_form_gate", "closed_form_ent", "published_ent",
                 "oracle_sd_ent", "oracle_dd_ent", "premove_ent_sd", "premove_ent_dd")


def circuit_sweep_csv(report: Dict[str, Any]) -> str:
    from sweeps import format_value
    lines = [",".join(SWEEP_COLUMNS)]
    for entry in report["lambda_m_sweep"]:
        lines.append(",".join(format_value(float(entry[c])) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_circuit(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    report = circuit_report(cfg)
    emit(circuit_sweep_csv(report) if args.format == "csv" else to_json(report), args.out)
    return EXIT_OK


def cmd_selftest(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    return EXIT_OK if selftest.run_all(seed=cfg.sim.seed) else EXIT_FAILURE


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "circuit": cmd_circuit,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)

    try:
        cfg = resolve_config(args)
        if args.verbose:
            config.print_config(cfg, file=sys.stderr)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidParameterError as e:
        print(f"❌ Invalid parameter: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        print(f"\n❌ {args.command} failed with error: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
