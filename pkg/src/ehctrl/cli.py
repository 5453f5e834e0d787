"""Command-line front end.

Subcommands:

  run            simulate one configuration and write slots.csv, summary.csv,
                 summary.json and the fig_*.csv aggregates
  required-prob  print the reception probability a plant needs for its
                 decrease-rate target
  check-config   verify the dual-bound and battery sizing rules
  sweep          rerun the simulation over a grid of one scalar parameter,
                 one summary row per point

Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation
(partial telemetry is still flushed). Set EHCTRL_LOG=DEBUG|INFO|WARNING for
log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import config as config_mod
from . import telemetry
from .control import PlantModel, required_reception_probability
from .errors import ConfigError, InfeasibleTargetError
from .sim import SimulationAborted, run, sizing_report, summarize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

SWEEP_PARAMS = {
    "harvest_mean": ("harvest", "mean"),
    "collision_prob": ("channel", "collision_prob"),
    "fading_mean": ("channel", "fading_mean"),
    "decode_rate": ("channel", "decode", "rate"),
    "epsilon": ("scheduler", "epsilon"),
    "staleness_bound": ("availability", "staleness_bound"),
}


def _setup_logging() -> None:
    level = os.environ.get("EHCTRL_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="root seed override")
    parser.add_argument("--horizon", type=int, default=None, help="slot-count override")
    parser.add_argument("--out", type=Path, default=Path("ehctrl-out"), help="output directory")
    parser.add_argument("--strict", action="store_true", help="fail on sizing violations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehctrl",
        description="Random-access scheduling simulator for energy-harvesting control loops",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_common(p_run)

    p_req = sub.add_parser("required-prob", help="required reception probability of a plant")
    p_req.add_argument("--a-open", type=float, default=None, help="open-loop gain (scalar plant)")
    p_req.add_argument("--a-closed", type=float, default=None, help="closed-loop gain (scalar plant)")
    p_req.add_argument("--rho", type=float, default=None, help="decrease rate in (0,1)")
    p_req.add_argument("--lyapunov", type=float, default=1.0, help="scalar certificate weight")
    p_req.add_argument("--plant-file", type=Path, default=None,
                       help="YAML file with a_open/a_closed matrices")
    p_req.add_argument("--tol", type=float, default=1e-6, help="bisection tolerance")

    p_check = sub.add_parser("check-config", help="verify sizing rules")
    p_check.add_argument("--config", type=Path, default=None)
    p_check.add_argument("--strict", action="store_true")

    p_sweep = sub.add_parser("sweep", help="grid over one scalar parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated grid, e.g. 0.1,0.3,0.5")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return parser


def _write_outputs(result_record, summary, config, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    telemetry.write_slots_csv(result_record, outdir / "slots.csv")
    telemetry.write_summary_csv(summary, outdir / "summary.csv")
    telemetry.write_summary_json(summary, outdir / "summary.json")
    telemetry.write_figure_csvs(result_record, outdir, window=config.schedule_window)


def cmd_run(args) -> int:
    config = config_mod.load_config(
        args.config, seed=args.seed, horizon=args.horizon, strict=args.strict
    )
    try:
        result = run(config)
    except SimulationAborted as exc:
        logger.error("%s", exc)
        _write_outputs(exc.record, summarize(exc.record), config, args.out)
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    _write_outputs(result.record, result.summary, config, args.out)
    for entry in result.summary.nodes:
        print(
            f"node {entry.node + 1}: required p = {entry.p_required:.4f}, "
            f"p_tx = {entry.p_tx:.4f}, p_rx = {entry.p_rx_analytic:.4f} "
            f"(empirical {entry.p_rx_empirical:.4f}), "
            f"ctrl_perf = {entry.ctrl_perf:.4f}, "
            f"energy balance = {entry.energy_balance:.4f}"
        )
    return EXIT_OK


def _plant_from_args(args) -> PlantModel:
    if args.plant_file is not None:
        data = yaml.safe_load(Path(args.plant_file).read_text())
        if not isinstance(data, dict):
            raise ConfigError("plant file must be a mapping")
        return PlantModel(
            a_open=data["a_open"],
            a_closed=data["a_closed"],
            noise_cov=data.get("noise_cov", 1.0),
            lyapunov_weight=data.get("lyapunov_weight", 1.0),
            decrease_rate=data.get("decrease_rate", 0.8),
        )
    if args.a_open is None or args.a_closed is None or args.rho is None:
        raise ConfigError("required-prob needs --a-open, --a-closed and --rho (or --plant-file)")
    return PlantModel(
        a_open=args.a_open,
        a_closed=args.a_closed,
        noise_cov=1.0,
        lyapunov_weight=args.lyapunov,
        decrease_rate=args.rho,
    )


def cmd_required_prob(args) -> int:
    plant = _plant_from_args(args)
    p = required_reception_probability(plant, tol=args.tol)
    print(f"{p:.10g}")
    return EXIT_OK


def cmd_check_config(args) -> int:
    config = config_mod.load_config(args.config, strict=False)
    problems = sizing_report(config)
    eps = config.params.epsilon
    needed_y = (config.params.nu_bar + 2.0 * eps) / eps
    print(f"auxiliary caps: min y_bar = {config.params.y_bar.min():g}, "
          f"needed >= {needed_y.max():g}")
    needed_b = np.diag(config.params.nu_bar) / eps + 1.0
    caps = [b.capacity for b in config.batteries]
    print(f"battery capacities: min = {min(caps):g}, needed >= {needed_b.max():g}")
    if problems:
        for problem in problems:
            print(f"FAIL: {problem}")
        if args.strict:
            return EXIT_CONFIG
    else:
        print("PASS: sizing rules satisfied")
    return EXIT_OK


def _derived_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(seed, index)).generate_state(1, np.uint64)[0])


def _sweep_point(raw: dict, param: str, value: float, seed: int, horizon, index: int) -> dict:
    import copy

    raw = copy.deepcopy(raw)
    path = SWEEP_PARAMS[param]
    target = raw
    for key in path[:-1]:
        target = target[key]
    leaf = path[-1]
    target[leaf] = int(value) if param == "staleness_bound" else value
    config = config_mod.build_config(raw, seed=_derived_seed(seed, index), horizon=horizon)
    result = run(config)
    row: dict = {"param": param, "value": value, "seed": config.seed}
    for entry in result.summary.nodes:
        suffix = str(entry.node + 1)
        row[f"p_required_{suffix}"] = entry.p_required
        row[f"p_tx_{suffix}"] = entry.p_tx
        row[f"p_rx_{suffix}"] = entry.p_rx_analytic
        row[f"ctrl_perf_{suffix}"] = entry.ctrl_perf
        row[f"energy_balance_{suffix}"] = entry.energy_balance
    return row


def cmd_sweep(args) -> int:
    raw = config_mod.read_raw(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse sweep values: {exc}") from exc
    if not values:
        raise ConfigError("sweep needs at least one value")
    base_seed = int(raw["seed"])

    points = list(enumerate(values))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(
                pool.map(
                    _sweep_point_star,
                    [(raw, args.param, v, base_seed, args.horizon, idx) for idx, v in points],
                )
            )
    else:
        rows = [
            _sweep_point(raw, args.param, v, base_seed, args.horizon, idx)
            for idx, v in points
        ]

    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "sweep.csv"
    header = list(rows[0].keys())
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    str(row[k]) if isinstance(row[k], (int, str)) else repr(float(row[k]))
                    for k in header
                )
                + "\n"
            )
    print(f"wrote {path} ({len(rows)} points)")
    return EXIT_OK


def _sweep_point_star(packed) -> dict:
    return _sweep_point(*packed)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "required-prob": cmd_required_prob,
        "check-config": cmd_check_config,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, InfeasibleTargetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
