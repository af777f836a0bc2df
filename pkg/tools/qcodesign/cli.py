"""Command-line entry point for qcodesign."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

from .codesign import EpochRecord, PipelineSettings, brute_force_minimum, run_fixed_baseline, run_simulation
from .config import RunConfig, dump_config, parse_config, with_overrides
from .doctor import run_doctor
from .encoding import FIXED
from .errors import CapExceeded, CodesignError, ValidationError, exit_code_for
from .output import BRUTE_FILE, BruteRow, ensure_writable, run_targets, write_brute, write_run
from .scenarios import build_scenario

DEFAULT_BRUTE_CAP = 12


def _design_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def _add_common_args(parser: argparse.ArgumentParser, outputs: bool = True) -> None:
    parser.add_argument(
        "--config",
        metavar="PATH",
        type=Path,
        help="JSON run configuration (default: scenario defaults)",
    )
    parser.add_argument(
        "--scenario",
        choices=("consensus1", "consensus2", "motor"),
        help="Scenario profile, overrides the config file",
    )
    parser.add_argument("--seed", type=int, metavar="N", help="Master seed (default: config, else 0)")
    if not outputs:
        return
    parser.add_argument(
        "--out",
        metavar="PATH",
        type=Path,
        help="Output directory (default: config output_dir)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        metavar="N",
        help="Worker threads for cost evaluations (default: CPU count)",
    )
    parser.add_argument(
        "--force",
        action="store_true",
        help="Overwrite existing output files",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcodesign",
        description="Quantum-assisted online co-design of controller gains and Lyapunov certificates",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v info, -vv debug)",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    run_parser = subparsers.add_parser("run", help="Run the online co-design loop")
    _add_common_args(run_parser)

    baseline_parser = subparsers.add_parser("baseline", help="Simulate a fixed design without redesign")
    _add_common_args(baseline_parser)
    baseline_parser.add_argument(
        "--design",
        type=_design_list,
        metavar="P1,P2,...",
        help="Fixed design vector, gains first (default: config baseline.design)",
    )
    baseline_parser.add_argument(
        "--horizon",
        type=float,
        metavar="SECONDS",
        help="Simulation horizon (default: timing.t_max)",
    )

    brute_parser = subparsers.add_parser(
        "brute",
        help="Run the loop and compare each winner with the exhaustive encoded minimum",
    )
    _add_common_args(brute_parser)
    brute_parser.add_argument(
        "--cap",
        type=int,
        default=DEFAULT_BRUTE_CAP,
        metavar="N",
        help="Largest register size enumerated exhaustively (default: %(default)s)",
    )

    print_parser = subparsers.add_parser("print-config", help="Print the fully defaulted configuration")
    _add_common_args(print_parser, outputs=False)

    doctor_parser = subparsers.add_parser(
        "doctor",
        help="Check the Python environment",
    )
    doctor_parser.add_argument(
        "--json",
        action="store_true",
        help="Emit results as JSON on stderr",
    )

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = parse_config(args.config, args.scenario)
    out = getattr(args, "out", None)
    return with_overrides(
        cfg,
        seed=args.seed,
        threads=getattr(args, "threads", None),
        output_dir=str(out) if out is not None else None,
    )


def _fail(exc: CodesignError) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return exit_code_for(exc) or 1


def handle_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args)
        out_dir = Path(cfg.output_dir)
        ensure_writable(run_targets(out_dir, cfg), args.force)
        scenario = build_scenario(cfg)
        log = run_simulation(scenario, PipelineSettings.from_config(cfg))
        write_run(
            out_dir, cfg, log, scenario.parameter_names, scenario.plant.state_names,
            scenario.plant.input_names, "run", args.force,
        )
    except CodesignError as exc:
        return _fail(exc)

    final = log.epochs[-1] if log.epochs else None
    print(f"Run finished: {len(log.epochs)} epochs ({log.reason})")
    if final is not None:
        print(f"  last epoch cost: {final.exact_cost:.6g}, error metric at its start: {final.error_metric:.6g}")
    print(f"Files written to: {out_dir}")
    return 0


def handle_baseline(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args)
        design = args.design if args.design is not None else cfg.baseline.design
        if len(design) != len(cfg.parameter_names):
            raise ValidationError(
                "--design", f"needs {len(cfg.parameter_names)} values ({', '.join(cfg.parameter_names)})"
            )
        horizon = args.horizon if args.horizon is not None else cfg.timing.t_max
        out_dir = Path(cfg.output_dir)
        ensure_writable(run_targets(out_dir, cfg), args.force)
        scenario = build_scenario(cfg)
        log = run_fixed_baseline(scenario, design, horizon)
        write_run(
            out_dir, cfg, log, scenario.parameter_names, scenario.plant.state_names,
            scenario.plant.input_names, "baseline", args.force,
        )
    except CodesignError as exc:
        return _fail(exc)

    print(f"Baseline finished: {len(log.epochs)} intervals, design {', '.join(f'{v:g}' for v in design)}")
    print(f"Files written to: {out_dir}")
    return 0


def handle_brute(args: argparse.Namespace) -> int:
    rows: List[BruteRow] = []
    try:
        cfg = load_config(args)
        if cfg.encoding.mode == FIXED:
            n_q = cfg.encoding.fixed_bits * len(cfg.parameter_names)
            if n_q > args.cap:
                raise CapExceeded(f"encoding needs {n_q} qubits, cap is {args.cap}")
        out_dir = Path(cfg.output_dir)
        ensure_writable(run_targets(out_dir, cfg, extra=(BRUTE_FILE,)), args.force)
        scenario = build_scenario(cfg)
        settings = PipelineSettings.from_config(cfg)

        with ThreadPoolExecutor(max_workers=settings.threads) as pool:

            def compare(record: EpochRecord, x_k) -> None:
                if record.n_qubits > args.cap:
                    raise CapExceeded(f"epoch {record.index} needs {record.n_qubits} qubits, cap is {args.cap}")
                brute_min, _ = brute_force_minimum(record, x_k, scenario, pool)
                rows.append(BruteRow(record.index, record.n_qubits, record.exact_cost, brute_min))

            log = run_simulation(scenario, settings, epoch_hook=compare)

        write_run(
            out_dir, cfg, log, scenario.parameter_names, scenario.plant.state_names,
            scenario.plant.input_names, "brute", args.force,
        )
        write_brute(out_dir / BRUTE_FILE, rows, args.force)
    except CodesignError as exc:
        return _fail(exc)

    worst = max((r.gap for r in rows), default=0.0)
    print(f"Brute-force comparison over {len(rows)} epochs, largest gap {worst:.6g}")
    print(f"Files written to: {out_dir}")
    return 0


def handle_print_config(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args)
    except CodesignError as exc:
        return _fail(exc)
    print(dump_config(cfg))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.command == "run":
        return handle_run(args)
    if args.command == "baseline":
        return handle_baseline(args)
    if args.command == "brute":
        return handle_brute(args)
    if args.command == "print-config":
        return handle_print_config(args)
    if args.command == "doctor":
        return run_doctor(json_output=args.json)

    parser.print_help()
    return 0


if __name__ == "__main__":
    sys.exit(main())
