"""CSV and metadata writers for run logs."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from . import __version__
from .codesign import RunLog
from .config import RunConfig, config_to_dict
from .errors import OutputError

EPOCHS_FILE = "epochs.csv"
TRAJECTORY_FILE = "trajectory.csv"
RUN_META_FILE = "run_meta.json"
QITE_TRACE_FILE = "qite_trace.csv"
BRUTE_FILE = "brute.csv"


@dataclass(frozen=True)
class BruteRow:
    epoch: int
    n_qubits: int
    winner_cost: float
    brute_min: float

    @property
    def gap(self) -> float:
        return self.winner_cost - self.brute_min


def fmt(value: Any) -> str:
    """Round-trip decimal text (17 significant digits) for floats."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.17g}"


def _guard(path: Path, overwrite: bool) -> None:
    if path.exists() and not overwrite:
        raise OutputError(f"File '{path}' already exists. Use --force to overwrite.")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], overwrite: bool) -> None:
    _guard(path, overwrite)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def epochs_header(parameter_names: Sequence[str]) -> List[str]:
    return [
        "epoch",
        "t_start",
        *parameter_names,
        "exact_cost",
        "surrogate_min",
        "qite_final_energy",
        "n_qubits",
        "error_metric",
    ]


def write_epochs(path: Path, log: RunLog, parameter_names: Sequence[str], overwrite: bool = False) -> None:
    rows = (
        [
            rec.index,
            rec.t_start,
            *[float(v) for v in rec.design],
            rec.exact_cost,
            rec.surrogate_min_seen,
            rec.qite_final_energy,
            rec.n_qubits,
            rec.error_metric,
        ]
        for rec in log.epochs
    )
    write_rows(path, epochs_header(parameter_names), rows, overwrite)


def write_trajectory(
    path: Path,
    log: RunLog,
    state_names: Sequence[str],
    input_names: Sequence[str],
    overwrite: bool = False,
) -> None:
    traj = log.trajectory
    header = ["t", *state_names, *input_names, "V_value"]
    rows = (
        [t, *[float(v) for v in x], *[float(v) for v in u], float(V)]
        for t, x, u, V in zip(traj.times, traj.states, traj.controls, log.certificate_values)
    )
    write_rows(path, header, rows, overwrite)


def write_qite_trace(path: Path, log: RunLog, overwrite: bool = False) -> None:
    rows = ([rec.index, step, energy] for rec in log.epochs for step, energy in enumerate(rec.energy_trace))
    write_rows(path, ["epoch", "step", "energy"], rows, overwrite)


def write_brute(path: Path, rows: Sequence[BruteRow], overwrite: bool = False) -> None:
    write_rows(
        path,
        ["epoch", "n_qubits", "winner_cost", "brute_min", "gap"],
        ([r.epoch, r.n_qubits, r.winner_cost, r.brute_min, r.gap] for r in rows),
        overwrite,
    )


def run_meta(cfg: RunConfig, log: RunLog, command: str) -> Dict[str, Any]:
    return {
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "terminated_early": log.terminated_early,
        "reason": log.reason,
        "epochs": len(log.epochs),
        "config": config_to_dict(cfg),
    }


def write_run_meta(path: Path, cfg: RunConfig, log: RunLog, command: str, overwrite: bool = False) -> None:
    _guard(path, overwrite)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(run_meta(cfg, log, command), indent=2) + "\n")


def run_targets(out_dir: Path, cfg: RunConfig, extra: Sequence[str] = ()) -> List[Path]:
    names = [EPOCHS_FILE, TRAJECTORY_FILE, RUN_META_FILE]
    if cfg.output.energy_trace:
        names.append(QITE_TRACE_FILE)
    return [out_dir / name for name in (*names, *extra)]


def ensure_writable(paths: Iterable[Path], overwrite: bool) -> None:
    for path in paths:
        _guard(path, overwrite)


def write_run(
    out_dir: Path,
    cfg: RunConfig,
    log: RunLog,
    parameter_names: Sequence[str],
    state_names: Sequence[str],
    input_names: Sequence[str],
    command: str,
    overwrite: bool = False,
) -> List[Path]:
    """Writes every artifact of a run and returns the written paths."""
    targets = run_targets(out_dir, cfg)
    ensure_writable(targets, overwrite)
    write_epochs(targets[0], log, parameter_names, overwrite)
    write_trajectory(targets[1], log, state_names, input_names, overwrite)
    write_run_meta(targets[2], cfg, log, command, overwrite)
    if cfg.output.energy_trace:
        write_qite_trace(targets[3], log, overwrite)
    return targets
