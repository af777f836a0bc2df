"""Epoch orchestration: calibrate, encode, fit, evolve, screen and apply."""

from __future__ import annotations

import logging
import os
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .arrays import Bitstring, DesignVector, FloatArray
from .blackhole import BhSettings, SearchRegion, calibrate
from .config import RunConfig
from .cost import EpochContext, evaluate_many, penalized_cost, simulate_design
from .encoding import BitAllocation, EncodingSettings, all_bitstrings, allocate_bits, bits_to_index, decode, encode_nearest
from .integrate import Trajectory, rk45_integrate
from .lyapunov import eval_V
from .quantum import Ansatz, QiteSettings, prepare_state, top_k_bitstrings, varqite_run
from .scenarios import Scenario
from .surrogate import SurrogateSettings, fit_quadratic, qubo_to_ising, sample_training_set

logger = logging.getLogger(__name__)

# Applied intervals are logged on a grid this many times finer than the
# short-horizon evaluation grid.
APPLIED_GRID_FACTOR = 10


@dataclass(frozen=True)
class PipelineSettings:
    blackhole: BhSettings = field(default_factory=BhSettings)
    encoding: EncodingSettings = field(default_factory=EncodingSettings)
    surrogate: SurrogateSettings = field(default_factory=SurrogateSettings)
    qite: QiteSettings = field(default_factory=QiteSettings)
    reps: int = 2
    top_k: int = 32
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_config(cls, cfg: RunConfig, threads: Optional[int] = None) -> "PipelineSettings":
        bh = cfg.blackhole
        q = cfg.qite
        return cls(
            blackhole=BhSettings(bh.population, bh.max_iters, tuple(bh.freeze_thresholds), cfg.seed),
            encoding=cfg.encoding,
            surrogate=cfg.surrogate,
            qite=QiteSettings(q.tau, q.steps, q.ridge, cfg.seed, q.init_scale),
            reps=q.reps,
            top_k=q.top_k,
            seed=cfg.seed,
            threads=threads or cfg.threads or os.cpu_count() or 1,
        )


@dataclass(frozen=True)
class EpochRecord:
    index: int
    t_start: float
    calibrated_region: SearchRegion
    n_qubits: int
    design: DesignVector
    exact_cost: float
    surrogate_min_seen: float
    candidate_count: int
    error_metric: float
    qite_final_energy: float
    bit_allocation: Optional[BitAllocation] = None
    bh_best_cost: float = float("nan")
    safety_net_cost: float = float("nan")
    energy_trace: Tuple[float, ...] = ()


@dataclass
class RunLog:
    epochs: List[EpochRecord]
    trajectory: Trajectory
    certificate_values: FloatArray
    terminated_early: bool = False
    reason: str = ""


EpochHook = Callable[[EpochRecord, FloatArray], None]


def epoch_streams(seed_seq: np.random.SeedSequence) -> Tuple[np.random.Generator, ...]:
    """Black-hole, training and QITE generators derived from one epoch seed.

    Children are built from the entropy and spawn key directly so the same
    sequence always yields the same streams.
    """
    return tuple(
        np.random.default_rng(
            np.random.SeedSequence(entropy=seed_seq.entropy, spawn_key=tuple(seed_seq.spawn_key) + (i,))
        )
        for i in range(3)
    )


def epoch_seed(seed: int, epoch: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(epoch,))


def epoch_context(scenario: Scenario, t: float, x: FloatArray) -> EpochContext:
    return EpochContext(t, np.array(x, dtype=float), scenario.timing.horizon, scenario.timing.n_grid)


def _exact_objective(ctx: EpochContext, scenario: Scenario) -> Callable[[DesignVector], float]:
    return lambda p: penalized_cost(p, ctx, scenario, scenario.weights)


def run_epoch(
    x_k: FloatArray,
    t_k: float,
    scenario: Scenario,
    settings: PipelineSettings,
    seed_seq: np.random.SeedSequence,
    index: int = 0,
    executor: Optional[Executor] = None,
) -> Tuple[EpochRecord, DesignVector]:
    ctx = epoch_context(scenario, t_k, x_k)
    objective = _exact_objective(ctx, scenario)
    batch = lambda points: evaluate_many(objective, list(points), executor)  # noqa: E731
    bh_rng, train_rng, qite_rng = epoch_streams(seed_seq)

    region, bh_point, bh_cost = calibrate(objective, scenario.initial_region, settings.blackhole, bh_rng, batch)
    thresholds = settings.blackhole.thresholds_for(region.n_params)
    alloc = allocate_bits(region, thresholds, settings.encoding.mode, settings.encoding.fixed_bits)
    n_q = alloc.n_total

    safety_bits = encode_nearest(bh_point, alloc, region)
    sur = settings.surrogate
    samples = sample_training_set(n_q, sur.factor, sur.minimum, train_rng, required=[safety_bits])
    targets = batch([decode(b, alloc, region) for b in samples])
    known: Dict[int, float] = {bits_to_index(b): float(y) for b, y in zip(samples, targets)}
    surrogate = fit_quadratic(samples, targets, sur.ridge)
    model = qubo_to_ising(surrogate)

    ansatz = Ansatz(n_q, settings.reps)
    theta, trace = varqite_run(model, ansatz, settings.qite, qite_rng)
    top = top_k_bitstrings(prepare_state(ansatz, theta), settings.top_k)

    candidates: List[Bitstring] = []
    seen = set()
    for bits in [b for b, _ in top] + [safety_bits]:
        key = bits_to_index(bits)
        if key not in seen:
            seen.add(key)
            candidates.append(bits)
    designs = [decode(b, alloc, region) for b in candidates]
    missing = [i for i, b in enumerate(candidates) if bits_to_index(b) not in known]
    fresh = batch([designs[i] for i in missing])
    for i, value in zip(missing, fresh):
        known[bits_to_index(candidates[i])] = float(value)
    exact = np.array([known[bits_to_index(b)] for b in candidates])

    winner = int(np.argmin(exact))
    record = EpochRecord(
        index=index,
        t_start=t_k,
        calibrated_region=region,
        n_qubits=n_q,
        design=designs[winner],
        exact_cost=float(exact[winner]),
        surrogate_min_seen=float(np.min(surrogate.evaluate(np.array(candidates)))),
        candidate_count=len(candidates),
        error_metric=scenario.error_metric(t_k, np.asarray(x_k, dtype=float)),
        qite_final_energy=float(trace[-1]),
        bit_allocation=alloc,
        bh_best_cost=bh_cost,
        safety_net_cost=known[bits_to_index(safety_bits)],
        energy_trace=tuple(float(e) for e in trace),
    )
    logger.info(
        "epoch %d t=%.4g: n_q=%d, cost %.6g (calibration %.6g), %d candidates",
        index, t_k, n_q, record.exact_cost, bh_cost, len(candidates),
    )
    return record, record.design


def _apply_design(
    scenario: Scenario, design: DesignVector, t_start: float, t_end: float, x: FloatArray
) -> Tuple[Trajectory, FloatArray]:
    ctx = EpochContext(t_start, np.asarray(x, dtype=float), t_end - t_start, scenario.timing.n_grid)
    seg = simulate_design(design, ctx, scenario, APPLIED_GRID_FACTOR * scenario.timing.n_grid)
    cand = scenario.certificate(design)
    values = np.array([eval_V(cand, xs, float(ts)) for ts, xs in zip(seg.times, seg.states)])
    return seg, values


def run_simulation(
    scenario: Scenario,
    settings: PipelineSettings,
    epoch_hook: Optional[EpochHook] = None,
) -> RunLog:
    timing = scenario.timing
    x = np.array(scenario.x0, dtype=float)
    epochs: List[EpochRecord] = []
    segments: List[Trajectory] = []
    values: List[FloatArray] = []
    terminated_early = False
    reason = "end of horizon reached"

    executor = ThreadPoolExecutor(max_workers=settings.threads) if settings.threads > 1 else None
    try:
        for k in range(timing.n_epochs):
            t_k = k * timing.redesign_interval
            record, design = run_epoch(x, t_k, scenario, settings, epoch_seed(settings.seed, k), k, executor)
            epochs.append(record)
            if epoch_hook is not None:
                epoch_hook(record, x)

            t_next = min((k + 1) * timing.redesign_interval, timing.t_max)
            seg, v = _apply_design(scenario, design, t_k, t_next, x)
            segments.append(seg)
            values.append(v if k == 0 else v[1:])
            x = seg.final_state
            if scenario.should_stop(t_next, x):
                terminated_early = True
                reason = f"stopping threshold {scenario.stop_threshold:g} met at t={t_next:g}"
                logger.info("terminating early: %s", reason)
                break
    finally:
        if executor is not None:
            executor.shutdown()

    if segments:
        trajectory = Trajectory.stitch(segments)
    else:
        trajectory = _initial_point(scenario, np.asarray(scenario.initial_region.lower))
    certificate_values = np.concatenate(values) if values else np.zeros(1)
    return RunLog(epochs, trajectory, certificate_values, terminated_early, reason)


def _initial_point(scenario: Scenario, design: DesignVector) -> Trajectory:
    _, u = scenario.closed_loop(design)(0.0, scenario.x0)
    return Trajectory.single_point(0.0, scenario.x0, u)


def run_fixed_baseline(scenario: Scenario, design: DesignVector, horizon: float) -> RunLog:
    """Integrates once under constant gains, logging each redesign boundary."""
    design = np.asarray(design, dtype=float)
    if design.shape != (len(scenario.parameter_names),):
        raise ValueError(f"baseline design needs {len(scenario.parameter_names)} entries")
    cand = scenario.certificate(design)
    if not horizon > 0:
        traj = _initial_point(scenario, design)
        return RunLog([], traj, np.array([eval_V(cand, scenario.x0, 0.0)]), False, "zero horizon")

    timing = scenario.timing
    n_intervals = int(np.ceil(horizon / timing.redesign_interval - 1e-9))
    per_interval = APPLIED_GRID_FACTOR * timing.n_grid - 1
    n_points = n_intervals * per_interval + 1
    field = scenario.closed_loop(design)
    traj = rk45_integrate(
        lambda t, x: field(t, x)[0],
        scenario.x0,
        0.0,
        horizon,
        n_points,
        timing.rtol,
        timing.atol,
        control=lambda t, x: field(t, x)[1],
    )
    values = np.array([eval_V(cand, xs, float(ts)) for ts, xs in zip(traj.times, traj.states)])

    epochs = []
    nan = float("nan")
    for k in range(n_intervals):
        t_k = k * timing.redesign_interval
        idx = int(round(t_k / horizon * (n_points - 1)))
        x_k = traj.states[idx]
        ctx = epoch_context(scenario, float(traj.times[idx]), x_k)
        epochs.append(
            EpochRecord(
                index=k,
                t_start=float(traj.times[idx]),
                calibrated_region=scenario.initial_region,
                n_qubits=0,
                design=design,
                exact_cost=penalized_cost(design, ctx, scenario, scenario.weights),
                surrogate_min_seen=nan,
                candidate_count=0,
                error_metric=scenario.error_metric(float(traj.times[idx]), x_k),
                qite_final_energy=nan,
            )
        )
    return RunLog(epochs, traj, values, False, "fixed design, no redesign")


def brute_force_minimum(
    record: EpochRecord, x_k: FloatArray, scenario: Scenario, executor: Optional[Executor] = None
) -> Tuple[float, DesignVector]:
    """Exact cost minimum over every decoded bitstring of the epoch encoding."""
    if record.bit_allocation is None:
        raise ValueError("epoch record carries no bit allocation")
    ctx = epoch_context(scenario, record.t_start, x_k)
    region = record.calibrated_region
    designs = [decode(b, record.bit_allocation, region) for b in all_bitstrings(record.n_qubits)]
    costs = evaluate_many(_exact_objective(ctx, scenario), designs, executor)
    best = int(np.argmin(costs))
    return float(costs[best]), designs[best]
