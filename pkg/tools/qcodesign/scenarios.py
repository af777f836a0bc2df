"""Scenario bundles: plant adapter, certificate family, region and weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .arrays import ClosedLoop, DesignVector, FloatArray
from .blackhole import SearchRegion
from .config import ConsensusPlantConfig, MotorPlantConfig, RunConfig
from .cost import ConstraintFunction, CostWeights
from .lyapunov import FIRST_ORDER, MOTOR, SECOND_ORDER, LyapunovCandidate, StabilitySpec
from .plants import (
    FirstOrderConsensus,
    InductionMotorDrive,
    MotorParams,
    MotorReferences,
    SecondOrderConsensus,
    ring_laplacian,
)

Plant = Union[FirstOrderConsensus, SecondOrderConsensus, InductionMotorDrive]

CERTIFICATE_KINDS = {"consensus1": FIRST_ORDER, "consensus2": SECOND_ORDER, "motor": MOTOR}


@dataclass(frozen=True)
class Timing:
    redesign_interval: float
    t_max: float
    horizon: float
    n_grid: int
    rtol: float = 1e-6
    atol: float = 1e-8

    @property
    def n_epochs(self) -> int:
        return int(np.ceil(self.t_max / self.redesign_interval - 1e-9))


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: Plant
    parameter_names: Tuple[str, ...]
    initial_region: SearchRegion
    stability: StabilitySpec
    weights: CostWeights
    x0: FloatArray
    timing: Timing
    stop_threshold: Optional[float] = None
    constraints: Tuple[ConstraintFunction, ...] = ()

    @property
    def n_gains(self) -> int:
        return len(self.plant.gain_names)

    def gains(self, p: DesignVector) -> FloatArray:
        return np.asarray(p, dtype=float)[: self.n_gains]

    def theta(self, p: DesignVector) -> Tuple[float, ...]:
        return tuple(float(v) for v in np.asarray(p, dtype=float)[self.n_gains:])

    def closed_loop(self, p: DesignVector) -> ClosedLoop:
        return self.plant.closed_loop(self.gains(p))

    def certificate(self, p: DesignVector) -> LyapunovCandidate:
        kind = CERTIFICATE_KINDS[self.name]
        if kind == FIRST_ORDER:
            return LyapunovCandidate(kind, self.theta(p))
        if kind == SECOND_ORDER:
            return LyapunovCandidate(kind, self.theta(p), laplacian=self.plant.graph.laplacian)
        gains = self.gains(p)
        tracking: Callable[[float, FloatArray], Sequence[float]] = (
            lambda t, x: tuple(self.plant.tracking_errors(gains, t, x))
        )
        return LyapunovCandidate(kind, self.theta(p), tracking=tracking)

    def error_metric(self, t: float, x: FloatArray) -> float:
        return self.plant.error_metric(t, x)

    def should_stop(self, t: float, x: FloatArray) -> bool:
        return self.stop_threshold is not None and self.error_metric(t, x) <= self.stop_threshold


def _build_plant(cfg: RunConfig) -> Tuple[Plant, FloatArray]:
    plant_cfg = cfg.plant
    if isinstance(plant_cfg, MotorPlantConfig):
        nominal = MotorParams(
            Rs=plant_cfg.Rs,
            Rr=plant_cfg.Rr,
            Ls=plant_cfg.Ls,
            Lr=plant_cfg.Lr,
            Lm=plant_cfg.Lm,
            J=plant_cfg.J,
            pole_pairs=plant_cfg.pole_pairs,
        )
        refs = MotorReferences(
            flux_ref=plant_cfg.flux_ref,
            speed_times=plant_cfg.speed_times,
            speed_values=plant_cfg.speed_values,
            load_time=plant_cfg.load_time,
            load_after=plant_cfg.load_torque,
            psi_floor=plant_cfg.psi_floor,
        )
        drive = InductionMotorDrive(nominal, nominal.with_mutual_inductance(plant_cfg.Lm_plant), refs)
        return drive, np.array(plant_cfg.x0, dtype=float)

    assert isinstance(plant_cfg, ConsensusPlantConfig)
    graph = ring_laplacian(plant_cfg.n_agents)
    if cfg.scenario == "consensus1":
        return FirstOrderConsensus(graph), np.array(plant_cfg.x0, dtype=float)
    x0 = np.concatenate([plant_cfg.x0, plant_cfg.v0]).astype(float)
    return SecondOrderConsensus(graph, plant_cfg.drag_a, plant_cfg.drag_b), x0


def build_scenario(cfg: RunConfig, constraints: Sequence[ConstraintFunction] = ()) -> Scenario:
    plant, x0 = _build_plant(cfg)
    w = cfg.weights
    t = cfg.timing
    return Scenario(
        name=cfg.scenario,
        plant=plant,
        parameter_names=cfg.parameter_names,
        initial_region=SearchRegion.from_bounds(cfg.search.lower, cfg.search.upper),
        stability=cfg.stability,
        weights=CostWeights(
            w_perf_error=tuple(w.perf_error),
            w_control=w.control,
            w_lyap=w.lyapunov,
            eps_margin=w.eps_margin,
            w_constraint=w.constraint,
        ),
        x0=x0,
        timing=Timing(t.redesign_interval, t.t_max, t.horizon, t.n_grid, t.rtol, t.atol),
        stop_threshold=cfg.stopping.threshold,
        constraints=tuple(constraints),
    )
