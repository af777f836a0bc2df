"""Penalized short-horizon objective used by calibration and screening."""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .arrays import FloatArray
from .errors import IntegrationError
from .integrate import Trajectory, rk45_integrate
from .lyapunov import EQUILIBRIUM_RADIUS, LyapunovCandidate, StabilitySpec, certificate_samples, decay_expression

if TYPE_CHECKING:
    from .scenarios import Scenario

logger = logging.getLogger(__name__)

BARRIER = 1e12


@dataclass(frozen=True)
class CostWeights:
    w_perf_error: Tuple[float, ...] = (1.0,)
    w_control: float = 0.1
    w_lyap: float = 1.0
    eps_margin: float = 1e-6
    w_constraint: float = 1.0

    def __post_init__(self) -> None:
        if min(self.w_perf_error, default=0.0) < 0 or self.w_control < 0 or self.w_lyap < 0:
            raise ValueError("cost weights must be non-negative")
        if self.w_constraint < 0:
            raise ValueError("constraint weight must be non-negative")
        if not self.eps_margin > 0:
            raise ValueError("eps_margin must be positive")


@dataclass(frozen=True)
class EpochContext:
    t_start: float
    x_start: FloatArray
    horizon: float
    n_grid: int

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def t_end(self) -> float:
        return self.t_start + self.horizon


def performance_integral(traj: Trajectory, error_signal: FloatArray, w: CostWeights) -> float:
    eps = np.asarray(error_signal, dtype=float).reshape(len(traj), -1)
    weights = np.broadcast_to(np.asarray(w.w_perf_error, dtype=float), (eps.shape[1],))
    integrand = (eps ** 2) @ weights
    if traj.controls.size:
        integrand = integrand + w.w_control * np.sum(traj.controls ** 2, axis=1)
    return float(trapezoid(integrand, traj.times))


def lyapunov_penalties(
    cand: LyapunovCandidate,
    spec: StabilitySpec,
    traj: Trajectory,
    flows: FloatArray,
    eps_margin: float,
) -> Tuple[float, float]:
    V, Vdot, dist = certificate_samples(cand, traj.times, traj.states, flows)
    keep = dist >= EQUILIBRIUM_RADIUS
    if not np.any(keep):
        return 0.0, 0.0
    V, Vdot = V[keep], Vdot[keep]
    pi_v = float(np.sum(np.maximum(0.0, eps_margin - V) ** 2))
    # Negative V is already charged by pi_v; fractional powers see it clamped.
    psi = np.array([decay_expression(spec, max(v, 0.0), vd) for v, vd in zip(V, Vdot)])
    pi_vdot = float(np.sum(np.maximum(0.0, psi) ** 2))
    return pi_v, pi_vdot


ConstraintFunction = Callable[[float, FloatArray, FloatArray, FloatArray], FloatArray]


def constraint_penalty(
    constraints: Sequence[ConstraintFunction], traj: Trajectory, p: FloatArray
) -> float:
    """Sum of squared violations of ``c(t, x, u, p) <= 0`` over the samples."""
    total = 0.0
    for c in constraints:
        for t, x, u in zip(traj.times, traj.states, traj.controls):
            total += float(np.sum(np.maximum(0.0, np.asarray(c(float(t), x, u, p), dtype=float)) ** 2))
    return total


def simulate_design(p: FloatArray, ctx: EpochContext, scenario: "Scenario", n_grid: Optional[int] = None) -> Trajectory:
    field = scenario.closed_loop(p)
    return rk45_integrate(
        lambda t, x: field(t, x)[0],
        ctx.x_start,
        ctx.t_start,
        ctx.t_end,
        n_grid or ctx.n_grid,
        scenario.timing.rtol,
        scenario.timing.atol,
        control=lambda t, x: field(t, x)[1],
    )


def penalized_cost(p: FloatArray, ctx: EpochContext, scenario: "Scenario", w: CostWeights) -> float:
    region = scenario.initial_region
    p = np.clip(np.asarray(p, dtype=float), region.lower, region.upper)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        try:
            traj = simulate_design(p, ctx, scenario)
        except IntegrationError as exc:
            logger.debug("design %s rejected: %s", p, exc)
            return BARRIER
        field = scenario.closed_loop(p)
        flows = np.array([field(float(t), x)[0] for t, x in zip(traj.times, traj.states)])
        gains = scenario.gains(p)
        perf = performance_integral(traj, scenario.plant.error_components(gains, traj.times, traj.states), w)
        pi_v, pi_vdot = lyapunov_penalties(scenario.certificate(p), scenario.stability, traj, flows, w.eps_margin)
        pi_c = constraint_penalty(scenario.constraints, traj, p)
        value = perf + w.w_lyap * (pi_v + pi_vdot) + w.w_constraint * pi_c
    if not np.isfinite(value):
        return BARRIER
    return float(min(value, BARRIER))


def evaluate_many(
    objective: Callable[[FloatArray], float],
    points: Sequence[FloatArray],
    executor: Optional[Executor] = None,
) -> FloatArray:
    """Evaluates ``objective`` on every point, keeping input order."""
    if executor is None:
        return np.array([objective(p) for p in points], dtype=float)
    return np.array(list(executor.map(objective, points)), dtype=float)
