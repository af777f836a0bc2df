"""Black-Hole population search used to contract the design intervals."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .arrays import DesignVector, FloatArray, Objective

logger = logging.getLogger(__name__)

BatchObjective = Callable[[FloatArray], FloatArray]


@dataclass(frozen=True)
class SearchRegion:
    lower: FloatArray
    upper: FloatArray
    frozen: FloatArray

    def __post_init__(self) -> None:
        if self.lower.shape != self.upper.shape or self.lower.shape != self.frozen.shape:
            raise ValueError("region bounds and flags must share one shape")
        if np.any(self.lower > self.upper):
            raise ValueError("region lower bound exceeds upper bound")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float]) -> "SearchRegion":
        lo = np.array(lower, dtype=float)
        return cls(lo, np.array(upper, dtype=float), np.zeros(lo.shape, dtype=bool))

    @property
    def width(self) -> FloatArray:
        return self.upper - self.lower

    @property
    def n_params(self) -> int:
        return int(self.lower.shape[0])

    def clip(self, p: FloatArray) -> FloatArray:
        return np.clip(p, self.lower, self.upper)

    def contains(self, p: FloatArray) -> bool:
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


@dataclass(frozen=True)
class BhSettings:
    population: int = 20
    max_iters: int = 100
    freeze_thresholds: Tuple[float, ...] = (5.0,)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if min(self.freeze_thresholds) <= 0:
            raise ValueError("freeze thresholds must be positive")

    def thresholds_for(self, n_params: int) -> FloatArray:
        return np.broadcast_to(np.asarray(self.freeze_thresholds, dtype=float), (n_params,)).copy()


def init_population(region: SearchRegion, n: int, rng: np.random.Generator) -> FloatArray:
    return region.lower + rng.random((n, region.n_params)) * region.width


def bh_step(
    pop: FloatArray, costs: FloatArray, region: SearchRegion, rng: np.random.Generator
) -> Tuple[FloatArray, int]:
    """Pulls every candidate toward the incumbent by a random fraction."""
    pop = np.asarray(pop, dtype=float)
    best = int(np.argmin(costs))
    xi = rng.random(pop.shape)
    new_pop = np.clip(pop + xi * (pop[best] - pop), region.lower, region.upper)
    new_pop[best] = pop[best]
    return new_pop, best


def recalibrate(pop: FloatArray, prev: SearchRegion, thresholds: FloatArray) -> SearchRegion:
    pop = np.asarray(pop, dtype=float)
    lower = np.where(prev.frozen, prev.lower, pop.min(axis=0))
    upper = np.where(prev.frozen, prev.upper, pop.max(axis=0))
    frozen = prev.frozen | ((upper - lower) <= thresholds)
    return SearchRegion(lower, upper, frozen)


def calibrate(
    objective: Objective,
    region: SearchRegion,
    s: BhSettings,
    rng: Optional[np.random.Generator] = None,
    evaluate: Optional[BatchObjective] = None,
) -> Tuple[SearchRegion, DesignVector, float]:
    """Runs the calibration loop and returns (region, best point, best cost).

    ``evaluate`` maps a stack of designs to their costs; it defaults to a
    serial loop over ``objective``. It must not draw from ``rng``.
    """
    if rng is None:
        rng = np.random.default_rng(s.seed)
    if evaluate is None:
        evaluate = lambda points: np.array([objective(p) for p in points], dtype=float)  # noqa: E731
    thresholds = s.thresholds_for(region.n_params)

    pop = init_population(region, s.population, rng)
    costs = np.asarray(evaluate(pop), dtype=float)
    best = int(np.argmin(costs))
    best_point, best_cost = pop[best].copy(), float(costs[best])
    current = recalibrate(pop, region, thresholds)

    for it in range(s.max_iters):
        if np.all(current.frozen):
            logger.debug("black-hole: all coordinates frozen after %d iterations", it)
            break
        pop, best = bh_step(pop, costs, current, rng)
        current = recalibrate(pop, current, thresholds)
        others = np.arange(len(pop)) != best
        new_costs = costs.copy()
        new_costs[others] = evaluate(pop[others])
        costs = new_costs
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_point, best_cost = pop[i].copy(), float(costs[i])
        logger.debug("black-hole iter %d: best cost %.6g, widths %s", it, best_cost, current.width)

    return current, best_point, best_cost
