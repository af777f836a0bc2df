"""Adaptive Dormand-Prince 5(4) integration with dense output on a fixed grid."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .arrays import FloatArray, RhsFunction
from .errors import NonFiniteState, StepSizeUnderflow

logger = logging.getLogger(__name__)

# Butcher tableau of the 7-stage pair (last stage is FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])

# Quartic continuous extension of the pair, columns are powers 1..4 of the
# normalized step position.
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
INITIAL_STEP_FRACTION = 1e-3
UNDERFLOW_FRACTION = 1e-14
_ERR_EXP = 0.7 / 5
_PREV_EXP = 0.4 / 5


@dataclass(frozen=True)
class Trajectory:
    times: FloatArray
    states: FloatArray
    controls: FloatArray

    @property
    def final_state(self) -> FloatArray:
        return self.states[-1]

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @classmethod
    def single_point(
        cls, t: float, x: FloatArray, u: Optional[FloatArray] = None
    ) -> "Trajectory":
        x = np.asarray(x, dtype=float)
        u = np.zeros(0) if u is None else np.asarray(u, dtype=float)
        return cls(np.array([float(t)]), x[None, :].copy(), u[None, :].copy())

    @classmethod
    def stitch(cls, segments: Sequence["Trajectory"]) -> "Trajectory":
        """Joins consecutive segments, dropping each repeated start sample."""
        if not segments:
            raise ValueError("no segments to stitch")
        times = [segments[0].times]
        states = [segments[0].states]
        controls = [segments[0].controls]
        for seg in segments[1:]:
            times.append(seg.times[1:])
            states.append(seg.states[1:])
            controls.append(seg.controls[1:])
        return cls(np.concatenate(times), np.concatenate(states), np.concatenate(controls))


def _error_norm(err: FloatArray, y: FloatArray, y_new: FloatArray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def rk45_integrate(
    rhs: RhsFunction,
    x0: Sequence[float],
    t_start: float,
    t_end: float,
    n_grid: int,
    rtol: float = 1e-6,
    atol: float = 1e-8,
    control: Optional[Callable[[float, FloatArray], FloatArray]] = None,
) -> Trajectory:
    """Integrates ``dx/dt = rhs(t, x)`` and samples it on a uniform grid.

    The accepted step sequence only depends on the vector field, the span and
    the tolerances; grid samples come from the pair's dense output. When
    ``control`` is given it is evaluated at every grid sample.
    """
    if not t_end > t_start:
        raise ValueError("t_end must be greater than t_start")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")

    span = t_end - t_start
    h_min = UNDERFLOW_FRACTION * span
    grid = np.linspace(t_start, t_end, n_grid)
    grid[0], grid[-1] = t_start, t_end

    y = np.array(x0, dtype=float)
    n = y.shape[0]
    out = np.empty((n_grid, n))
    out[0] = y
    next_idx = 1

    K = np.empty((7, n))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        f = np.asarray(rhs(t_start, y), dtype=float)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
            raise NonFiniteState(f"non-finite state or derivative at t={t_start}")

        t = t_start
        h = INITIAL_STEP_FRACTION * span
        prev_norm = 1.0
        rejected = False
        n_accepted = n_rejected = 0

        while t < t_end:
            if h < h_min:
                raise StepSizeUnderflow(f"step size {h:.3e} below {h_min:.3e} at t={t}")
            last = t + h >= t_end
            if last:
                h = t_end - t

            K[0] = f
            for s in range(1, 6):
                K[s] = rhs(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
            y_new = y + h * (_B[:6] @ K[:6])
            t_new = t_end if last else t + h
            K[6] = rhs(t_new, y_new)

            if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y_new))):
                raise NonFiniteState(f"non-finite state or derivative near t={t}")

            norm = _error_norm(h * (K.T @ _E), y, y_new, rtol, atol)
            if norm <= 1.0:
                Q = K.T @ _P
                while next_idx < n_grid and grid[next_idx] <= t_new:
                    tg = grid[next_idx]
                    if tg == t_new:
                        out[next_idx] = y_new
                    else:
                        x = (tg - t) / h
                        out[next_idx] = y + h * (Q @ np.array([x, x * x, x ** 3, x ** 4]))
                    next_idx += 1

                if norm == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * norm ** -_ERR_EXP * prev_norm ** _PREV_EXP
                    factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
                if rejected:
                    factor = min(1.0, factor)
                prev_norm = max(norm, 1e-4)
                t, y, f = t_new, y_new, K[6].copy()
                h *= factor
                rejected = False
                n_accepted += 1
            else:
                h *= max(MIN_FACTOR, SAFETY * norm ** -0.2)
                rejected = True
                n_rejected += 1

    out[-1] = y
    logger.debug("rk45 [%g, %g]: %d accepted, %d rejected steps", t_start, t_end, n_accepted, n_rejected)

    if control is None:
        controls = np.zeros((n_grid, 0))
    else:
        controls = np.array([np.asarray(control(tg, xg), dtype=float) for tg, xg in zip(grid, out)])
        controls = controls.reshape(n_grid, -1)
    return Trajectory(grid, out, controls)
