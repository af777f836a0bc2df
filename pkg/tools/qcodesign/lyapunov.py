"""Parametric Lyapunov candidates, their flow derivatives and decay expressions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .arrays import FloatArray
from .errors import DomainError

FIRST_ORDER = "first_order_quartic"
SECOND_ORDER = "second_order_disagreement"
MOTOR = "motor_tracking"

THETA_LENGTHS = {FIRST_ORDER: 2, SECOND_ORDER: 3, MOTOR: 2}

# Samples closer than this to the equilibrium are left out of the penalties.
EQUILIBRIUM_RADIUS = 1e-9

TrackingMap = Callable[[float, FloatArray], Sequence[float]]


@dataclass(frozen=True)
class LyapunovCandidate:
    """V(x; theta), linear in theta and zero at the shifted equilibrium.

    ``laplacian`` is required by the disagreement candidate, ``tracking`` maps
    ``(t, x)`` to ``(e_psi, e_omega, e1, e2)`` for the motor candidate.
    """

    kind: str
    theta: Tuple[float, ...]
    laplacian: Optional[FloatArray] = None
    tracking: Optional[TrackingMap] = None

    def __post_init__(self) -> None:
        expected = THETA_LENGTHS.get(self.kind)
        if expected is None:
            raise ValueError(f"unknown Lyapunov candidate kind '{self.kind}'")
        if len(self.theta) != expected:
            raise ValueError(f"{self.kind} needs {expected} coefficients, got {len(self.theta)}")
        if self.kind == SECOND_ORDER and self.laplacian is None:
            raise ValueError("second_order_disagreement needs a Laplacian")
        if self.kind == MOTOR and self.tracking is None:
            raise ValueError("motor_tracking needs a tracking-error map")


STABILITY_KINDS = ("asymptotic", "exponential", "finite_time", "fixed_time")


@dataclass(frozen=True)
class StabilitySpec:
    kind: str = "asymptotic"
    alpha: float = 1.0
    c: float = 1.0
    gamma: float = 0.5
    a: float = 1.0
    b: float = 1.0
    p: float = 0.5
    q: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in STABILITY_KINDS:
            raise DomainError(f"unknown stability kind '{self.kind}'")
        if self.kind == "exponential" and not self.alpha > 0:
            raise DomainError("exponential decay needs alpha > 0")
        if self.kind == "finite_time" and not (self.c > 0 and 0 < self.gamma < 1):
            raise DomainError("finite-time decay needs c > 0 and 0 < gamma < 1")
        if self.kind == "fixed_time" and not (
            self.a > 0 and self.b > 0 and 0 < self.p < 1 and self.q > 1
        ):
            raise DomainError("fixed-time decay needs a, b > 0, 0 < p < 1 and q > 1")


def _split_disagreement(cand: LyapunovCandidate, x: FloatArray) -> Tuple[FloatArray, FloatArray]:
    n = cand.laplacian.shape[0]
    return cand.laplacian @ x[:n], cand.laplacian @ x[n:]


def eval_V(cand: LyapunovCandidate, x: FloatArray, t: float = 0.0) -> float:
    x = np.asarray(x, dtype=float)
    if cand.kind == FIRST_ORDER:
        th2, th4 = cand.theta
        return float(0.5 * th2 * (x @ x) + 0.25 * th4 * np.sum(x ** 4))
    if cand.kind == SECOND_ORDER:
        thx2, thv2, thx4 = cand.theta
        lx, lv = _split_disagreement(cand, x)
        return float(0.5 * thx2 * (lx @ lx) + 0.5 * thv2 * (lv @ lv) + 0.25 * thx4 * np.sum(lx ** 4))
    th_psi, th_omega = cand.theta
    e_psi, e_omega, e1, e2 = cand.tracking(t, x)
    return float(th_psi * e_psi ** 2 + th_omega * e_omega ** 2 + e1 ** 2 + e2 ** 2)


def grad_V(cand: LyapunovCandidate, x: FloatArray) -> FloatArray:
    x = np.asarray(x, dtype=float)
    if cand.kind == FIRST_ORDER:
        th2, th4 = cand.theta
        return th2 * x + th4 * x ** 3
    if cand.kind == SECOND_ORDER:
        thx2, thv2, thx4 = cand.theta
        L = cand.laplacian
        lx, lv = _split_disagreement(cand, x)
        return np.concatenate([L.T @ (thx2 * lx + thx4 * lx ** 3), L.T @ (thv2 * lv)])
    raise ValueError("motor_tracking has no analytic gradient")


def eval_Vdot(cand: LyapunovCandidate, x: FloatArray, dx: FloatArray, t: float = 0.0, h: float = 1e-5) -> float:
    """Rate of V along the flow ``dx``.

    The motor candidate depends on time-varying references, so its rate is a
    central difference along the flow with time advanced alongside.
    """
    if cand.kind != MOTOR:
        return float(grad_V(cand, x) @ np.asarray(dx, dtype=float))
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    return (eval_V(cand, x + h * dx, t + h) - eval_V(cand, x - h * dx, t - h)) / (2.0 * h)


def equilibrium_distance(cand: LyapunovCandidate, x: FloatArray, t: float = 0.0) -> float:
    if cand.kind == FIRST_ORDER:
        return float(np.linalg.norm(x))
    if cand.kind == SECOND_ORDER:
        lx, lv = _split_disagreement(cand, np.asarray(x, dtype=float))
        return float(np.hypot(np.linalg.norm(lx), np.linalg.norm(lv)))
    return float(np.linalg.norm(cand.tracking(t, x)))


def decay_expression(spec: StabilitySpec, V: float, Vdot: float) -> float:
    if spec.kind == "asymptotic":
        return Vdot
    if spec.kind == "exponential":
        return Vdot + spec.alpha * V
    if V < 0:
        raise DomainError(f"{spec.kind} decay is undefined for V = {V} < 0")
    if spec.kind == "finite_time":
        return Vdot + spec.c * V ** spec.gamma
    return Vdot + spec.a * V ** spec.p + spec.b * V ** spec.q


def certificate_samples(
    cand: LyapunovCandidate, times: FloatArray, states: FloatArray, flows: FloatArray
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """V, V-dot and equilibrium distance on every trajectory sample.

    For the motor candidate V-dot is the grid derivative of V along the
    trajectory.
    """
    V = np.array([eval_V(cand, x, float(t)) for t, x in zip(times, states)])
    dist = np.array([equilibrium_distance(cand, x, float(t)) for t, x in zip(times, states)])
    if cand.kind == MOTOR:
        Vdot = np.gradient(V, times) if len(times) > 1 else np.zeros_like(V)
    else:
        Vdot = np.array([eval_Vdot(cand, x, dx) for x, dx in zip(states, flows)])
    return V, Vdot, dist
