"""Closed-loop plant models: ring consensus networks and the induction-motor drive."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Tuple

import numpy as np

from .arrays import ClosedLoop, FloatArray
from .errors import DomainError, InvalidSize

FD_STEP = 1e-5


@dataclass(frozen=True)
class RingGraph:
    n_agents: int
    laplacian: FloatArray


def ring_laplacian(n: int) -> RingGraph:
    if n < 3:
        raise InvalidSize(f"ring needs at least 3 agents, got {n}")
    eye = np.eye(n)
    adjacency = np.roll(eye, 1, axis=1) + np.roll(eye, -1, axis=1)
    return RingGraph(n, 2.0 * eye - adjacency)


# --- consensus networks ---------------------------------------------------


@dataclass(frozen=True)
class FirstOrderParams:
    alpha: float
    beta: float
    k: float


@dataclass(frozen=True)
class SecondOrderParams:
    kp: float
    kd: float
    drag_a: float = 0.5
    drag_b: float = 0.05


def first_order_rhs(
    x: FloatArray, p: FirstOrderParams, graph: RingGraph
) -> Tuple[FloatArray, FloatArray]:
    coupling = p.k * (graph.laplacian @ x)
    cube = x * x * x
    dx = (1.0 - p.alpha) * x + (1.0 - p.beta) * cube - coupling
    u = -p.alpha * x - p.beta * cube - coupling
    return dx, u


def second_order_rhs(
    z: FloatArray, p: SecondOrderParams, graph: RingGraph
) -> Tuple[FloatArray, FloatArray]:
    n = graph.n_agents
    x, v = z[:n], z[n:]
    u = -p.kp * (graph.laplacian @ x) - p.kd * (graph.laplacian @ v)
    dv = -p.drag_a * v - p.drag_b * np.abs(v) * v + u
    return np.concatenate([v, dv]), u


# --- induction motor --------------------------------------------------------


@dataclass(frozen=True)
class MotorParams:
    Rs: float = 2.3
    Rr: float = 2.5
    Ls: float = 0.25
    Lr: float = 0.25
    Lm: float = 0.24
    J: float = 0.003
    pole_pairs: int = 2

    def __post_init__(self) -> None:
        if not self.L_sigma > 0:
            raise DomainError(f"leakage inductance Ls - Lm^2/Lr must be positive, got {self.L_sigma}")

    @property
    def L_sigma(self) -> float:
        return self.Ls - self.Lm ** 2 / self.Lr

    @property
    def a_s(self) -> float:
        return self.Rs / self.L_sigma + self.Rr * self.Lm ** 2 / (self.L_sigma * self.Lr ** 2)

    @property
    def b_s(self) -> float:
        return self.Rr * self.Lm / (self.L_sigma * self.Lr ** 2)

    @property
    def c_s(self) -> float:
        return self.Lm / (self.L_sigma * self.Lr)

    @property
    def alpha_coef(self) -> float:
        return self.Rr * self.Lm / self.Lr

    @property
    def beta_coef(self) -> float:
        return -self.Rr / self.Lr

    @property
    def gamma_coef(self) -> float:
        return 3.0 * self.pole_pairs * self.Lm / (2.0 * self.J * self.Lr)

    def with_mutual_inductance(self, Lm: float) -> "MotorParams":
        return replace(self, Lm=Lm)


@dataclass(frozen=True)
class MotorDesign:
    k_psi: float
    k_omega: float

    @property
    def k1(self) -> float:
        return 10.0 * self.k_psi

    @property
    def k2(self) -> float:
        return 10.0 * self.k_psi


@dataclass(frozen=True)
class MotorReferences:
    flux_ref: float = 0.9
    speed_times: Tuple[float, ...] = (0.0, 0.8, 1.4, 2.0, 2.2)
    speed_values: Tuple[float, ...] = (0.0, 100.0, 100.0, 50.0, 50.0)
    load_time: float = 0.5
    load_before: float = 0.0
    load_after: float = 1.0
    psi_floor: float = 0.05

    def __post_init__(self) -> None:
        if not self.flux_ref > self.psi_floor > 0:
            raise DomainError("references need flux_ref > psi_floor > 0")
        if len(self.speed_times) != len(self.speed_values) or len(self.speed_times) < 2:
            raise DomainError("speed profile needs matching breakpoints (at least 2)")
        if np.any(np.diff(self.speed_times) <= 0):
            raise DomainError("speed profile breakpoints must be strictly increasing")

    def speed_ref(self, t: float) -> float:
        return float(np.interp(t, self.speed_times, self.speed_values))

    def speed_ref_rate(self, t: float) -> float:
        times = self.speed_times
        if t < times[0] or t >= times[-1]:
            return 0.0
        i = int(np.searchsorted(times, t, side="right")) - 1
        return (self.speed_values[i + 1] - self.speed_values[i]) / (times[i + 1] - times[i])

    def flux_ref_rate(self, t: float) -> float:
        return 0.0

    def load_torque(self, t: float) -> float:
        return self.load_after if t >= self.load_time else self.load_before


class TrackingErrors(NamedTuple):
    e_psi: float
    e_omega: float
    e1: float
    e2: float


def _flux_frame(lam_a: float, lam_b: float, psi_floor: float) -> Tuple[float, FloatArray, FloatArray]:
    psi = float(np.hypot(lam_a, lam_b))
    if psi < psi_floor:
        return psi, np.array([1.0, 0.0]), np.array([0.0, 1.0])
    e_d = np.array([lam_a, lam_b]) / psi
    return psi, e_d, np.array([-e_d[1], e_d[0]])


def desired_current(
    x: FloatArray, d: MotorDesign, refs: MotorReferences, nominal: MotorParams, t: float
) -> Tuple[FloatArray, float, float]:
    psi, e_d, e_q = _flux_frame(x[2], x[3], refs.psi_floor)
    e_psi = psi - refs.flux_ref
    e_omega = x[4] - refs.speed_ref(t)
    i_d = (refs.flux_ref_rate(t) - nominal.beta_coef * psi - d.k_psi * e_psi) / nominal.alpha_coef
    psi_eff = max(psi, refs.psi_floor)
    i_q = (
        refs.speed_ref_rate(t) + refs.load_torque(t) / nominal.J - d.k_omega * e_omega
    ) / (nominal.gamma_coef * psi_eff)
    return i_d * e_d + i_q * e_q, e_psi, e_omega


def _mechanical_flow(x: FloatArray, params: MotorParams, refs: MotorReferences, t: float) -> FloatArray:
    """Flux and speed derivatives; they do not depend on the stator voltage."""
    i_a, i_b, lam_a, lam_b, omega = x
    torque = lam_a * i_b - lam_b * i_a
    return np.array(
        [
            params.alpha_coef * i_a + params.beta_coef * lam_a - omega * lam_b,
            params.alpha_coef * i_b + params.beta_coef * lam_b + omega * lam_a,
            params.gamma_coef * torque - refs.load_torque(t) / params.J,
        ]
    )


def desired_current_rate(
    x: FloatArray, d: MotorDesign, refs: MotorReferences, nominal: MotorParams, t: float
) -> FloatArray:
    """Central difference of the desired current along the controller-side model.

    Currents stay frozen while flux, speed and the references advance by one
    ``FD_STEP`` in each direction.
    """
    flow = np.concatenate([np.zeros(2), _mechanical_flow(x, nominal, refs, t)])
    ahead, _, _ = desired_current(x + FD_STEP * flow, d, refs, nominal, t + FD_STEP)
    behind, _, _ = desired_current(x - FD_STEP * flow, d, refs, nominal, t - FD_STEP)
    return (ahead - behind) / (2.0 * FD_STEP)


def foc_control(
    x: FloatArray, d: MotorDesign, refs: MotorReferences, nominal: MotorParams, t: float
) -> Tuple[float, float, TrackingErrors]:
    i_a, i_b, lam_a, lam_b, omega = x
    i_star, e_psi, e_omega = desired_current(x, d, refs, nominal, t)
    e1 = i_a - i_star[0]
    e2 = i_b - i_star[1]
    rate = desired_current_rate(x, d, refs, nominal, t)
    u_alpha = nominal.L_sigma * (
        rate[0] + nominal.a_s * i_a - nominal.b_s * lam_a - nominal.c_s * omega * lam_b - d.k1 * e1
    )
    u_beta = nominal.L_sigma * (
        rate[1] + nominal.a_s * i_b - nominal.b_s * lam_b + nominal.c_s * omega * lam_a - d.k2 * e2
    )
    return float(u_alpha), float(u_beta), TrackingErrors(float(e_psi), float(e_omega), float(e1), float(e2))


def motor_electrical_flow(x: FloatArray, u: FloatArray, plant: MotorParams) -> FloatArray:
    i_a, i_b, lam_a, lam_b, omega = x
    return np.array(
        [
            -plant.a_s * i_a + plant.b_s * lam_a + plant.c_s * omega * lam_b + u[0] / plant.L_sigma,
            -plant.a_s * i_b + plant.b_s * lam_b - plant.c_s * omega * lam_a + u[1] / plant.L_sigma,
        ]
    )


def motor_rhs(
    x: FloatArray,
    d: MotorDesign,
    refs: MotorReferences,
    plant: MotorParams,
    nominal: MotorParams,
    t: float,
) -> Tuple[FloatArray, FloatArray]:
    u_alpha, u_beta, _ = foc_control(x, d, refs, nominal, t)
    u = np.array([u_alpha, u_beta])
    dx = np.concatenate([motor_electrical_flow(x, u, plant), _mechanical_flow(x, plant, refs, t)])
    return dx, u


# --- plant adapters ---------------------------------------------------------
#
# Each adapter closes the loop for a gain vector (the controller part of the
# design vector) and exposes the error signal used by the performance index.


@dataclass(frozen=True)
class FirstOrderConsensus:
    graph: RingGraph
    name: str = "consensus1"
    gain_names: Tuple[str, ...] = ("alpha", "beta", "k")

    @property
    def state_names(self) -> Tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.graph.n_agents))

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(f"u{i + 1}" for i in range(self.graph.n_agents))

    def closed_loop(self, gains: FloatArray) -> ClosedLoop:
        params = FirstOrderParams(*map(float, gains))
        return lambda t, x: first_order_rhs(x, params, self.graph)

    def error_components(self, gains: FloatArray, times: FloatArray, states: FloatArray) -> FloatArray:
        return states @ self.graph.laplacian.T

    def error_metric(self, t: float, x: FloatArray) -> float:
        return float(np.linalg.norm(self.graph.laplacian @ x))


@dataclass(frozen=True)
class SecondOrderConsensus:
    graph: RingGraph
    drag_a: float = 0.5
    drag_b: float = 0.05
    name: str = "consensus2"
    gain_names: Tuple[str, ...] = ("kp", "kd")

    @property
    def state_names(self) -> Tuple[str, ...]:
        n = self.graph.n_agents
        return tuple(f"x{i + 1}" for i in range(n)) + tuple(f"v{i + 1}" for i in range(n))

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(f"u{i + 1}" for i in range(self.graph.n_agents))

    def closed_loop(self, gains: FloatArray) -> ClosedLoop:
        params = SecondOrderParams(float(gains[0]), float(gains[1]), self.drag_a, self.drag_b)
        return lambda t, z: second_order_rhs(z, params, self.graph)

    def error_components(self, gains: FloatArray, times: FloatArray, states: FloatArray) -> FloatArray:
        n = self.graph.n_agents
        L = self.graph.laplacian
        return np.hstack([states[:, :n] @ L.T, states[:, n:] @ L.T])

    def error_metric(self, t: float, z: FloatArray) -> float:
        n = self.graph.n_agents
        L = self.graph.laplacian
        return float(np.hypot(np.linalg.norm(L @ z[:n]), np.linalg.norm(L @ z[n:])))


@dataclass(frozen=True)
class InductionMotorDrive:
    nominal: MotorParams = field(default_factory=MotorParams)
    plant: MotorParams = field(default_factory=lambda: MotorParams(Lm=0.12))
    refs: MotorReferences = field(default_factory=MotorReferences)
    name: str = "motor"
    gain_names: Tuple[str, ...] = ("k_psi", "k_omega")
    state_names: Tuple[str, ...] = ("i_alpha", "i_beta", "lambda_alpha", "lambda_beta", "omega")
    input_names: Tuple[str, ...] = ("u_alpha", "u_beta")

    def closed_loop(self, gains: FloatArray) -> ClosedLoop:
        design = MotorDesign(float(gains[0]), float(gains[1]))
        return lambda t, x: motor_rhs(x, design, self.refs, self.plant, self.nominal, t)

    def tracking_errors(self, gains: FloatArray, t: float, x: FloatArray) -> TrackingErrors:
        design = MotorDesign(float(gains[0]), float(gains[1]))
        i_star, e_psi, e_omega = desired_current(x, design, self.refs, self.nominal, t)
        return TrackingErrors(float(e_psi), float(e_omega), float(x[0] - i_star[0]), float(x[1] - i_star[1]))

    def error_components(self, gains: FloatArray, times: FloatArray, states: FloatArray) -> FloatArray:
        # Third column carries the inner current error magnitude so a single
        # weight applies to e1^2 + e2^2.
        rows = []
        for t, x in zip(times, states):
            e = self.tracking_errors(gains, float(t), x)
            rows.append((e.e_psi, e.e_omega, np.hypot(e.e1, e.e2)))
        return np.array(rows, dtype=float).reshape(len(times), 3)

    def error_metric(self, t: float, x: FloatArray) -> float:
        return abs(float(x[4]) - self.refs.speed_ref(t))
