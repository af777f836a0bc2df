"""Statevector simulation of the hardware-efficient ansatz and VarQITE."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from .arrays import Bitstring, ComplexArray, FloatArray
from .encoding import index_to_bits
from .errors import DimensionMismatch, LengthMismatch, LinearSolveFailure
from .surrogate import IsingModel

logger = logging.getLogger(__name__)

_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class Gate(NamedTuple):
    kind: str  # "ry", "rz" or "cx"
    qubit: int
    target: int = -1
    param: int = -1


@dataclass(frozen=True)
class Ansatz:
    n_qubits: int
    reps: int = 2

    def __post_init__(self) -> None:
        if self.n_qubits < 1 or self.reps < 0:
            raise ValueError("ansatz needs n_qubits >= 1 and reps >= 0")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * (self.reps + 1)

    def layout(self) -> List[Gate]:
        n = self.n_qubits
        gates: List[Gate] = []
        for layer in range(self.reps + 1):
            base = 2 * n * layer
            gates.extend(Gate("ry", q, param=base + q) for q in range(n))
            gates.extend(Gate("rz", q, param=base + n + q) for q in range(n))
            if layer < self.reps:
                gates.extend(Gate("cx", q, target=q + 1) for q in range(n - 1))
        return gates


@dataclass(frozen=True)
class StateVector:
    amplitudes: ComplexArray
    n_qubits: int

    @property
    def probabilities(self) -> FloatArray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class QiteSettings:
    tau: float = 3.0
    steps: int = 60
    ridge: float = 1e-6
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        if not self.tau > 0 or self.steps < 1 or not self.ridge > 0:
            raise ValueError("QITE needs tau > 0, steps >= 1 and ridge > 0")


# Tensors carry one axis per qubit (axis 0 is qubit 0, the most significant
# bit of the basis index) plus a trailing batch axis.


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _apply_1q(tensor: np.ndarray, matrix: np.ndarray, qubit: int) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [qubit]))
    return np.moveaxis(out, 0, qubit)


def _apply_cx(tensor: np.ndarray, control: int, target: int) -> np.ndarray:
    out = tensor.copy()
    index = [slice(None)] * tensor.ndim
    index[control] = 1
    sub = tensor[tuple(index)]
    axis = target if target < control else target - 1
    out[tuple(index)] = np.flip(sub, axis=axis)
    return out


def _apply_gate(tensor: np.ndarray, gate: Gate, theta: FloatArray) -> np.ndarray:
    if gate.kind == "ry":
        return _apply_1q(tensor, _ry(theta[gate.param]), gate.qubit)
    if gate.kind == "rz":
        return _apply_1q(tensor, _rz(theta[gate.param]), gate.qubit)
    return _apply_cx(tensor, gate.qubit, gate.target)


def _zero_tensor(n: int) -> np.ndarray:
    tensor = np.zeros((2,) * n + (1,), dtype=complex)
    tensor[(0,) * n + (0,)] = 1.0
    return tensor


def _check_theta(a: Ansatz, theta: FloatArray) -> FloatArray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (a.n_params,):
        raise LengthMismatch(f"ansatz takes {a.n_params} parameters, got {theta.size}")
    return theta


def prepare_state(a: Ansatz, theta: FloatArray) -> StateVector:
    theta = _check_theta(a, theta)
    tensor = _zero_tensor(a.n_qubits)
    for gate in a.layout():
        tensor = _apply_gate(tensor, gate, theta)
    return StateVector(tensor.reshape(-1), a.n_qubits)


def _state_and_jacobian(a: Ansatz, theta: FloatArray) -> Tuple[StateVector, ComplexArray]:
    """Single forward sweep; derivative columns ride along as a batch.

    At a rotation R(t) = exp(-i t P / 2) the derivative column is
    -(i/2) P applied to the post-gate state; every later gate then acts on
    the state and on all columns opened so far.
    """
    theta = _check_theta(a, theta)
    n = a.n_qubits
    state = _zero_tensor(n)
    columns = np.zeros((2,) * n + (a.n_params,), dtype=complex)
    order: List[int] = []
    for gate in a.layout():
        state = _apply_gate(state, gate, theta)
        opened = len(order)
        if opened:
            columns[..., :opened] = _apply_gate(columns[..., :opened], gate, theta)
        if gate.kind != "cx":
            pauli = _PAULI_Y if gate.kind == "ry" else _PAULI_Z
            columns[..., opened] = -0.5j * _apply_1q(state, pauli, gate.qubit)[..., 0]
            order.append(gate.param)
    jac = np.empty((2 ** n, a.n_params), dtype=complex)
    jac[:, order] = columns.reshape(2 ** n, -1)
    return StateVector(state.reshape(-1), n), jac


def state_jacobian(a: Ansatz, theta: FloatArray) -> ComplexArray:
    return _state_and_jacobian(a, theta)[1]


def _check_dimensions(m: IsingModel, s: StateVector) -> None:
    if s.amplitudes.shape[0] != 2 ** m.n_qubits:
        raise DimensionMismatch(
            f"model acts on {m.n_qubits} qubits, state has {s.amplitudes.shape[0]} amplitudes"
        )


def hamiltonian_expectation(m: IsingModel, s: StateVector, diagonal: Optional[FloatArray] = None) -> float:
    _check_dimensions(m, s)
    energies = m.diagonal() if diagonal is None else diagonal
    return float(s.probabilities @ energies)


def varqite_run(
    m: IsingModel, a: Ansatz, s: QiteSettings, rng: Optional[np.random.Generator] = None
) -> Tuple[FloatArray, FloatArray]:
    """McLachlan imaginary-time evolution of the ansatz parameters.

    Returns the final parameters and the energy after every step.
    """
    if a.n_qubits != m.n_qubits:
        raise DimensionMismatch(f"ansatz has {a.n_qubits} qubits, model has {m.n_qubits}")
    if rng is None:
        rng = np.random.default_rng(s.seed)
    energies = m.diagonal()
    theta = rng.uniform(-s.init_scale, s.init_scale, a.n_params)
    d_tau = s.tau / s.steps
    regularizer = s.ridge * np.eye(a.n_params)
    trace = np.empty(s.steps)

    for step in range(s.steps):
        state, jac = _state_and_jacobian(a, theta)
        A = np.real(jac.conj().T @ jac)
        C = np.real(jac.conj().T @ (energies * state.amplitudes))
        try:
            delta = linalg.solve(A + regularizer, C, assume_a="pos")
        except linalg.LinAlgError as exc:
            raise LinearSolveFailure(f"VarQITE system singular at step {step}: {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise LinearSolveFailure(f"VarQITE update is not finite at step {step}")
        theta = theta - delta * d_tau
        trace[step] = hamiltonian_expectation(m, prepare_state(a, theta), energies)
        logger.debug("qite step %d: <H> = %.8g", step, trace[step])

    return theta, trace


def top_k_bitstrings(s: StateVector, k: int) -> List[Tuple[Bitstring, float]]:
    if k < 1:
        raise ValueError("k must be at least 1")
    probs = s.probabilities
    idx = np.arange(probs.shape[0])
    order = np.lexsort((idx, -probs))[:k]
    return [(index_to_bits(int(i), s.n_qubits), float(probs[i])) for i in order]
