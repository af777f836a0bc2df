"""Quadratic pseudo-Boolean surrogate fitting and its Ising form."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from scipy import linalg

from .arrays import Bitstring, FloatArray
from .encoding import all_bitstrings, bits_to_index, index_to_bits
from .errors import InvalidSpin, SingularFit

logger = logging.getLogger(__name__)

REJECTION_DRAWS_PER_SAMPLE = 50


@dataclass(frozen=True)
class SurrogateSettings:
    factor: int = 4
    minimum: int = 64
    ridge: float = 1e-8

    def __post_init__(self) -> None:
        if self.factor < 1 or self.minimum < 1:
            raise ValueError("factor and minimum must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")


def pair_indices(n: int):
    """Strict upper-triangle (r < s) index pairs in row-major order."""
    return np.triu_indices(n, k=1)


def n_coefficients(n_q: int) -> int:
    return 1 + n_q + n_q * (n_q - 1) // 2


@dataclass(frozen=True)
class QuadraticSurrogate:
    beta0: float
    linear: FloatArray
    quadratic: FloatArray

    @property
    def n_qubits(self) -> int:
        return int(self.linear.shape[0])

    def evaluate(self, b: Bitstring) -> FloatArray:
        """Q(b) for one bitstring or a stack of them."""
        b = np.atleast_2d(np.asarray(b, dtype=float))
        r, s = pair_indices(self.n_qubits)
        values = self.beta0 + b @ self.linear + (b[:, r] * b[:, s]) @ self.quadratic
        return values


@dataclass(frozen=True)
class IsingModel:
    eta0: float
    fields: FloatArray
    couplings: FloatArray

    @property
    def n_qubits(self) -> int:
        return int(self.fields.shape[0])

    def energies(self, z: FloatArray) -> FloatArray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        r, s = pair_indices(self.n_qubits)
        return self.eta0 + z @ self.fields + (z[:, r] * z[:, s]) @ self.couplings

    def diagonal(self) -> FloatArray:
        """Energy of every computational basis state, by basis index."""
        return self.energies(spins_from_bits(all_bitstrings(self.n_qubits)))


def spins_from_bits(b: Bitstring) -> FloatArray:
    return 1.0 - 2.0 * np.asarray(b, dtype=float)


def sample_training_set(
    n_q: int,
    factor: int,
    minimum: int,
    rng: np.random.Generator,
    required: Iterable[Bitstring] = (),
) -> Bitstring:
    """Distinct uniformly drawn bitstrings, stacked as rows.

    ``required`` bitstrings are always part of the set and count towards its
    size.
    """
    if n_q < 1:
        raise ValueError("n_q must be at least 1")
    cube = 2 ** n_q
    n_train = min(cube, max(minimum, factor * n_coefficients(n_q)))
    if n_train == cube:
        return all_bitstrings(n_q)

    chosen: List[int] = []
    seen = set()
    for b in required:
        idx = bits_to_index(b)
        if idx not in seen and len(chosen) < n_train:
            seen.add(idx)
            chosen.append(idx)

    draws = 0
    cap = REJECTION_DRAWS_PER_SAMPLE * n_train
    while len(chosen) < n_train and draws < cap:
        idx = int(rng.integers(0, cube))
        draws += 1
        if idx not in seen:
            seen.add(idx)
            chosen.append(idx)
    if len(chosen) < n_train:
        logger.debug("rejection sampling capped after %d draws, filling exhaustively", draws)
        for idx in range(cube):
            if len(chosen) == n_train:
                break
            if idx not in seen:
                seen.add(idx)
                chosen.append(idx)
    return np.array([index_to_bits(i, n_q) for i in chosen], dtype=np.int8)


def design_matrix(samples: Bitstring) -> FloatArray:
    b = np.atleast_2d(np.asarray(samples, dtype=float))
    r, s = pair_indices(b.shape[1])
    return np.hstack([np.ones((b.shape[0], 1)), b, b[:, r] * b[:, s]])


def fit_quadratic(samples: Sequence[Bitstring], values: Sequence[float], ridge: float = 1e-8) -> QuadraticSurrogate:
    phi = design_matrix(np.asarray(samples))
    y = np.asarray(values, dtype=float)
    if phi.shape[0] != y.shape[0]:
        raise ValueError("samples and values must be aligned")
    n_q = np.asarray(samples).shape[1]

    penalty = np.full(phi.shape[1], ridge)
    penalty[0] = 0.0
    gram = phi.T @ phi + np.diag(penalty)
    try:
        factor = linalg.cho_factor(gram, check_finite=True)
        coeffs = linalg.cho_solve(factor, phi.T @ y)
    except linalg.LinAlgError as exc:
        raise SingularFit(f"surrogate normal equations are singular ({exc})") from exc
    if not np.all(np.isfinite(coeffs)):
        raise SingularFit("surrogate fit produced non-finite coefficients")
    return QuadraticSurrogate(float(coeffs[0]), coeffs[1:1 + n_q].copy(), coeffs[1 + n_q:].copy())


def qubo_to_ising(q: QuadraticSurrogate) -> IsingModel:
    """Substitutes b_r = (1 - z_r) / 2."""
    n = q.n_qubits
    r, s = pair_indices(n)
    eta0 = q.beta0 + q.linear.sum() / 2.0 + q.quadratic.sum() / 4.0
    pair_sum = np.zeros(n)
    np.add.at(pair_sum, r, q.quadratic)
    np.add.at(pair_sum, s, q.quadratic)
    fields = -q.linear / 2.0 - pair_sum / 4.0
    return IsingModel(float(eta0), fields, q.quadratic / 4.0)


def ising_energy(m: IsingModel, z: FloatArray) -> float:
    z = np.asarray(z, dtype=float)
    if not np.all(np.abs(z) == 1.0):
        raise InvalidSpin("spin entries must be -1 or +1")
    return float(m.energies(z)[0])
