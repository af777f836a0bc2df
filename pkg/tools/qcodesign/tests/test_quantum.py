from __future__ import annotations

import numpy as np
import pytest

from qcodesign.encoding import bits_to_index
from qcodesign.errors import DimensionMismatch, LengthMismatch
from qcodesign.quantum import (
    Ansatz,
    QiteSettings,
    StateVector,
    hamiltonian_expectation,
    prepare_state,
    state_jacobian,
    top_k_bitstrings,
    varqite_run,
)
from qcodesign.surrogate import IsingModel


def random_model(rng, n):
    return IsingModel(0.0, rng.normal(size=n), rng.normal(size=n * (n - 1) // 2))


def basis_state(index, n):
    amps = np.zeros(2 ** n, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, n)


class TestAnsatz:
    def test_parameter_count(self):
        assert Ansatz(4, reps=2).n_params == 24
        assert Ansatz(1, reps=0).n_params == 2

    def test_layout_order(self):
        kinds = [g.kind for g in Ansatz(3, reps=1).layout()]
        assert kinds == ["ry"] * 3 + ["rz"] * 3 + ["cx"] * 2 + ["ry"] * 3 + ["rz"] * 3
        cx = [g for g in Ansatz(3, reps=1).layout() if g.kind == "cx"]
        assert [(g.qubit, g.target) for g in cx] == [(0, 1), (1, 2)]
        params = [g.param for g in Ansatz(3, reps=1).layout() if g.kind != "cx"]
        assert params == list(range(12))


class TestPrepareState:
    def test_zero_parameters_give_ground_basis_state(self):
        s = prepare_state(Ansatz(3), np.zeros(18))
        np.testing.assert_allclose(s.amplitudes, np.eye(8)[0], atol=1e-15)

    def test_y_rotation_by_pi_flips(self):
        s = prepare_state(Ansatz(1, reps=0), np.array([np.pi, 0.0]))
        np.testing.assert_allclose(s.probabilities, [0.0, 1.0], atol=1e-15)

    def test_entangling_chain_copies_first_bit(self):
        theta = np.zeros(Ansatz(3, reps=1).n_params)
        theta[0] = np.pi
        s = prepare_state(Ansatz(3, reps=1), theta)
        assert s.probabilities[0b111] == pytest.approx(1.0)

    def test_norm_is_preserved(self, rng):
        a = Ansatz(5)
        for _ in range(5):
            s = prepare_state(a, rng.uniform(-np.pi, np.pi, a.n_params))
            assert np.sum(s.probabilities) == pytest.approx(1.0, abs=1e-10)

    def test_parameter_length_is_checked(self):
        with pytest.raises(LengthMismatch):
            prepare_state(Ansatz(2), np.zeros(3))


class TestJacobian:
    @pytest.mark.parametrize("n, reps", [(1, 0), (1, 2), (2, 1), (3, 2), (4, 0), (4, 2)])
    def test_matches_central_difference(self, rng, n, reps):
        a = Ansatz(n, reps=reps)
        h = 1e-6
        for _ in range(3):
            theta = rng.uniform(-np.pi, np.pi, a.n_params)
            jac = state_jacobian(a, theta)
            for i in range(a.n_params):
                e = np.zeros(a.n_params)
                e[i] = h
                fd = (prepare_state(a, theta + e).amplitudes - prepare_state(a, theta - e).amplitudes) / (2 * h)
                np.testing.assert_allclose(jac[:, i], fd, atol=1e-6)

    def test_columns_preserve_norm(self, rng):
        a = Ansatz(4)
        theta = rng.uniform(-np.pi, np.pi, a.n_params)
        psi = prepare_state(a, theta).amplitudes
        overlaps = np.real(state_jacobian(a, theta).conj().T @ psi)
        np.testing.assert_allclose(overlaps, 0.0, atol=1e-12)

    def test_single_qubit_at_origin(self):
        jac = state_jacobian(Ansatz(1, reps=0), np.zeros(2))
        np.testing.assert_allclose(jac[:, 0], [0.0, 0.5], atol=1e-15)
        np.testing.assert_allclose(jac[:, 1], [-0.5j, 0.0], atol=1e-15)

    def test_metric_is_positive_semidefinite(self, rng):
        a = Ansatz(3)
        jac = state_jacobian(a, rng.uniform(-1, 1, a.n_params))
        A = np.real(jac.conj().T @ jac)
        np.testing.assert_allclose(A, A.T, atol=1e-14)
        assert np.linalg.eigvalsh(A).min() >= -1e-10


class TestExpectation:
    def test_basis_state_energy(self, rng):
        m = random_model(rng, 3)
        for index in range(8):
            assert hamiltonian_expectation(m, basis_state(index, 3)) == pytest.approx(m.diagonal()[index])

    def test_uniform_state_cancels_fields(self):
        m = IsingModel(0.0, np.array([1.0, -2.0, 0.5]), np.zeros(3))
        s = StateVector(np.full(8, 1 / np.sqrt(8), dtype=complex), 3)
        assert hamiltonian_expectation(m, s) == pytest.approx(0.0, abs=1e-14)

    def test_identity_term(self, rng):
        m = IsingModel(2.5, np.zeros(4), np.zeros(6))
        s = prepare_state(Ansatz(4), rng.uniform(-1, 1, 24))
        assert hamiltonian_expectation(m, s) == pytest.approx(2.5, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            hamiltonian_expectation(IsingModel(0.0, np.zeros(2), np.zeros(1)), basis_state(0, 3))


class TestVarQite:
    def test_identity_model_leaves_parameters(self):
        m = IsingModel(1.0, np.zeros(3), np.zeros(3))
        s = QiteSettings(steps=5, seed=3)
        theta, trace = varqite_run(m, Ansatz(3), s)
        expected = np.random.default_rng(3).uniform(-0.1, 0.1, Ansatz(3).n_params)
        np.testing.assert_allclose(theta, expected, atol=1e-8)
        np.testing.assert_allclose(trace, 1.0, atol=1e-12)

    def test_single_qubit_ground_state(self):
        m = IsingModel(0.0, np.array([1.0]), np.zeros(0))
        a = Ansatz(1)
        top_one = low_energy = 0
        for seed in range(5):
            theta, trace = varqite_run(m, a, QiteSettings(tau=3.0, steps=60, seed=seed, init_scale=0.5))
            bits, _ = top_k_bitstrings(prepare_state(a, theta), 1)[0]
            top_one += list(bits) == [1]
            low_energy += trace[-1] <= -0.9
        assert top_one >= 4
        assert low_energy >= 3

    def test_energy_decreases_on_random_models(self):
        decreased = 0
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            m = random_model(rng, 4)
            _, trace = varqite_run(m, Ansatz(4), QiteSettings(seed=seed), rng)
            decreased += trace[-1] <= trace[0]
        assert decreased >= 18

    def test_ground_state_is_screened(self):
        hits = within_span = 0
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            n = 6
            m = IsingModel(0.0, rng.uniform(-1, 1, n), rng.uniform(-1, 1, n * (n - 1) // 2))
            a = Ansatz(n)
            theta, trace = varqite_run(m, a, QiteSettings(tau=3.0, steps=60, seed=seed))
            energies = m.diagonal()
            ground, top = energies.min(), energies.max()
            screened = [bits_to_index(b) for b, _ in top_k_bitstrings(prepare_state(a, theta), 32)]
            best = energies[screened].min()
            hits += best <= ground + 1e-12
            within_span += best - ground <= 0.05 * (top - ground)
            assert trace.min() >= ground - 1e-9
        assert hits >= 16
        assert within_span == 20

    def test_trace_length_and_norm(self, rng):
        m = random_model(rng, 3)
        a = Ansatz(3)
        theta, trace = varqite_run(m, a, QiteSettings(steps=7), rng)
        assert trace.shape == (7,)
        assert np.sum(prepare_state(a, theta).probabilities) == pytest.approx(1.0, abs=1e-10)

    def test_seeded_runs_repeat(self, rng):
        m = random_model(rng, 3)
        a = Ansatz(3)
        first = varqite_run(m, a, QiteSettings(steps=10, seed=4))
        second = varqite_run(m, a, QiteSettings(steps=10, seed=4))
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_register_sizes_must_agree(self, rng):
        with pytest.raises(DimensionMismatch):
            varqite_run(random_model(rng, 2), Ansatz(3), QiteSettings(steps=1))

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            QiteSettings(ridge=0.0)
        with pytest.raises(ValueError):
            QiteSettings(steps=0)


class TestTopK:
    def test_most_probable_first(self):
        amps = np.zeros(4, dtype=complex)
        amps[0b01] = np.sqrt(0.7)
        amps[0b10] = np.sqrt(0.3)
        (bits, p), = top_k_bitstrings(StateVector(amps, 2), 1)
        assert list(bits) == [0, 1]
        assert p == pytest.approx(0.7)

    def test_large_k_returns_everything(self, rng):
        s = prepare_state(Ansatz(3), rng.uniform(-1, 1, 18))
        out = top_k_bitstrings(s, 100)
        assert len(out) == 8
        assert sum(p for _, p in out) == pytest.approx(1.0)
        probs = [p for _, p in out]
        assert probs == sorted(probs, reverse=True)

    def test_ties_follow_integer_order(self):
        s = StateVector(np.full(8, 1 / np.sqrt(8), dtype=complex), 3)
        out = [list(b) for b, _ in top_k_bitstrings(s, 3)]
        assert out == [[0, 0, 0], [0, 0, 1], [0, 1, 0]]

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            top_k_bitstrings(basis_state(0, 1), 0)
