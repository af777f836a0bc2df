from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from qcodesign.codesign import (
    APPLIED_GRID_FACTOR,
    PipelineSettings,
    brute_force_minimum,
    epoch_context,
    epoch_seed,
    epoch_streams,
    run_epoch,
    run_fixed_baseline,
    run_simulation,
)
from qcodesign.config import config_from_dict
from qcodesign.cost import penalized_cost
from qcodesign.encoding import decode, encode_nearest
from qcodesign.scenarios import build_scenario

from .conftest import at_state, small_config


def run_first_epoch(scenario, settings, seed=0, executor=None):
    return run_epoch(scenario.x0, 0.0, scenario, settings, epoch_seed(seed, 0), 0, executor)


class TestEpochStreams:
    def test_streams_are_reproducible(self):
        a = [g.random(3) for g in epoch_streams(epoch_seed(5, 2))]
        b = [g.random(3) for g in epoch_streams(epoch_seed(5, 2))]
        np.testing.assert_array_equal(a, b)

    def test_streams_differ_per_epoch_and_role(self):
        first = [g.random() for g in epoch_streams(epoch_seed(5, 0))]
        second = [g.random() for g in epoch_streams(epoch_seed(5, 1))]
        assert len(set(first)) == 3
        assert first != second


class TestRunEpoch:
    def test_recorded_cost_can_be_audited(self, consensus1_scenario, small_settings):
        s = consensus1_scenario
        record, design = run_first_epoch(s, small_settings)
        ctx = epoch_context(s, 0.0, s.x0)
        assert record.exact_cost == penalized_cost(design, ctx, s, s.weights)
        np.testing.assert_array_equal(record.design, design)

    def test_winner_beats_safety_net(self, consensus1_scenario, small_settings):
        record, _ = run_first_epoch(consensus1_scenario, small_settings)
        assert record.exact_cost <= record.safety_net_cost
        assert 1 <= record.candidate_count <= small_settings.top_k + 1
        assert record.n_qubits == 5
        assert len(record.energy_trace) == small_settings.qite.steps
        assert record.qite_final_energy == record.energy_trace[-1]

    def test_design_is_a_code_point(self, consensus1_scenario, small_settings):
        record, design = run_first_epoch(consensus1_scenario, small_settings)
        alloc, region = record.bit_allocation, record.calibrated_region
        np.testing.assert_array_equal(decode(encode_nearest(design, alloc, region), alloc, region), design)
        assert region.contains(design)

    def test_winner_is_bounded_below_by_brute_force(self, consensus1_scenario, small_settings):
        s = consensus1_scenario
        record, _ = run_first_epoch(s, small_settings)
        brute, best = brute_force_minimum(record, s.x0, s)
        assert brute <= record.exact_cost
        assert record.calibrated_region.contains(best)

    def test_same_seed_same_record(self, consensus1_scenario, small_settings):
        a, _ = run_first_epoch(consensus1_scenario, small_settings, seed=3)
        b, _ = run_first_epoch(consensus1_scenario, small_settings, seed=3)
        np.testing.assert_array_equal(a.design, b.design)
        assert a.exact_cost == b.exact_cost
        assert a.energy_trace == b.energy_trace
        np.testing.assert_array_equal(a.calibrated_region.lower, b.calibrated_region.lower)

    def test_thread_pool_gives_same_record(self, consensus1_scenario, small_settings):
        serial, _ = run_first_epoch(consensus1_scenario, small_settings, seed=2)
        with ThreadPoolExecutor(max_workers=3) as pool:
            threaded, _ = run_first_epoch(consensus1_scenario, small_settings, seed=2, executor=pool)
        np.testing.assert_array_equal(serial.design, threaded.design)
        assert serial.exact_cost == threaded.exact_cost

    def test_adaptive_encoding_on_second_order_plant(self, consensus2_scenario):
        cfg = small_config(
            "consensus2",
            blackhole={"population": 6, "max_iters": 2, "freeze_thresholds": [20.0]},
            qite={"steps": 3, "top_k": 4},
        )
        settings = PipelineSettings.from_config(cfg, threads=1)
        record, _ = run_first_epoch(consensus2_scenario, settings)
        bits = record.bit_allocation.bits_per_param
        assert all(2 <= b <= 4 for b in bits)
        assert record.n_qubits == sum(bits)
        assert record.exact_cost <= record.safety_net_cost


class TestRunSimulation:
    def test_stops_when_already_at_consensus(self, consensus1_scenario, small_settings):
        s = at_state(consensus1_scenario, np.zeros(5))
        log = run_simulation(s, small_settings)
        assert log.terminated_early
        assert len(log.epochs) == 1

    def test_intervals_are_stitched_continuously(self, small_settings):
        cfg = small_config("consensus1", timing={"t_max": 0.75}, stopping={"threshold": None})
        s = build_scenario(cfg)
        handoffs = []
        log = run_simulation(s, small_settings, epoch_hook=lambda rec, x: handoffs.append(x.copy()))
        assert len(log.epochs) == 3
        assert not log.terminated_early
        per_interval = APPLIED_GRID_FACTOR * s.timing.n_grid - 1
        for k, x in enumerate(handoffs):
            np.testing.assert_array_equal(log.trajectory.states[k * per_interval], x)
        assert np.all(np.diff(log.trajectory.times) > 0)
        assert log.trajectory.times[-1] == pytest.approx(0.75)
        assert len(log.certificate_values) == len(log.trajectory)

    def test_epoch_count_is_bounded(self, small_settings):
        cfg = small_config("consensus1", timing={"t_max": 0.6, "redesign_interval": 0.25})
        s = build_scenario(cfg)
        log = run_simulation(s, small_settings)
        assert len(log.epochs) <= 3
        assert log.trajectory.times[-1] <= 0.6 + 1e-12

    def test_threads_do_not_change_results(self, consensus1_scenario, small_settings):
        s = build_scenario(small_config("consensus1", timing={"t_max": 0.5}))
        serial = run_simulation(s, small_settings)
        threaded = run_simulation(s, replace(small_settings, threads=3))
        np.testing.assert_array_equal(serial.trajectory.states, threaded.trajectory.states)
        assert [r.exact_cost for r in serial.epochs] == [r.exact_cost for r in threaded.epochs]


class TestBaseline:
    def test_zero_horizon(self, consensus1_scenario):
        log = run_fixed_baseline(consensus1_scenario, np.array([2.0, 1.0, 5.0, 1.0, 1.0]), 0.0)
        assert len(log.trajectory) == 1
        assert log.epochs == []
        np.testing.assert_array_equal(log.trajectory.states[0], consensus1_scenario.x0)

    def test_stabilizing_gains_shrink_disagreement(self, consensus1_scenario):
        s = consensus1_scenario
        log = run_fixed_baseline(s, np.array([2.0, 1.0, 5.0, 1.0, 1.0]), 2.0)
        L = s.plant.graph.laplacian
        norms = np.linalg.norm(log.trajectory.states @ L.T, axis=1)
        assert np.all(np.diff(norms) <= 1e-9)
        assert norms[-1] < 1e-3 * norms[0]
        assert len(log.epochs) == 8
        assert all(np.isnan(r.qite_final_energy) for r in log.epochs)

    def test_open_loop_cancellation_keeps_disagreement(self, consensus1_scenario):
        s = consensus1_scenario
        log = run_fixed_baseline(s, np.array([1.0, 1.0, 0.0, 1.0, 1.0]), 1.0)
        L = s.plant.graph.laplacian
        norms = np.linalg.norm(log.trajectory.states @ L.T, axis=1)
        np.testing.assert_allclose(norms, norms[0], rtol=1e-12)

    def test_epoch_rows_sit_on_interval_boundaries(self, consensus1_scenario):
        s = consensus1_scenario
        log = run_fixed_baseline(s, np.array([2.0, 1.0, 5.0, 1.0, 1.0]), 1.0)
        assert [r.t_start for r in log.epochs] == pytest.approx([0.0, 0.25, 0.5, 0.75])

    def test_design_length_is_checked(self, consensus1_scenario):
        with pytest.raises(ValueError):
            run_fixed_baseline(consensus1_scenario, np.ones(3), 1.0)

    def test_nominal_motor_tracks_speed(self):
        s = build_scenario(small_config("motor", plant={"Lm_plant": 0.24}))
        log = run_fixed_baseline(s, np.array([100.0, 100.0, 1.0, 1.0]), 1.0)
        errors = [s.error_metric(float(t), x) for t, x in zip(log.trajectory.times, log.trajectory.states)]
        assert np.all(np.isfinite(errors))
        assert max(errors) < 50.0


def reduced_budget(scenario, seed, **sections):
    data = {
        "scenario": scenario,
        "seed": seed,
        "threads": 1,
        "blackhole": {"max_iters": 30},
        "qite": {"steps": 30},
    }
    data.update(sections)
    cfg = config_from_dict(data)
    return build_scenario(cfg), PipelineSettings.from_config(cfg, threads=4)


def boundary_errors(log, scenario):
    final = scenario.error_metric(float(log.trajectory.times[-1]), log.trajectory.states[-1])
    return [r.error_metric for r in log.epochs] + [final]


def audited_run(scenario, settings):
    """Runs the co-design loop and re-checks every logged epoch cost."""
    seen = []
    log = run_simulation(scenario, settings, epoch_hook=lambda rec, x: seen.append((rec, x.copy())))
    for rec, x in seen:
        ctx = epoch_context(scenario, rec.t_start, x)
        assert penalized_cost(rec.design, ctx, scenario, scenario.weights) == rec.exact_cost
        assert rec.exact_cost <= rec.safety_net_cost
    return log, seen


@pytest.mark.slow
class TestReferenceRuns:
    def test_first_order_disagreement_decays(self):
        runs = []
        for seed in range(3):
            s, settings = reduced_budget("consensus1", seed)
            log, _ = audited_run(s, settings)
            runs.append(boundary_errors(log, s))
        # Runs that stopped early hold their last value.
        width = max(len(r) for r in runs)
        mean = np.mean([r + [r[-1]] * (width - len(r)) for r in runs], axis=0)
        assert np.mean(np.diff(mean) <= 0.0) >= 0.95
        assert mean.min() < 1e-2

    def test_second_order_reaches_consensus_and_stops(self):
        s, settings = reduced_budget("consensus2", 0)
        log, _ = audited_run(s, settings)
        errors = boundary_errors(log, s)
        assert min(errors) < 1e-2
        assert log.trajectory.times[-1] <= s.timing.t_max + 1e-12
        threshold = s.stop_threshold
        assert all(e > threshold for e in errors[1:-1])
        if errors[-1] <= threshold:
            assert log.terminated_early
        else:
            assert not log.terminated_early

    def test_motor_codesign_beats_fixed_gains_under_mismatch(self):
        s, settings = reduced_budget("motor", 0)
        assert s.plant.plant.Lm == pytest.approx(0.5 * s.plant.nominal.Lm)
        codesign, _ = audited_run(s, settings)
        fixed = run_fixed_baseline(s, np.array([100.0, 100.0, 1.0, 1.0]), s.timing.t_max)

        def worst_speed_error(log):
            t, x = log.trajectory.times, log.trajectory.states
            window = (t >= 0.5) & (t <= 2.2 + 1e-12)
            return max(s.error_metric(float(ti), xi) for ti, xi in zip(t[window], x[window]))

        assert worst_speed_error(codesign) <= 0.8 * worst_speed_error(fixed)

    def test_winner_is_close_to_brute_force_minimum(self):
        close = total = 0
        with ThreadPoolExecutor(max_workers=4) as pool:
            for seed in range(3):
                s, settings = reduced_budget("consensus1", seed, encoding={"mode": "fixed", "fixed_bits": 2})
                _, seen = audited_run(s, settings)
                for rec, x in seen:
                    assert rec.n_qubits == 10
                    brute, _ = brute_force_minimum(rec, x, s, pool)
                    assert brute <= rec.exact_cost
                    close += rec.exact_cost - brute <= 0.1 * abs(brute) + 1e-12
                    total += 1
        assert close >= 0.7 * total
