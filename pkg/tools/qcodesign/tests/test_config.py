from __future__ import annotations

import json

import pytest

from qcodesign.config import (
    PARAMETER_NAMES,
    TimingConfig,
    config_from_dict,
    config_to_dict,
    default_config,
    dump_config,
    parse_config,
    with_overrides,
)
from qcodesign.errors import ConfigError, ParseError, ValidationError, exit_code_for


def test_empty_file_gives_first_order_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    cfg = parse_config(path, "consensus1")
    assert cfg.timing.redesign_interval == 0.25
    assert cfg.search.lower == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert cfg.search.upper == (50.0, 2.0, 50.0, 25.0, 25.0)
    assert cfg.weights.perf_error == (1.0,)
    assert cfg.weights.control == 0.1
    assert cfg.weights.lyapunov == 1.0
    assert cfg.blackhole.population == 20
    assert cfg.stopping.threshold == 1e-8
    assert cfg.parameter_names == PARAMETER_NAMES["consensus1"]


def test_motor_defaults():
    cfg = default_config("motor")
    assert cfg.timing.redesign_interval == 0.2
    assert cfg.timing.t_max == 2.2
    assert cfg.timing.n_grid == 120
    assert cfg.encoding.mode == "fixed"
    assert cfg.encoding.fixed_bits == 3
    assert cfg.qite.tau == 2.0
    assert cfg.weights.perf_error == (2.0, 10.0, 10.0)
    assert cfg.plant.Lm_plant == 0.12
    assert cfg.stopping.threshold is None


def test_second_order_defaults():
    cfg = default_config("consensus2")
    assert cfg.timing.redesign_interval == 0.5
    assert cfg.timing.horizon == 0.25
    assert cfg.stopping.threshold == 1e-4
    assert len(cfg.plant.v0) == 5


def test_sections_merge_over_profile():
    cfg = config_from_dict({"scenario": "consensus2", "timing": {"t_max": 3.0}})
    assert cfg.timing.t_max == 3.0
    assert cfg.timing.redesign_interval == 0.5


def test_non_positive_interval_names_its_key():
    with pytest.raises(ValidationError) as info:
        config_from_dict({"timing": {"redesign_interval": 0}})
    assert info.value.key == "timing.redesign_interval"
    assert exit_code_for(info.value) == 2


@pytest.mark.parametrize(
    "data,key",
    [
        ({"colour": 1}, "colour"),
        ({"qite": {"shots": 100}}, "qite.shots"),
        ({"search": {"lower": [0, 0], "upper": [1, 1]}}, "search"),
        ({"seed": -1}, "seed"),
        ({"redesign": {"mode": "conditional"}}, "redesign.mode"),
        ({"scenario": "pendulum"}, "scenario"),
        ({"blackhole": {"population": 1}}, "blackhole.population"),
        ({"plant": {"v0": [0, 0, 0, 0, 0]}}, "plant.v0"),
    ],
)
def test_invalid_entries(data, key):
    with pytest.raises(ValidationError) as info:
        config_from_dict(data)
    assert info.value.key == key


def test_invalid_stability_parameters():
    with pytest.raises(ConfigError):
        config_from_dict({"stability": {"kind": "finite_time", "gamma": 2.0}})


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"seed": 1,')
    with pytest.raises(ParseError):
        parse_config(path)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        parse_config(tmp_path / "nope.json")


def test_scenario_argument_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"scenario": "consensus1", "seed": 4}))
    cfg = parse_config(path, "motor")
    assert cfg.scenario == "motor"
    assert cfg.seed == 4


def test_dump_round_trips(tmp_path):
    for scenario in ("consensus1", "consensus2", "motor"):
        cfg = config_from_dict({"scenario": scenario, "seed": 11, "qite": {"top_k": 16}})
        path = tmp_path / f"{scenario}.json"
        path.write_text(dump_config(cfg))
        assert parse_config(path) == cfg
        assert config_to_dict(parse_config(path)) == config_to_dict(cfg)


def test_overrides_revalidate():
    cfg = default_config()
    assert with_overrides(cfg, seed=None, threads=None) is cfg
    assert with_overrides(cfg, seed=9).seed == 9
    with pytest.raises(ValidationError):
        with_overrides(cfg, timing=TimingConfig(0.0, 1.0, 0.25, 150))
