from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from qcodesign.config import config_from_dict
from qcodesign.codesign import PipelineSettings
from qcodesign.scenarios import build_scenario


def small_config(scenario: str = "consensus1", **sections):
    data = {
        "scenario": scenario,
        "seed": 7,
        "threads": 1,
        "blackhole": {"population": 6, "max_iters": 3},
        "qite": {"steps": 5, "top_k": 8},
        "surrogate": {"minimum": 16, "factor": 1},
    }
    data.update(sections)
    return config_from_dict(data)


@pytest.fixture
def consensus1_scenario():
    return build_scenario(small_config("consensus1"))


@pytest.fixture
def consensus2_scenario():
    return build_scenario(small_config("consensus2"))


@pytest.fixture
def motor_scenario():
    return build_scenario(small_config("motor"))


@pytest.fixture
def small_settings():
    cfg = small_config("consensus1", encoding={"mode": "fixed", "fixed_bits": 1})
    return PipelineSettings.from_config(cfg, threads=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def at_state(scenario, x0):
    return replace(scenario, x0=np.asarray(x0, dtype=float))
