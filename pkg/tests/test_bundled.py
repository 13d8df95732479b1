from dataclasses import replace

import numpy as np
import pytest

from gridfreq.module_utils.engine import simulate
from gridfreq.module_utils.metrics import evaluate
from gridfreq.module_utils.scenarios import find_bundled, initialize_dispatch

from .conftest import BUNDLED_SCENARIOS, load_bundled


@pytest.mark.parametrize('name', BUNDLED_SCENARIOS)
def test_bundled_scenario_loads(name):
    scenario = load_bundled(name)
    assert scenario.name == name
    assert scenario.events
    assert all(0 <= e.time <= scenario.sim.duration for e in scenario.events)


@pytest.mark.parametrize('name', BUNDLED_SCENARIOS)
def test_bundled_dispatch_is_balanced(name):
    scenario = load_bundled(name)
    _, states = initialize_dispatch(scenario)
    for device, state in zip(scenario.devices, states):
        assert state.p_m == pytest.approx(device.dispatch, abs=1e-6)


@pytest.mark.parametrize('name', BUNDLED_SCENARIOS)
def test_bundled_steady_without_event(name):
    scenario = load_bundled(name)
    series = simulate(replace(scenario, events=(), sim=replace(scenario.sim, duration=1.0)))
    np.testing.assert_allclose(series.f, scenario.f0, atol=1e-9)


def test_selected_scenario(scenario_name):
    scenario = find_bundled(scenario_name)
    report = evaluate(simulate(scenario), scenario)
    assert report.nadir < scenario.f0
    assert report.rocof_max_abs > 0
