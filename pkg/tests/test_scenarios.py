import copy
import logging

import pytest
import yaml

from gridfreq.module_utils.devices import GfmParams, SgParams
from gridfreq.module_utils.gridfreq_helper import ScenarioValidationError
from gridfreq.module_utils.metrics import aggregate_inertia
from gridfreq.module_utils.scenarios import (
    bundled_scenarios,
    dispatch_imbalance,
    dump_scenario,
    find_bundled,
    initialize_dispatch,
    load_scenario,
    load_scenario_file,
    make_inertia_series,
    make_substitution_series,
    resolve_scenario,
)

from .conftest import BUNDLED_SCENARIOS, DATA_PATH, load_bundled


TWO_BUS = dict(
    name='two_bus',
    system=dict(base_mva=200),
    buses=[dict(id=1), dict(id=2)],
    branches=[{'from': 1, 'to': 2, 'x': 0.1}],
    devices=[dict(kind='SG', bus=1, rating=200, dispatch=0.5, H=4.0)],
    loads=[dict(bus=2, p_mw=100)],
    events=[dict(time=1.0, bus=2, delta_p_mw=10)],
    sim=dict(duration=5.0),
)


def two_bus(**changes):
    data = copy.deepcopy(TWO_BUS)
    data.update(changes)
    return data


def load(data):
    return load_scenario(yaml.safe_dump(data))


def test_load_two_bus_defaults():
    scenario = load(TWO_BUS)
    assert [b.kind for b in scenario.buses] == ['device', 'load']
    assert scenario.buses[0].voltage_mag == 1.0
    assert scenario.f0 == 60.0
    device = scenario.devices[0]
    assert device.name == 'SG1'
    assert device.params == SgParams(inertia_H=4.0, rating=200.0, p_set=0.5)
    assert scenario.branches[0].susceptance == pytest.approx(10.0)
    assert scenario.buses[1].p_load == pytest.approx(0.5)
    assert scenario.events[0].delta_p == pytest.approx(0.05)
    assert scenario.sim.duration == 5.0
    assert scenario.sim.dt == 0.001


def test_gfm_defaults():
    scenario = load(two_bus(devices=[dict(kind='GFM', bus=1, rating=200, dispatch_mw=100)]))
    assert scenario.devices[0].params == GfmParams(rating=200.0, p_set=0.5)
    assert scenario.devices[0].inertia_H == 0.0


def test_impedance_base():
    scenario = load(two_bus(system=dict(base_mva=600, impedance_base_mva=100), branches=[{'from': 1, 'to': 2, 'x': 0.06}]))
    assert scenario.branches[0].susceptance == pytest.approx(1.0 / 0.36)


def without(key, index=0):
    def change(data):
        del data['devices'][index][key]
    return change


def setting(section, index, **values):
    def change(data):
        data[section][index].update(values)
    return change


@pytest.mark.parametrize('change, message', [
    (lambda d: d.update(foo=1), 'unknown sections: foo'),
    (lambda d: d['system'].pop('base_mva'), 'system.base_mva: missing required parameter'),
    (setting('devices', 0, bus=9), r'devices\[0\]\.bus: unknown bus 9'),
    (setting('devices', 0, rating=-200), r'devices\[0\]: rating must be positive'),
    (setting('devices', 0, tau_I=0.05), 'parameters not valid for SG: tau_I'),
    (setting('devices', 0, kind='GFL'), r'devices\[0\]\.kind: value must be one of'),
    (setting('devices', 0, dispatch_mw=100), 'mutually exclusive: dispatch|dispatch_mw'),
    (without('rating'), r'devices\[0\]\.rating: missing required parameter'),
    (setting('loads', 0, p=0.5), 'mutually exclusive'),
    (setting('events', 0, time=9.0), r'events\[0\]\.time: time 9\.0 outside'),
    (setting('events', 0, bus=7), r'events\[0\]\.bus: unknown bus 7'),
    (setting('buses', 1, kind='device'), "of kind 'device' has no device"),
    (setting('buses', 1, kind='passthrough'), 'passthrough bus 2 carries load'),
    (setting('buses', 1, voltage_mag=0.0), 'voltage_mag'),
    (lambda d: d['buses'].append(dict(id=1)), 'duplicate bus ids'),
    (lambda d: d['buses'].append(dict(id=3)), 'isolated buses: 3'),
    (lambda d: d['branches'][0].update(b=10.0), 'mutually exclusive: x|b'),
    (lambda d: d.update(devices=[]), 'at least one device'),
    (lambda d: d['sim'].update(dt=0), 'sim.dt'),
])
def test_validation_errors(change, message):
    data = two_bus()
    change(data)
    with pytest.raises(ScenarioValidationError, match=message):
        load(data)


def test_invalid_yaml():
    with pytest.raises(ScenarioValidationError, match='invalid YAML'):
        load_scenario('devices: [', source='broken.yml')


def test_not_a_mapping():
    with pytest.raises(ScenarioValidationError, match='scenario must be a mapping'):
        load_scenario('- 1\n- 2\n')


@pytest.mark.parametrize('name', BUNDLED_SCENARIOS)
def test_dump_reloads_equal(name):
    scenario = load_bundled(name)
    assert load_scenario(dump_scenario(scenario)) == scenario


def test_unbalanced_dispatch_warns_on_load(caplog):
    with caplog.at_level(logging.WARNING, logger='gridfreq'):
        scenario = load(two_bus(devices=[dict(kind='SG', bus=1, rating=200, dispatch=0.6)]))
    assert 'reference device SG1 absorbs -0.1 pu' in caplog.text
    assert dispatch_imbalance(scenario) == pytest.approx(0.1)


def test_balanced_dispatch_loads_quietly(caplog):
    with caplog.at_level(logging.WARNING, logger='gridfreq'):
        scenario = load(TWO_BUS)
    assert dispatch_imbalance(scenario) == pytest.approx(0.0, abs=1e-12)
    assert 'absorbs' not in caplog.text


def test_unbalanced_dispatch_is_absorbed():
    scenario = load(two_bus(devices=[dict(kind='SG', bus=1, rating=200, dispatch=0.6)]))
    _, states = initialize_dispatch(scenario)
    assert states[0].p_m == pytest.approx(0.5, abs=1e-9)


def test_substitution_series_ieee9():
    scenario = load_bundled('ieee9')
    members = make_substitution_series(scenario)
    assert [m.label for m in members] == ['A', 'B', 'C', 'D']
    assert [m.name for m in members] == ['ieee9_A', 'ieee9_B', 'ieee9_C', 'ieee9_D']
    assert [tuple(d.kind for d in m.devices) for m in members] == [
        ('SG', 'SG', 'SG'), ('GFM', 'SG', 'SG'), ('GFM', 'GFM', 'SG'), ('GFM', 'GFM', 'GFM')]
    inertias = [aggregate_inertia((d.inertia_H, d.params.rating) for d in m.devices) for m in members]
    assert inertias == pytest.approx([4.0, 8.0 / 3, 4.0 / 3, 0.0])
    assert members[0] == scenario.__class__(**dict(scenario.__dict__, label='A', name='ieee9_A'))


def test_substitute_keeps_bus_rating_dispatch_droop():
    scenario = load_bundled('ieee9')
    original = scenario.device('G2')
    replaced = make_substitution_series(scenario, order=['G2'])[1].device('G2')
    assert replaced.kind == 'GFM'
    assert replaced.bus == original.bus
    assert replaced.dispatch == original.dispatch
    assert replaced.params.rating == original.params.rating
    assert replaced.params.p_set == original.params.p_set
    assert replaced.params.droop_M_P == original.params.droop_R_D
    assert replaced.params.tau_I == 0.05


def test_substitution_ieee39_labels():
    members = make_substitution_series(load_bundled('ieee39'))
    assert len(members) == 11
    assert members[-1].label == '10'
    assert all(d.kind == 'GFM' for d in members[-1].devices)
    assert members[5].device('G34').kind == 'GFM'
    assert members[5].device('G35').kind == 'SG'


def test_substitution_explicit_labels():
    members = make_substitution_series(load_bundled('ieee9'), order=['G3'], labels=['base', 'g3'])
    assert [m.label for m in members] == ['base', 'g3']


@pytest.mark.parametrize('order, labels, message', [
    (['G1', 'G1'], None, 'listed twice'),
    (['G7'], None, "unknown device 'G7'"),
    (['G1'], ['only'], '1 labels given for 2 scenarios'),
])
def test_substitution_errors(order, labels, message):
    with pytest.raises(ScenarioValidationError, match=message):
        make_substitution_series(load_bundled('ieee9'), order=order, labels=labels)


def test_substitution_of_gfm_rejected():
    with pytest.raises(ScenarioValidationError, match='is not an SG'):
        make_substitution_series(load_bundled('single_gfm'), order=['I1'])


def test_inertia_series():
    members = make_inertia_series(load_bundled('single_sg'), 'G1', [4, 3, 2, 1])
    assert [m.label for m in members] == ['H4', 'H3', 'H2', 'H1']
    assert [m.device('G1').params.inertia_H for m in members] == [4.0, 3.0, 2.0, 1.0]
    with pytest.raises(ScenarioValidationError, match='is not an SG'):
        make_inertia_series(load_bundled('single_gfm'), 'I1', [4])


def test_bundled_names():
    assert bundled_scenarios() == BUNDLED_SCENARIOS
    assert set(BUNDLED_SCENARIOS) >= {'single_sg', 'single_gfm', 'ieee9', 'ieee39'}


def test_find_bundled_member():
    member = find_bundled('ieee9_C')
    assert member.label == 'C'
    assert [d.kind for d in member.devices] == ['GFM', 'GFM', 'SG']
    with pytest.raises(ScenarioValidationError, match="no bundled scenario named 'ieee9_X'"):
        find_bundled('ieee9_X')


def test_resolve_scenario_forms(tmpdir):
    directory = (DATA_PATH / 'single_sg').strpath
    path = tmpdir / 'copy.yml'
    path.write(dump_scenario(load_bundled('single_sg')))
    assert resolve_scenario(directory) == load_scenario_file(directory)
    assert resolve_scenario('single_sg') == load_scenario_file(directory)
    assert resolve_scenario(path.strpath).name == 'single_sg'
    with pytest.raises(ScenarioValidationError, match='does not exist'):
        resolve_scenario((tmpdir / 'missing.yml').strpath)
