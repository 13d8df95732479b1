# -*- coding: utf-8 -*-
# (c) The gridfreq authors 2026
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Scenario files, dispatch initialization and substitution series.

A scenario file is YAML with the sections ``system``, ``buses``, ``branches``,
``devices``, ``loads``, ``events``, ``sim`` and the optional ``series``; the
grammar is documented in ``docs/scenarios.rst``.
"""

import logging
import os
import sys

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import yaml

from gridfreq.module_utils.devices import (
    GfmParams,
    SgParams,
    check_params,
    device_inertia,
    init_steady_state,
)
from gridfreq.module_utils.engine import Event, SimConfig
from gridfreq.module_utils.gridfreq_helper import (
    NetworkSolverError,
    NetworkStructureError,
    ScenarioValidationError,
    check_spec,
)
from gridfreq.module_utils.netmodel import Branch, Bus, Network, solve_dispatch


logger = logging.getLogger(__name__)

SOURCE_DATA_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), 'data')
# installed copies live under <prefix>/share/gridfreq/data
DATA_PATH = SOURCE_DATA_PATH if os.path.isdir(SOURCE_DATA_PATH) else os.path.join(sys.prefix, 'share', 'gridfreq', 'data')
SCENARIO_FILE = 'scenario.yml'
SECTIONS = ('name', 'description', 'system', 'buses', 'branches', 'devices', 'loads', 'events', 'sim', 'series')

SYSTEM_SPEC = dict(
    base_mva=dict(type='float', required=True),
    f0=dict(type='float', default=60.0),
    impedance_base_mva=dict(type='float'),
)

BUS_SPEC = dict(
    id=dict(type='int', required=True),
    kind=dict(type='str', choices=['device', 'load', 'passthrough']),
    voltage_mag=dict(type='float', default=1.0, aliases=['v']),
)

BRANCH_SPEC = dict(
    from_bus=dict(type='int', required=True, aliases=['from']),
    to_bus=dict(type='int', required=True, aliases=['to']),
    x=dict(type='float'),
    b=dict(type='float'),
    in_service=dict(type='bool', default=True),
)

DEVICE_SPEC = dict(
    name=dict(type='str'),
    kind=dict(type='str', required=True, choices=['SG', 'GFM']),
    bus=dict(type='int', required=True),
    rating=dict(type='float', required=True),
    dispatch=dict(type='float'),
    dispatch_mw=dict(type='float'),
    inertia_H=dict(type='float', aliases=['H']),
    damping_D=dict(type='float', aliases=['D']),
    droop_R_D=dict(type='float', aliases=['R', 'R_D']),
    tau_G=dict(type='float'),
    droop_M_P=dict(type='float', aliases=['M_P']),
    tau_I=dict(type='float'),
    p_min=dict(type='float'),
    p_max=dict(type='float'),
)

SG_KEYS = ('inertia_H', 'damping_D', 'droop_R_D', 'tau_G')
GFM_KEYS = ('droop_M_P', 'tau_I')

LOAD_SPEC = dict(
    bus=dict(type='int', required=True),
    p=dict(type='float'),
    p_mw=dict(type='float'),
)

EVENT_SPEC = dict(
    time=dict(type='float', required=True),
    kind=dict(type='str', default='load_step', choices=['load_step']),
    bus=dict(type='int', required=True),
    delta_p=dict(type='float'),
    delta_p_mw=dict(type='float'),
)

SIM_SPEC = dict(
    dt=dict(type='float', default=0.001),
    duration=dict(type='float', default=20.0),
    record_stride=dict(type='int', default=1),
    newton_tol=dict(type='float', default=1e-10),
    newton_max_iter=dict(type='int', default=50),
    rocof_window=dict(type='float', default=0.1),
)

SERIES_SPEC = dict(
    order=dict(type='list', default=[]),
    labels=dict(type='list'),
    tau_I=dict(type='float', default=0.05),
)


@dataclass(frozen=True)
class Device:
    name: str
    kind: str
    bus: int
    params: object
    dispatch: float

    @property
    def inertia_H(self):
        return device_inertia(self.params)


@dataclass(frozen=True)
class SeriesSpec:
    order: Tuple[str, ...] = ()
    labels: Optional[Tuple[str, ...]] = None
    tau_I: float = 0.05


@dataclass(frozen=True)
class Scenario:
    """Validated, immutable simulation input."""

    name: str
    system_base: float
    f0: float
    buses: Tuple[Bus, ...]
    branches: Tuple[Branch, ...]
    devices: Tuple[Device, ...]
    events: Tuple[Event, ...] = ()
    sim: SimConfig = SimConfig()
    series: Optional[SeriesSpec] = None
    description: str = ''
    label: Optional[str] = None

    def network(self):
        return Network(self.buses, self.branches, [d.bus for d in self.devices])

    @property
    def loads(self):
        return np.asarray([bus.p_load for bus in self.buses], dtype=float)

    def device(self, name):
        for device in self.devices:
            if device.name == name:
                return device
        raise ScenarioValidationError("unknown device '{0}'".format(name), 'devices')


def _as_list(value, path):
    if value is None:
        return []
    if not isinstance(value, list):
        raise ScenarioValidationError('expected a list', path)
    return value


def _device_params(entry, f0, path):
    kind = entry['kind']
    foreign = GFM_KEYS if kind == 'SG' else SG_KEYS
    misplaced = [k for k in foreign if entry.get(k) is not None]
    if misplaced:
        raise ScenarioValidationError('parameters not valid for {0}: {1}'.format(kind, ', '.join(misplaced)), path)

    given = {k: entry[k] for k in (SG_KEYS if kind == 'SG' else GFM_KEYS) if entry.get(k) is not None}
    for key in ('p_min', 'p_max'):
        if entry.get(key) is not None:
            given[key] = entry[key]
    try:
        if kind == 'SG':
            return SgParams(rating=entry['rating'], f0=f0, **given)
        return GfmParams(rating=entry['rating'], f0=f0, **given)
    except ScenarioValidationError as e:
        raise ScenarioValidationError(str(e), path)


def _parse(data, source=None):
    if not isinstance(data, dict):
        raise ScenarioValidationError('scenario must be a mapping', source)
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ScenarioValidationError('unknown sections: {0}'.format(', '.join(str(u) for u in unknown)), source)

    system = check_spec(data.get('system'), SYSTEM_SPEC, 'system')
    base = system['base_mva']
    if not base > 0:
        raise ScenarioValidationError('base_mva must be positive', 'system.base_mva')
    z_base = system['impedance_base_mva'] or base
    f0 = system['f0']

    raw_buses = [check_spec(b, BUS_SPEC, 'buses[{0}]'.format(k)) for k, b in enumerate(_as_list(data.get('buses'), 'buses'))]
    if not raw_buses:
        raise ScenarioValidationError('at least one bus is required', 'buses')
    bus_ids = [b['id'] for b in raw_buses]
    if len(set(bus_ids)) != len(bus_ids):
        raise ScenarioValidationError('duplicate bus ids', 'buses')

    branches = []
    for k, entry in enumerate(_as_list(data.get('branches'), 'branches')):
        path = 'branches[{0}]'.format(k)
        entry = check_spec(entry, BRANCH_SPEC, path, mutually_exclusive=[['x', 'b']], required_one_of=[['x', 'b']])
        for end in ('from_bus', 'to_bus'):
            if entry[end] not in bus_ids:
                raise ScenarioValidationError('unknown bus {0}'.format(entry[end]), '{0}.{1}'.format(path, end))
        if entry['x'] is not None:
            if not entry['x'] > 0:
                raise ScenarioValidationError('x must be positive', path + '.x')
            susceptance = 1.0 / (entry['x'] * base / z_base)
        else:
            susceptance = entry['b']
        if not susceptance > 0:
            raise ScenarioValidationError('susceptance must be positive', path)
        branches.append(Branch(entry['from_bus'], entry['to_bus'], susceptance, entry['in_service']))

    devices = []
    for k, entry in enumerate(_as_list(data.get('devices'), 'devices')):
        path = 'devices[{0}]'.format(k)
        entry = check_spec(entry, DEVICE_SPEC, path, mutually_exclusive=[['dispatch', 'dispatch_mw']])
        if entry['bus'] not in bus_ids:
            raise ScenarioValidationError('unknown bus {0}'.format(entry['bus']), path + '.bus')
        params = _device_params(entry, f0, path)
        if entry['dispatch_mw'] is not None:
            dispatch = entry['dispatch_mw'] / entry['rating']
        else:
            dispatch = entry['dispatch'] or 0.0
        name = entry['name'] or '{0}{1}'.format(entry['kind'], entry['bus'])
        check_params(params, name)
        devices.append(Device(name=name, kind=entry['kind'], bus=entry['bus'], params=replace(params, p_set=dispatch), dispatch=dispatch))
    if not devices:
        raise ScenarioValidationError('at least one device is required', 'devices')
    names = [d.name for d in devices]
    if len(set(names)) != len(names):
        raise ScenarioValidationError('duplicate device names', 'devices')
    device_buses = [d.bus for d in devices]
    if len(set(device_buses)) != len(device_buses):
        raise ScenarioValidationError('more than one device on one bus', 'devices')

    p_load = dict.fromkeys(bus_ids, 0.0)
    for k, entry in enumerate(_as_list(data.get('loads'), 'loads')):
        path = 'loads[{0}]'.format(k)
        entry = check_spec(entry, LOAD_SPEC, path, mutually_exclusive=[['p', 'p_mw']], required_one_of=[['p', 'p_mw']])
        if entry['bus'] not in bus_ids:
            raise ScenarioValidationError('unknown bus {0}'.format(entry['bus']), path + '.bus')
        p_load[entry['bus']] += entry['p'] if entry['p'] is not None else entry['p_mw'] / base

    buses = []
    for k, entry in enumerate(raw_buses):
        kind = entry['kind']
        inferred = 'device' if entry['id'] in device_buses else ('load' if p_load[entry['id']] != 0 else 'passthrough')
        if kind is None:
            kind = inferred
        elif (kind == 'device') != (entry['id'] in device_buses):
            raise ScenarioValidationError("bus {0} of kind '{1}' {2}".format(
                entry['id'], kind, 'carries a device' if entry['id'] in device_buses else 'has no device'), 'buses[{0}]'.format(k))
        elif kind == 'passthrough' and p_load[entry['id']] != 0:
            raise ScenarioValidationError('passthrough bus {0} carries load'.format(entry['id']), 'buses[{0}]'.format(k))
        buses.append(Bus(id=entry['id'], kind=kind, voltage_mag=entry['voltage_mag'], p_load=p_load[entry['id']]))

    sim = SimConfig(**check_spec(data.get('sim'), SIM_SPEC, 'sim'))

    events = []
    for k, entry in enumerate(_as_list(data.get('events'), 'events')):
        path = 'events[{0}]'.format(k)
        entry = check_spec(entry, EVENT_SPEC, path, mutually_exclusive=[['delta_p', 'delta_p_mw']], required_one_of=[['delta_p', 'delta_p_mw']])
        if entry['bus'] not in bus_ids:
            raise ScenarioValidationError('unknown bus {0}'.format(entry['bus']), path + '.bus')
        if not 0 <= entry['time'] <= sim.duration:
            raise ScenarioValidationError('time {0} outside [0, {1}]'.format(entry['time'], sim.duration), path + '.time')
        delta_p = entry['delta_p'] if entry['delta_p'] is not None else entry['delta_p_mw'] / base
        events.append(Event(time=entry['time'], bus=entry['bus'], delta_p=delta_p, kind=entry['kind']))
    events.sort(key=lambda e: e.time)

    series = None
    if data.get('series') is not None:
        entry = check_spec(data['series'], SERIES_SPEC, 'series')
        order = tuple(str(o) for o in entry['order'])
        labels = tuple(str(label) for label in entry['labels']) if entry['labels'] is not None else None
        if labels is not None and len(labels) != len(order) + 1:
            raise ScenarioValidationError('needs {0} labels for {1} replacements'.format(len(order) + 1, len(order)), 'series.labels')
        series = SeriesSpec(order=order, labels=labels, tau_I=entry['tau_I'])

    scenario = Scenario(
        name=str(data.get('name') or 'scenario'),
        system_base=base,
        f0=f0,
        buses=tuple(buses),
        branches=tuple(branches),
        devices=tuple(devices),
        events=tuple(events),
        sim=sim,
        series=series,
        description=str(data.get('description') or ''),
    )
    try:
        scenario.network()
    except NetworkStructureError as e:
        raise ScenarioValidationError(str(e), source)
    _warn_unbalanced(scenario)
    return scenario


def dispatch_imbalance(scenario):
    """Scheduled generation minus load on the system base."""
    generation = sum(d.dispatch * d.params.rating for d in scenario.devices) / scenario.system_base
    return generation - sum(bus.p_load for bus in scenario.buses)


def _warn_unbalanced(scenario):
    # lossless network: the reference device takes up the whole imbalance
    imbalance = dispatch_imbalance(scenario)
    if scenario.devices and abs(imbalance) > 1e-6:
        reference = scenario.devices[0]
        logger.warning('dispatch of %s is unbalanced, reference device %s absorbs %.6g pu',
                       scenario.name, reference.name, -imbalance * scenario.system_base / reference.params.rating)


def load_scenario(text, source=None):
    """Parse and validate scenario YAML.

    :param text: YAML document
    :param source: optional file name used in messages

    :rtype: Scenario
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioValidationError('invalid YAML: {0}'.format(e), source)
    scenario = _parse(data, source)
    logger.debug('loaded scenario %s: %d buses, %d branches, %d devices', scenario.name, len(scenario.buses), len(scenario.branches), len(scenario.devices))
    return scenario


def load_scenario_file(path):
    if os.path.isdir(path):
        path = os.path.join(path, SCENARIO_FILE)
    with open(path, encoding='utf-8') as scenario_file:
        return load_scenario(scenario_file.read(), source=path)


def dump_scenario(scenario):
    """Serialize a scenario into YAML that reloads to an equal scenario.

    Susceptances are written on system base, loads and dispatch in per-unit.
    """
    devices = []
    for device in scenario.devices:
        entry = dict(name=device.name, kind=device.kind, bus=device.bus, rating=float(device.params.rating), dispatch=float(device.dispatch))
        keys = SG_KEYS if device.kind == 'SG' else GFM_KEYS
        entry.update({k: float(getattr(device.params, k)) for k in keys})
        for key in ('p_min', 'p_max'):
            value = float(getattr(device.params, key))
            if np.isfinite(value):
                entry[key] = value
        devices.append(entry)

    data = dict(
        name=scenario.name,
        description=scenario.description,
        system=dict(base_mva=float(scenario.system_base), f0=float(scenario.f0)),
        buses=[dict(id=b.id, kind=b.kind, voltage_mag=float(b.voltage_mag)) for b in scenario.buses],
        branches=[dict(from_bus=b.from_bus, to_bus=b.to_bus, b=float(b.susceptance), in_service=b.in_service) for b in scenario.branches],
        devices=devices,
        loads=[dict(bus=b.id, p=float(b.p_load)) for b in scenario.buses if b.p_load != 0],
        events=[dict(time=float(e.time), kind=e.kind, bus=e.bus, delta_p=float(e.delta_p)) for e in scenario.events],
        sim=dict(
            dt=float(scenario.sim.dt),
            duration=float(scenario.sim.duration),
            record_stride=int(scenario.sim.record_stride),
            newton_tol=float(scenario.sim.newton_tol),
            newton_max_iter=int(scenario.sim.newton_max_iter),
            rocof_window=float(scenario.sim.rocof_window),
        ),
    )
    if scenario.series is not None:
        data['series'] = dict(order=list(scenario.series.order), tau_I=float(scenario.series.tau_I))
        if scenario.series.labels is not None:
            data['series']['labels'] = list(scenario.series.labels)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def initialize_dispatch(scenario):
    """Steady state at the scheduled dispatch.

    The first device is the angle reference and absorbs any imbalance between
    dispatch and load.

    :return: device angles in radians and one equilibrium state per device
    :rtype: tuple
    """
    network = scenario.network()
    to_system = np.asarray([d.params.rating / scenario.system_base for d in scenario.devices])
    dispatch = np.asarray([d.dispatch for d in scenario.devices]) * to_system
    try:
        solution = solve_dispatch(network, dispatch, network.p_load, ref=0,
                                  tol=scenario.sim.newton_tol, max_iter=scenario.sim.newton_max_iter)
    except NetworkSolverError as e:
        raise e.__class__('initialization of {0} failed: {1}'.format(scenario.name, e), mismatch=e.mismatch, iterations=e.iterations)

    p_e0 = solution.device_p_e / to_system
    absorbed = p_e0[0] - scenario.devices[0].dispatch
    if abs(absorbed) > 1e-6:
        logger.debug('%s: reference device %s absorbs %.6g pu', scenario.name, scenario.devices[0].name, absorbed)

    angles = solution.angles[network.device_idx]
    states = [init_steady_state(device.params, p_e, delta=angle)[1]
              for device, p_e, angle in zip(scenario.devices, p_e0, angles)]
    return angles, states


def _series_labels(scenario, count, labels):
    if labels is None and scenario.series is not None and scenario.series.labels is not None and len(scenario.series.labels) == count:
        labels = scenario.series.labels
    if labels is None:
        labels = [str(k) for k in range(count)]
    labels = [str(label) for label in labels]
    if len(labels) != count:
        raise ScenarioValidationError('{0} labels given for {1} scenarios'.format(len(labels), count), 'series.labels')
    return labels


def substitute(device, tau_I=0.05):
    """GFM replacing an SG: same bus, rating, dispatch and droop."""
    sg = device.params
    params = GfmParams(droop_M_P=sg.droop_R_D, tau_I=tau_I, rating=sg.rating, p_set=sg.p_set, f0=sg.f0, p_min=sg.p_min, p_max=sg.p_max)
    return replace(device, kind='GFM', params=params)


def make_substitution_series(scenario, order=None, labels=None):
    """Replace the SGs named in ``order`` one after another by GFMs.

    :param order: device names, defaults to the scenario's ``series.order``
    :param labels: one label per generated scenario

    :return: ``len(order) + 1`` scenarios, the first one unchanged
    :rtype: list
    """
    if order is None:
        order = scenario.series.order if scenario.series is not None else ()
    order = [str(o) for o in order]
    if len(set(order)) != len(order):
        raise ScenarioValidationError('device listed twice in substitution order', 'series.order')
    for name in order:
        if scenario.device(name).kind != 'SG':
            raise ScenarioValidationError("device '{0}' is not an SG".format(name), 'series.order')
    labels = _series_labels(scenario, len(order) + 1, labels)
    tau_I = scenario.series.tau_I if scenario.series is not None else 0.05

    members = []
    devices = list(scenario.devices)
    for k, label in enumerate(labels):
        if k > 0:
            position = [d.name for d in devices].index(order[k - 1])
            devices[position] = substitute(devices[position], tau_I)
        members.append(replace(scenario, devices=tuple(devices), label=label, name='{0}_{1}'.format(scenario.name, label)))
    return members


def make_inertia_series(scenario, device, inertias, labels=None):
    """Copies of ``scenario`` with the inertia of one SG swept."""
    target = scenario.device(device)
    if target.kind != 'SG':
        raise ScenarioValidationError("device '{0}' is not an SG".format(device), 'devices')
    if labels is None:
        labels = ['H{0:g}'.format(h) for h in inertias]
    if len(labels) != len(inertias):
        raise ScenarioValidationError('{0} labels given for {1} inertias'.format(len(labels), len(inertias)))

    members = []
    for h, label in zip(inertias, labels):
        devices = tuple(replace(d, params=replace(d.params, inertia_H=float(h))) if d.name == device else d for d in scenario.devices)
        members.append(replace(scenario, devices=devices, label=str(label), name='{0}_{1}'.format(scenario.name, label)))
    return members


def bundled_scenarios():
    """Names of the scenarios shipped in ``data/``."""
    if not os.path.isdir(DATA_PATH):
        return []
    return sorted(d for d in os.listdir(DATA_PATH) if os.path.isfile(os.path.join(DATA_PATH, d, SCENARIO_FILE)))


def find_bundled(name):
    """Bundled scenario by name.

    ``<name>_<label>`` selects one member of the bundled substitution series,
    e.g. ``ieee9_C``.
    """
    if name in bundled_scenarios():
        return load_scenario_file(os.path.join(DATA_PATH, name))
    base, _, label = name.rpartition('_')
    if base in bundled_scenarios():
        scenario = load_scenario_file(os.path.join(DATA_PATH, base))
        for member in make_substitution_series(scenario):
            if member.label == label:
                return member
    raise ScenarioValidationError("no bundled scenario named '{0}'".format(name))


def resolve_scenario(reference):
    """Load a scenario given as file, directory or bundled name."""
    if os.path.exists(reference):
        return load_scenario_file(reference)
    if os.sep not in reference and not reference.endswith(('.yml', '.yaml')):
        return find_bundled(reference)
    raise ScenarioValidationError("scenario path '{0}' does not exist".format(reference))
