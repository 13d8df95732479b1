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

"""Time domain integration.

Classical RK4 on the stacked device states; the algebraic network is solved
again at every stage with the current device angles.
"""

import logging
import re

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
import pandas as pd

from gridfreq.module_utils.devices import (
    GfmParams,
    GfmState,
    SgParams,
    SgState,
    gfm_derivatives,
    gfm_frequency,
    init_steady_state,
    sg_derivatives,
)
from gridfreq.module_utils.gridfreq_helper import (
    InstabilityError,
    NetworkSolverError,
    ScenarioValidationError,
    SimulationError,
)
from gridfreq.module_utils.metrics import average_frequency
from gridfreq.module_utils.netmodel import NetworkSolver, solve_network


logger = logging.getLogger(__name__)

DIVERGENCE_HZ = 5.0
SNAP_TOL = 1e-12
CSV_FLOAT_FORMAT = '%.9g'


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.001
    duration: float = 20.0
    record_stride: int = 1
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    rocof_window: float = 0.1

    def __post_init__(self):
        if not self.dt > 0:
            raise ScenarioValidationError('dt must be positive, got {0}'.format(self.dt), 'sim.dt')
        if not self.duration >= 0:
            raise ScenarioValidationError('duration must not be negative, got {0}'.format(self.duration), 'sim.duration')
        if self.record_stride < 1:
            raise ScenarioValidationError('record_stride must be at least 1', 'sim.record_stride')
        if not self.rocof_window > 0:
            raise ScenarioValidationError('rocof_window must be positive', 'sim.rocof_window')

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class Event:
    time: float
    bus: int
    delta_p: float
    kind: str = 'load_step'


@dataclass(frozen=True)
class TimeSeries:
    """Recorded run.

    Device quantities are arrays of shape (samples, devices) on device base,
    bus angles (samples, buses) in radians relative to the first device.
    """

    t: np.ndarray
    device_names: Tuple[str, ...]
    kinds: Tuple[str, ...]
    ratings: np.ndarray
    f: np.ndarray
    p_m: np.ndarray
    p_e: np.ndarray
    bus_ids: Tuple[int, ...]
    angles: np.ndarray
    avg_f: np.ndarray
    event_times: Tuple[float, ...] = ()
    imbalance: np.ndarray = field(default=None)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def device(self, name):
        """Column index of a device, by name or position."""
        if isinstance(name, (int, np.integer)):
            return int(name)
        try:
            return self.device_names.index(name)
        except ValueError:
            raise KeyError("unknown device '{0}'".format(name))

    def device_f(self, name):
        return self.f[:, self.device(name)]

    def device_p_m(self, name):
        return self.p_m[:, self.device(name)]

    def device_p_e(self, name):
        return self.p_e[:, self.device(name)]

    def to_frame(self):
        columns = {'t': self.t}
        for k, name in enumerate(self.device_names):
            columns['dev:{0}:f'.format(name)] = self.f[:, k]
            columns['dev:{0}:pm'.format(name)] = self.p_m[:, k]
            columns['dev:{0}:pe'.format(name)] = self.p_e[:, k]
        for k, bus_id in enumerate(self.bus_ids):
            columns['bus:{0}:angle'.format(bus_id)] = self.angles[:, k]
        columns['avg_f'] = self.avg_f
        return pd.DataFrame(columns)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        return path

    @classmethod
    def from_csv(cls, path, kinds=None, ratings=None, event_times=()):
        frame = pd.read_csv(path)
        names = []
        for column in frame.columns:
            match = re.match(r'^dev:(.+):f$', column)
            if match:
                names.append(match.group(1))
        bus_ids = tuple(int(re.match(r'^bus:(.+):angle$', c).group(1)) for c in frame.columns if c.startswith('bus:'))
        ratings = np.ones(len(names)) if ratings is None else np.asarray(ratings, dtype=float)
        return cls(
            t=frame['t'].to_numpy(),
            device_names=tuple(names),
            kinds=tuple(kinds) if kinds is not None else ('',) * len(names),
            ratings=ratings,
            f=frame[['dev:{0}:f'.format(n) for n in names]].to_numpy(),
            p_m=frame[['dev:{0}:pm'.format(n) for n in names]].to_numpy(),
            p_e=frame[['dev:{0}:pe'.format(n) for n in names]].to_numpy(),
            bus_ids=bus_ids,
            angles=frame[['bus:{0}:angle'.format(b) for b in bus_ids]].to_numpy(),
            avg_f=frame['avg_f'].to_numpy(),
            event_times=tuple(event_times),
        )


def _has_limits(params):
    return params is not None and bool(np.any(np.isfinite(params.p_min)) or np.any(np.isfinite(params.p_max)))


def _positions(indices):
    """Contiguous index lists become slices."""
    if indices.size and np.all(np.diff(indices) == 1):
        return slice(int(indices[0]), int(indices[-1]) + 1)
    return indices


class Fleet(object):
    """Stacked device parameters and the layout of the state vector.

    The state vector is ``[delta (all devices), omega (SGs), p_m (all devices)]``.
    """

    def __init__(self, names, params, system_base):
        self.names = tuple(names)
        self.n = len(self.names)
        self.kinds = tuple('GFM' if isinstance(p, GfmParams) else 'SG' for p in params)
        self.params = tuple(params)
        self.gfm = np.asarray([k for k, kind in enumerate(self.kinds) if kind == 'GFM'], dtype=int)
        self.sg = np.asarray([k for k, kind in enumerate(self.kinds) if kind == 'SG'], dtype=int)
        self.n_gfm = self.gfm.size
        self.n_sg = self.sg.size
        self._gfm_at = _positions(self.gfm)
        self._sg_at = _positions(self.sg)
        self.gfm_params = GfmParams.stack([params[k] for k in self.gfm]) if self.n_gfm else None
        self.sg_params = SgParams.stack([params[k] for k in self.sg]) if self.n_sg else None
        self.gfm_clamp = _has_limits(self.gfm_params)
        self.sg_clamp = _has_limits(self.sg_params)
        self.ratings = np.asarray([p.rating for p in params], dtype=float)
        self.f0 = np.asarray([p.f0 for p in params], dtype=float)
        # system base -> device base
        self.to_device = system_base / self.ratings

    def pack(self, states):
        delta = np.asarray([s.delta for s in states], dtype=float)
        omega = np.asarray([states[k].omega for k in self.sg], dtype=float)
        p_m = np.asarray([s.p_m for s in states], dtype=float)
        return np.concatenate([delta, omega, p_m])

    def split(self, x):
        n, m = self.n, self.n_sg
        return x[:n], x[n:n + m], x[n + m:]

    def angles(self, x):
        return x[:self.n]

    def derivatives(self, x, p_e_system):
        delta, omega, p_m = self.split(x)
        p_e = p_e_system * self.to_device
        out = np.empty(x.shape[0])
        ddelta, domega, dp_m = self.split(out)
        if self.n_gfm:
            at = self._gfm_at
            d = gfm_derivatives(GfmState(delta[at], p_m[at]), p_e[at], self.gfm_params, clamp=self.gfm_clamp)
            ddelta[at] = d.delta
            dp_m[at] = d.p_m
        if self.n_sg:
            at = self._sg_at
            d = sg_derivatives(SgState(delta[at], omega, p_m[at]), p_e[at], self.sg_params, clamp=self.sg_clamp)
            ddelta[at] = d.delta
            domega[:] = d.omega
            dp_m[at] = d.p_m
        return out

    def frequency(self, x):
        _, omega, p_m = self.split(x)
        f = np.empty(self.n)
        if self.n_gfm:
            f[self._gfm_at] = gfm_frequency(GfmState(None, p_m[self._gfm_at]), self.gfm_params)
        if self.n_sg:
            f[self._sg_at] = omega / (2 * np.pi)
        return f


def apply_event(loads, event, network):
    """Return a copy of ``loads`` with the event's load step added."""
    if event.bus not in network.bus_index:
        raise ScenarioValidationError('event targets unknown bus {0}'.format(event.bus), 'events')
    loads = np.array(loads, dtype=float)
    loads[network.bus_index[event.bus]] += event.delta_p
    return loads


def _solve(solver, x, fleet, guess):
    return solver.solve(fleet.angles(x), guess=guess)


def step(fleet, network, x, loads, dt, solution=None, config=None, solver=None):
    """Advance the stacked state by one RK4 step.

    :param solution: network solution at ``x``, computed when omitted
    :param solver: :class:`NetworkSolver` already holding ``loads``, built when omitted
    :return: the new state and the network solution at that state
    :rtype: tuple
    """
    config = config or SimConfig(dt=dt)
    if solver is None:
        solver = NetworkSolver(network, loads, tol=config.newton_tol, max_iter=config.newton_max_iter)
    if solution is None:
        solution = _solve(solver, x, fleet, None)

    k1 = fleet.derivatives(x, solution.device_p_e)
    x2 = x + 0.5 * dt * k1
    s2 = _solve(solver, x2, fleet, solution.angles)
    k2 = fleet.derivatives(x2, s2.device_p_e)
    x3 = x + 0.5 * dt * k2
    s3 = _solve(solver, x3, fleet, s2.angles)
    k3 = fleet.derivatives(x3, s3.device_p_e)
    x4 = x + dt * k3
    s4 = _solve(solver, x4, fleet, s3.angles)
    k4 = fleet.derivatives(x4, s4.device_p_e)

    x_new = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x_new, _solve(solver, x_new, fleet, s4.angles)


def _event_steps(events, config):
    steps = {}
    for event in events:
        if not 0 <= event.time <= config.duration:
            raise ScenarioValidationError('event time {0} outside [0, {1}]'.format(event.time, config.duration), 'events')
        k = int(round(event.time / config.dt))
        if abs(k * config.dt - event.time) > SNAP_TOL:
            logger.warning('event at t=%s s snapped to the time grid at t=%s s', event.time, k * config.dt)
        steps.setdefault(k, []).append(event)
    return steps


def initial_condition(scenario):
    """Fleet, network, stacked state and loads at the dispatch equilibrium."""
    from gridfreq.module_utils.scenarios import initialize_dispatch

    network = scenario.network()
    loads = network.p_load.copy()
    device_angles, states = initialize_dispatch(scenario)

    # re-seat the set points on the exact network solution the integrator will see
    solution = solve_network(network, device_angles, loads,
                             tol=scenario.sim.newton_tol, max_iter=scenario.sim.newton_max_iter)
    params = []
    seated = []
    for device, angle, p_e in zip(scenario.devices, device_angles, solution.device_p_e):
        p, s = init_steady_state(device.params, p_e * (scenario.system_base / device.params.rating), delta=angle)
        params.append(p)
        seated.append(s)
    fleet = Fleet([d.name for d in scenario.devices], params, scenario.system_base)
    return fleet, network, fleet.pack(seated), loads, solution


def simulate(scenario, config=None):
    """Run a scenario from its dispatch equilibrium.

    :param scenario: validated scenario
    :param config: optional :class:`SimConfig`, defaults to ``scenario.sim``

    :rtype: TimeSeries
    """
    config = config or scenario.sim
    fleet, network, x, loads, solution = initial_condition(scenario)
    solver = NetworkSolver(network, loads, tol=config.newton_tol, max_iter=config.newton_max_iter)
    reference = network.device_idx[0]
    events = _event_steps(scenario.events, config)
    n_steps = config.n_steps
    record = [k for k in range(n_steps + 1) if k % config.record_stride == 0]
    if record[-1] != n_steps:
        record.append(n_steps)
    record_set = set(record)

    n_rec = len(record)
    t = np.asarray(record, dtype=float) * config.dt
    f = np.empty((n_rec, fleet.n))
    p_m = np.empty((n_rec, fleet.n))
    p_e = np.empty((n_rec, fleet.n))
    angles = np.empty((n_rec, network.n_bus))
    imbalance = np.empty(n_rec)

    logger.info('simulating %s: %d devices, %d buses, dt=%g s, duration=%g s', scenario.name, fleet.n, network.n_bus, config.dt, config.duration)
    row = 0
    for k in range(n_steps + 1):
        time = k * config.dt
        try:
            if k in events:
                for event in events[k]:
                    loads = apply_event(loads, event, network)
                    logger.debug('t=%g s: load step %g pu at bus %s', time, event.delta_p, event.bus)
                solver.set_loads(loads)
                solution = _solve(solver, x, fleet, solution.angles)

            freq = fleet.frequency(x)
            if not np.all(np.isfinite(freq)) or np.max(np.abs(freq - fleet.f0)) > DIVERGENCE_HZ:
                raise InstabilityError('t={0:.6g} s: frequency left the {1} Hz band, run is unstable'.format(time, DIVERGENCE_HZ), time=time)
            if k in record_set:
                _, _, pm = fleet.split(x)
                f[row] = freq
                p_m[row] = pm
                p_e[row] = solution.device_p_e * fleet.to_device
                angles[row] = solution.angles - solution.angles[reference]
                imbalance[row] = np.sum(solution.device_p_e) - np.sum(loads)
                row += 1
            if k == n_steps:
                break
            x, solution = step(fleet, network, x, loads, config.dt, solution=solution, config=config, solver=solver)
        except NetworkSolverError as e:
            raise SimulationError('t={0:.6g} s: {1}'.format(time, e), time=time)

    return TimeSeries(
        t=t,
        device_names=fleet.names,
        kinds=fleet.kinds,
        ratings=fleet.ratings,
        f=f,
        p_m=p_m,
        p_e=p_e,
        bus_ids=network.bus_ids,
        angles=angles,
        avg_f=average_frequency(f.T, fleet.ratings),
        event_times=tuple(sorted(k * config.dt for k, batch in events.items() for _ in batch)),
        imbalance=imbalance,
    )


def with_overrides(config, overrides):
    """Apply command line overrides onto a :class:`SimConfig`."""
    mapping = dict(dt='dt', duration='duration', window='rocof_window', stride='record_stride')
    changes = {mapping.get(k, k): v for k, v in (overrides or {}).items() if v is not None}
    return replace(config, **changes) if changes else config
