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

"""Lossless active-power network under constant voltage magnitudes.

Device bus angles are boundary conditions; the remaining bus angles follow
from the sine-law balance and are found by Newton iteration.
"""

import logging
import math

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from gridfreq.module_utils.gridfreq_helper import (
    InfeasibleFlowError,
    NetworkSolverError,
    NetworkStructureError,
)


logger = logging.getLogger(__name__)

BUS_KINDS = ('device', 'load', 'passthrough')

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
DENSE_BUS_LIMIT = 100


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = 'load'
    voltage_mag: float = 1.0
    p_load: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    susceptance: float
    in_service: bool = True


@dataclass(frozen=True)
class NetworkSolution:
    """Converged network state.

    ``angles`` holds one entry per bus (network order), ``device_p_e`` one entry
    per device bus in device order, both on system base.
    """

    angles: np.ndarray
    device_p_e: np.ndarray
    max_mismatch: float
    iterations: int = 0
    residuals: Tuple[float, ...] = field(default_factory=tuple)


def _bus_positions(branches, n_bus, bus_index):
    rows, cols = [], []
    for branch in branches:
        if bus_index is None:
            i, j = branch.from_bus, branch.to_bus
            if not (0 <= i < n_bus and 0 <= j < n_bus):
                raise NetworkStructureError('branch {0}-{1} references a bus outside 0..{2}'.format(branch.from_bus, branch.to_bus, n_bus - 1))
        else:
            try:
                i, j = bus_index[branch.from_bus], bus_index[branch.to_bus]
            except KeyError as e:
                raise NetworkStructureError('branch {0}-{1} references unknown bus {2}'.format(branch.from_bus, branch.to_bus, e.args[0]))
        rows.append(i)
        cols.append(j)
    return np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)


def build_susceptance(branches, n_bus, bus_index=None):
    """Assemble the nodal susceptance matrix of the in-service branches.

    :param branches: iterable of :class:`Branch`
    :param n_bus: number of buses
    :param bus_index: optional mapping bus id -> matrix position, identity when omitted

    :return: symmetric matrix with zero row sums
    :rtype: scipy.sparse.csr_matrix
    """
    in_service = [b for b in branches if b.in_service]
    if n_bus == 0:
        raise NetworkStructureError('network has no buses')

    rows, cols = _bus_positions(in_service, n_bus, bus_index)
    b = np.asarray([branch.susceptance for branch in in_service], dtype=float)

    adjacency = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_bus, n_bus))
    n_components, labels = csgraph.connected_components(adjacency, directed=False)
    if n_components > 1:
        ids = list(bus_index) if bus_index is not None else list(range(n_bus))
        sizes = np.bincount(labels)
        isolated = int(np.argmin(sizes))
        members = [ids[k] for k in np.flatnonzero(labels == isolated)]
        raise NetworkStructureError('network is not connected, isolated buses: {0}'.format(', '.join(str(m) for m in members)))

    off = sparse.coo_matrix((-b, (rows, cols)), shape=(n_bus, n_bus))
    off = off + off.T
    diag = sparse.diags(-np.asarray(off.sum(axis=1)).ravel())
    return (off + diag).tocsr()


class Network(object):
    """Compiled, immutable view of buses and branches.

    Devices attach in ``device_buses`` order; the first one is the angle reference.
    """

    def __init__(self, buses, branches, device_buses):
        self.buses = tuple(buses)
        self.branches = tuple(branches)
        self.device_buses = tuple(device_buses)

        self.bus_ids = tuple(bus.id for bus in self.buses)
        if len(set(self.bus_ids)) != len(self.bus_ids):
            raise NetworkStructureError('duplicate bus ids')
        self.bus_index = {bus_id: k for k, bus_id in enumerate(self.bus_ids)}

        for bus in self.buses:
            if bus.kind not in BUS_KINDS:
                raise NetworkStructureError("bus {0}: unknown kind '{1}'".format(bus.id, bus.kind))
            if not bus.voltage_mag > 0:
                raise NetworkStructureError('bus {0}: voltage_mag must be positive'.format(bus.id))
            if bus.kind == 'passthrough' and bus.p_load != 0:
                raise NetworkStructureError('bus {0}: passthrough bus carries load'.format(bus.id))

        for branch in self.branches:
            if branch.from_bus == branch.to_bus:
                raise NetworkStructureError('branch {0}-{1} connects a bus to itself'.format(branch.from_bus, branch.to_bus))
            if not branch.susceptance > 0:
                raise NetworkStructureError('branch {0}-{1}: susceptance must be positive'.format(branch.from_bus, branch.to_bus))

        if not self.device_buses:
            raise NetworkStructureError('at least one device bus is required as angle reference')
        for bus_id in self.device_buses:
            if bus_id not in self.bus_index:
                raise NetworkStructureError('device attached to unknown bus {0}'.format(bus_id))
            if self.buses[self.bus_index[bus_id]].kind != 'device':
                raise NetworkStructureError("device attached to bus {0} of kind '{1}'".format(bus_id, self.buses[self.bus_index[bus_id]].kind))
        if len(set(self.device_buses)) != len(self.device_buses):
            raise NetworkStructureError('more than one device attached to one bus')
        orphans = [bus.id for bus in self.buses if bus.kind == 'device' and bus.id not in self.device_buses]
        if orphans:
            raise NetworkStructureError('device buses without device: {0}'.format(', '.join(str(o) for o in orphans)))

        self.n_bus = len(self.buses)
        self.susceptance = build_susceptance(self.branches, self.n_bus, self.bus_index)

        active = [b for b in self.branches if b.in_service]
        rows, cols = _bus_positions(active, self.n_bus, self.bus_index)
        n_branch = len(active)
        self.incidence = sparse.csr_matrix(
            (np.concatenate([np.ones(n_branch), -np.ones(n_branch)]),
             (np.concatenate([rows, cols]), np.concatenate([np.arange(n_branch), np.arange(n_branch)]))),
            shape=(self.n_bus, n_branch),
        )
        self.voltage = np.asarray([bus.voltage_mag for bus in self.buses], dtype=float)
        self.branch_b = np.asarray([b.susceptance for b in active], dtype=float)
        self.branch_from = rows
        self.branch_to = cols
        self.branch_gain = self.branch_b * self.voltage[rows] * self.voltage[cols]
        self.bus_capacity = np.asarray(abs(self.incidence) @ self.branch_gain).ravel()

        self.p_load = np.asarray([bus.p_load for bus in self.buses], dtype=float)
        self.device_idx = np.asarray([self.bus_index[b] for b in self.device_buses], dtype=int)
        self.free_idx = np.setdiff1d(np.arange(self.n_bus), self.device_idx)

        # bus_map: bus x branch, branch_map: branch x bus (theta_from - theta_to)
        self.dense = self.n_bus <= DENSE_BUS_LIMIT
        if self.dense:
            self.bus_map = self.incidence.toarray()
            self.branch_map = np.ascontiguousarray(self.bus_map.T)
        else:
            self.bus_map = self.incidence
            self.branch_map = self.incidence.T.tocsr()
        self.free_rows = self.rows(self.free_idx)
        self.device_rows = self.rows(self.device_idx)

    def __repr__(self):
        return 'Network(buses={0}, branches={1}, devices={2})'.format(self.n_bus, len(self.branch_b), len(self.device_idx))

    def bus_position(self, bus_id):
        return self.bus_index[bus_id]

    def rows(self, positions):
        """Incidence rows of the given bus positions."""
        return self.bus_map[np.asarray(positions, dtype=int)]

    def branch_angles(self, angles):
        return self.branch_map @ angles

    def injections(self, angles):
        """Active power leaving every bus into the network."""
        return self.bus_map @ (self.branch_gain * np.sin(self.branch_map @ angles))

    def jacobian(self, angles, unknown, rows=None):
        rows = self.rows(unknown) if rows is None else rows
        weights = self.branch_gain * np.cos(self.branch_map @ angles)
        if self.dense:
            return (rows * weights) @ rows.T
        return (rows @ sparse.diags(weights) @ rows.T).tocsc()

    def max_angle_spread(self, angles):
        return float(np.max(np.abs(self.branch_angles(angles)))) if len(self.branch_b) else 0.0


def _factorize(matrix):
    """Return a callable solving ``matrix @ x = rhs``."""
    try:
        if sparse.issparse(matrix):
            return splu(matrix.tocsc()).solve
        return np.linalg.inv(matrix).dot
    except (np.linalg.LinAlgError, RuntimeError) as e:
        raise NetworkSolverError('singular network jacobian: {0}'.format(e))


def _check_capacity(network, unknown, target):
    """A bus cannot move more power than its branches carry at 90 degrees."""
    overload = np.flatnonzero(np.abs(target) > network.bus_capacity[unknown])
    if overload.size:
        position = unknown[overload[0]]
        raise InfeasibleFlowError(
            'bus {0}: required transfer {1:.6g} pu exceeds branch capacity {2:.6g} pu'.format(
                network.bus_ids[position], abs(target[overload[0]]), network.bus_capacity[position]),
        )


def _newton(network, theta, unknown, target, tol, max_iter, rows=None, cache=None):
    """Solve injections(theta)[unknown] == target for theta[unknown] in place.

    Without ``cache`` the Jacobian is refactorized every iteration. With a
    ``cache`` dict the last factorization is reused across calls and only
    refreshed when an iteration fails to halve the mismatch.

    :return: angles, branch flows, mismatch history and iteration count
    :rtype: tuple
    """
    rows = network.rows(unknown) if rows is None else rows
    solve = cache.get('solve') if cache is not None else None
    residuals = []
    iterations = 0
    while True:
        spread = network.branch_map @ theta
        flows = network.branch_gain * np.sin(spread)
        if not unknown.size:
            residuals.append(0.0)
            break
        mismatch = rows @ flows - target
        worst = float(np.abs(mismatch).max())
        residuals.append(worst)
        if not math.isfinite(worst):
            raise NetworkSolverError('network solve diverged', mismatch=worst, iterations=iterations)
        if worst <= tol:
            break
        if iterations >= max_iter:
            raise NetworkSolverError(
                'network solve did not converge in {0} iterations, mismatch {1:.3e} pu'.format(iterations, worst),
                mismatch=worst, iterations=iterations,
            )
        if solve is None or cache is None or (len(residuals) > 1 and worst > 0.5 * residuals[-2]):
            solve = _factorize(network.jacobian(theta, unknown, rows=rows))
            if cache is not None:
                cache['solve'] = solve
        theta[unknown] -= solve(mismatch)
        iterations += 1

    if spread.size and np.abs(spread).max() > np.pi / 2:
        raise InfeasibleFlowError('branch angle difference beyond 90 degrees, flow exceeds sine-law limit',
                                  mismatch=residuals[-1], iterations=iterations)
    return theta, flows, residuals, iterations


def _dc_guess(network, theta, unknown, target):
    known = np.setdiff1d(np.arange(network.n_bus), unknown)
    b = network.susceptance
    rhs = target - b[unknown][:, known] @ theta[known]
    block = b[unknown][:, unknown]
    return np.atleast_1d(_factorize(block.toarray() if network.dense else block)(rhs))


class NetworkSolver(object):
    """Repeated solves of one network for imposed device angles.

    Holds the current loads and the factorized free-bus Jacobian, which is
    reused from one call to the next while Newton keeps contracting.
    """

    def __init__(self, network, loads=None, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER, reuse_jacobian=True):
        self.network = network
        self.tol = tol
        self.max_iter = max_iter
        self._cache = {} if reuse_jacobian else None
        self.set_loads(network.p_load if loads is None else loads)

    def set_loads(self, loads):
        """Switch to new bus loads, per-unit on system base."""
        loads = np.array(loads, dtype=float)
        target = -loads[self.network.free_idx]
        _check_capacity(self.network, self.network.free_idx, target)
        self.loads = loads
        self._target = target
        self._local = loads[self.network.device_idx]

    def solve(self, device_angles, guess=None):
        """Solve the non-device bus angles.

        :param device_angles: radians, one per device bus in device order
        :param guess: optional full angle vector used as warm start

        :rtype: NetworkSolution
        """
        network = self.network
        device_angles = np.asarray(device_angles, dtype=float)
        if guess is None:
            theta = np.zeros(network.n_bus)
        else:
            # common rotation of the device angles carries the whole network along
            theta = np.array(guess, dtype=float)
            theta += (device_angles - theta[network.device_idx]).sum() / device_angles.size
        theta[network.device_idx] = device_angles
        unknown = network.free_idx
        if guess is None and unknown.size:
            theta[unknown] = _dc_guess(network, theta, unknown, self._target)

        theta, flows, residuals, iterations = _newton(
            network, theta, unknown, self._target, self.tol, self.max_iter, rows=network.free_rows, cache=self._cache,
        )
        return NetworkSolution(
            angles=theta,
            device_p_e=network.device_rows @ flows + self._local,
            max_mismatch=residuals[-1],
            iterations=iterations,
            residuals=tuple(residuals),
        )


def solve_network(network, device_angles, loads, guess=None, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve the non-device bus angles for imposed device angles.

    :param network: compiled :class:`Network`
    :param device_angles: radians, one per device bus in device order
    :param loads: per-unit load per bus on system base, positive is consumption
    :param guess: optional full angle vector used as warm start

    :return: converged network state
    :rtype: NetworkSolution
    """
    device_angles = np.asarray(device_angles, dtype=float)
    if not np.all(np.isfinite(device_angles)):
        raise NetworkSolverError('device angles must be finite')
    solver = NetworkSolver(network, loads, tol=tol, max_iter=max_iter, reuse_jacobian=False)
    return solver.solve(device_angles, guess=guess)


def solve_dispatch(network, dispatch, loads, ref=0, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Initialization power flow.

    Every device except ``ref`` injects its scheduled ``dispatch`` (system base);
    the reference device bus holds angle zero and absorbs the balance.

    :return: converged state, ``device_p_e`` of the reference includes the absorbed imbalance
    :rtype: NetworkSolution
    """
    dispatch = np.asarray(dispatch, dtype=float)
    loads = np.asarray(loads, dtype=float)
    if dispatch.shape != (len(network.device_idx),):
        raise NetworkSolverError('dispatch needs one entry per device')

    injection = -loads.copy()
    injection[network.device_idx] += dispatch
    ref_position = network.device_idx[ref]
    unknown = np.setdiff1d(np.arange(network.n_bus), [ref_position])
    _check_capacity(network, unknown, injection[unknown])

    theta = np.zeros(network.n_bus)
    if unknown.size:
        theta[unknown] = _dc_guess(network, theta, unknown, injection[unknown])
    theta, flows, residuals, iterations = _newton(network, theta, unknown, injection[unknown], tol, max_iter)
    device_p_e = network.device_rows @ flows + loads[network.device_idx]
    logger.debug('dispatch power flow converged in %d iterations', iterations)
    return NetworkSolution(
        angles=theta,
        device_p_e=device_p_e,
        max_mismatch=residuals[-1],
        iterations=iterations,
        residuals=tuple(residuals),
    )


def lossless_imbalance(solution, loads):
    """Sum of device p_e minus sum of loads."""
    return float(np.sum(solution.device_p_e) - np.sum(loads))
