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

"""Reduced device models.

Synchronous generator: swing equation plus a first order governor (3 states).
Grid-forming inverter: multi-loop droop with a low pass power filter (2 states).

All powers are per-unit on device base, droops are per-unit ratios, so a
steady power deviation ``dp`` moves the frequency by ``f0 * droop * dp`` Hz.
Every function broadcasts over numpy arrays; a stacked parameter block
evaluates a whole fleet in one call.
"""

import logging

from dataclasses import dataclass, fields, replace
from typing import Union

import numpy as np

from gridfreq.module_utils.gridfreq_helper import ScenarioValidationError


logger = logging.getLogger(__name__)

F0 = 60.0
TAU_I_WARN = 0.08
TAU_G_WARN = 0.5

Number = Union[float, np.ndarray]


def _stack(cls, items):
    if not items:
        raise ValueError('nothing to stack')
    return cls(**{f.name: np.asarray([getattr(item, f.name) for item in items], dtype=float) for f in fields(cls)})


def _positive(value, name):
    if not np.all(np.asarray(value) > 0):
        raise ScenarioValidationError('{0} must be positive, got {1}'.format(name, value))


@dataclass(frozen=True)
class GfmParams:
    droop_M_P: Number = 0.05
    tau_I: Number = 0.05
    rating: Number = 200.0
    p_set: Number = 0.0
    f0: Number = F0
    p_min: Number = -np.inf
    p_max: Number = np.inf

    def __post_init__(self):
        _positive(self.droop_M_P, 'droop_M_P')
        _positive(self.tau_I, 'tau_I')
        _positive(self.rating, 'rating')

    @classmethod
    def stack(cls, items):
        return _stack(cls, items)


@dataclass(frozen=True)
class GfmState:
    delta: Number
    p_m: Number


@dataclass(frozen=True)
class SgParams:
    inertia_H: Number = 4.0
    damping_D: Number = 0.0
    droop_R_D: Number = 0.05
    tau_G: Number = 0.5
    rating: Number = 200.0
    p_set: Number = 0.0
    f0: Number = F0
    p_min: Number = -np.inf
    p_max: Number = np.inf

    def __post_init__(self):
        _positive(self.inertia_H, 'inertia_H')
        _positive(self.droop_R_D, 'droop_R_D')
        _positive(self.tau_G, 'tau_G')
        _positive(self.rating, 'rating')
        if not np.all(np.asarray(self.damping_D) >= 0):
            raise ScenarioValidationError('damping_D must not be negative, got {0}'.format(self.damping_D))

    @property
    def omega_s(self):
        return 2 * np.pi * self.f0

    @property
    def M(self):
        return 2 * self.inertia_H / self.omega_s

    @classmethod
    def stack(cls, items):
        return _stack(cls, items)


@dataclass(frozen=True)
class SgState:
    delta: Number
    omega: Number
    p_m: Number


def check_params(params, name='device'):
    """Log soft limit violations, returns the messages."""
    messages = []
    if isinstance(params, GfmParams) and np.any(np.asarray(params.tau_I) > TAU_I_WARN):
        messages.append('{0}: tau_I {1} s above {2} s, power filter slower than the droop loop assumes'.format(name, params.tau_I, TAU_I_WARN))
    if isinstance(params, SgParams) and np.any(np.asarray(params.tau_G) < TAU_G_WARN):
        messages.append('{0}: tau_G {1} s below {2} s, faster than a realistic governor'.format(name, params.tau_G, TAU_G_WARN))
    for message in messages:
        logger.warning(message)
    return messages


def _limit_rate(p_m, rate, p_min, p_max):
    rate = np.where((p_m >= p_max) & (rate > 0), 0.0, rate)
    return np.where((p_m <= p_min) & (rate < 0), 0.0, rate)


def gfm_derivatives(state, p_e, params, clamp=True):
    """Time derivative of a GFM state.

    :param state: current :class:`GfmState`
    :param p_e: electrical power, per-unit on device base
    :param params: :class:`GfmParams`
    :param clamp: apply the p_min / p_max limits

    :rtype: GfmState
    """
    dp_m = 2 * np.pi * (p_e - state.p_m) / params.tau_I
    if clamp:
        dp_m = _limit_rate(state.p_m, dp_m, params.p_min, params.p_max)
    ddelta = 2 * np.pi * params.f0 * params.droop_M_P * (params.p_set - state.p_m)
    return GfmState(delta=ddelta, p_m=dp_m)


def gfm_frequency(state, params):
    return params.f0 + params.f0 * params.droop_M_P * (params.p_set - state.p_m)


def sg_frequency(state, params=None):
    return state.omega / (2 * np.pi)


def sg_derivatives(state, p_e, params, clamp=True):
    """Time derivative of an SG state.

    :param state: current :class:`SgState`
    :param p_e: electrical power, per-unit on device base
    :param params: :class:`SgParams`
    :param clamp: apply the p_min / p_max limits

    :rtype: SgState
    """
    omega_s = params.omega_s
    speed = state.omega - omega_s
    ddelta = speed
    domega = (state.p_m - p_e - params.damping_D * speed / omega_s) / params.M
    # (f0 - f) / f0 == -speed / omega_s
    dp_m = (-speed / omega_s / params.droop_R_D - (state.p_m - params.p_set)) / params.tau_G
    if clamp:
        dp_m = _limit_rate(state.p_m, dp_m, params.p_min, params.p_max)
    return SgState(delta=ddelta, omega=domega, p_m=dp_m)


def init_steady_state(params, p_e0, delta=0.0):
    """Equilibrium for a device delivering ``p_e0`` at nominal frequency.

    The set point is moved onto ``p_e0`` so every derivative is exactly zero.

    :return: the adjusted parameters and the equilibrium state
    :rtype: tuple
    """
    params = replace(params, p_set=p_e0)
    if isinstance(params, GfmParams):
        return params, GfmState(delta=delta, p_m=p_e0)
    if isinstance(params, SgParams):
        return params, SgState(delta=delta, omega=params.omega_s, p_m=p_e0)
    raise TypeError('unsupported device parameters {0!r}'.format(type(params).__name__))


def device_frequency(state, params):
    if isinstance(params, GfmParams):
        return gfm_frequency(state, params)
    return sg_frequency(state, params)


def device_inertia(params):
    """Inertia constant entering the aggregate, zero for inverters."""
    return params.inertia_H if isinstance(params, SgParams) else 0.0
