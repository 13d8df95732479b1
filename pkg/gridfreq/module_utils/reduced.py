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

"""Time scale reductions of the device models.

GFM: the power filter is fast, so p_m follows p_e and the frequency is an
algebraic function of p_e. SG: the governor is slow, so p_m stays at its set
point and the frequency integrates the power imbalance.
"""

import logging

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from scipy.integrate import cumulative_trapezoid, solve_ivp

from gridfreq.module_utils.devices import GfmParams, SgParams, init_steady_state
from gridfreq.module_utils.gridfreq_helper import ReducedModelError


logger = logging.getLogger(__name__)

GFM_ALGEBRAIC = 'gfm_algebraic'
SG_FIRST_ORDER = 'sg_first_order'


@dataclass(frozen=True)
class ReducedTrace:
    t: np.ndarray
    f_reduced: np.ndarray
    source_model: Tuple[str, ...]
    device_names: Tuple[str, ...] = ()


def gfm_reduced_frequency(p_e, params):
    """Frequency with the power filter collapsed, p_m == p_e."""
    return params.f0 + params.f0 * params.droop_M_P * (params.p_set - np.asarray(p_e, dtype=float))


def sg_reduced_trajectory(params, delta_p, horizon, dt=0.001):
    """Frequency after a constant excess load ``delta_p`` with p_m held.

    Without damping this is the inertial line ``f0 - delta_p * f0 / (2H) * t``,
    with damping the speed relaxes towards ``-delta_p * omega_s / D``.

    :return: Hz on the grid ``0, dt, ..., horizon``
    :rtype: numpy.ndarray
    """
    if np.any(np.asarray(params.damping_D) < 0):
        raise ReducedModelError('damping_D must not be negative')
    t = np.arange(int(round(horizon / dt)) + 1) * dt
    if params.damping_D == 0:
        return params.f0 - delta_p * params.f0 / (2 * params.inertia_H) * t
    omega_s = params.omega_s
    rate = params.damping_D / (params.M * omega_s)
    speed = -delta_p * omega_s / params.damping_D * (1 - np.exp(-rate * t))
    return params.f0 + speed / (2 * np.pi)


def sg_reduced_frequency(t, p_e, params):
    """Integrate the swing equation against a recorded p_e with p_m == p_set.

    The trace starts at nominal frequency at ``t[0]``.
    """
    t = np.asarray(t, dtype=float)
    p_e = np.asarray(p_e, dtype=float)
    if t.size != p_e.size:
        raise ReducedModelError('time and power traces differ in length')
    if params.damping_D == 0:
        speed = cumulative_trapezoid((params.p_set - p_e) / params.M, t, initial=0.0)
        return params.f0 + speed / (2 * np.pi)

    omega_s = params.omega_s

    def swing(time, y):
        p = np.interp(time, t, p_e)
        return [(params.p_set - p - params.damping_D * y[0] / omega_s) / params.M]

    solution = solve_ivp(swing, (t[0], t[-1]), [0.0], t_eval=t, rtol=1e-10, atol=1e-12, max_step=t[1] - t[0])
    if not solution.success:
        raise ReducedModelError('reduced swing integration failed: {0}'.format(solution.message))
    return params.f0 + solution.y[0] / (2 * np.pi)


def _central_differences(values, dt):
    first = np.full(values.shape, np.nan)
    second = np.full(values.shape, np.nan)
    first[1:-1] = (values[2:] - values[:-2]) / (2 * dt)
    second[1:-1] = (values[2:] - 2 * values[1:-1] + values[:-2]) / dt ** 2
    return first, second


def sg_second_order_residual(series, device, params):
    """Mismatch of a recorded p_m against the governor's second order relation.

    ``p_m'' = [-(p_m - p_e - D dw) / (2 H R) - p_m'] / tau_G`` with ``dw`` the
    per-unit speed deviation. Endpoints and samples next to an event are NaN.

    :param series: recorded :class:`~gridfreq.module_utils.engine.TimeSeries`
    :param device: device name or column
    :param params: :class:`SgParams` used to evaluate the relation

    :return: pu/s^2 per sample
    :rtype: numpy.ndarray
    """
    if series.t.size < 3:
        raise ReducedModelError('trace too short for second differences')
    k = series.device(device)
    p_m = series.p_m[:, k]
    p_e = series.p_e[:, k]
    dw = (series.f[:, k] - params.f0) / params.f0
    dt = series.dt

    first, second = _central_differences(p_m, dt)
    expected = (-(p_m - p_e - params.damping_D * dw) / (2 * params.inertia_H * params.droop_R_D) - first) / params.tau_G
    residual = second - expected
    for event_time in series.event_times:
        residual[np.abs(series.t - event_time) <= dt * (1 + 1e-9)] = np.nan
    return residual


def reduce_series(series, scenario):
    """Reduced frequency of every device driven by the recorded p_e.

    Set points are seated on the first recorded sample, the pre-event equilibrium.

    :rtype: ReducedTrace
    """
    columns = []
    sources = []
    for k, device in enumerate(scenario.devices):
        params, _ = init_steady_state(device.params, series.p_e[0, k])
        if isinstance(params, GfmParams):
            columns.append(gfm_reduced_frequency(series.p_e[:, k], params))
            sources.append(GFM_ALGEBRAIC)
        elif isinstance(params, SgParams):
            columns.append(sg_reduced_frequency(series.t, series.p_e[:, k], params))
            sources.append(SG_FIRST_ORDER)
    return ReducedTrace(
        t=series.t,
        f_reduced=np.column_stack(columns),
        source_model=tuple(sources),
        device_names=series.device_names,
    )


def reduced_error(series, trace, t_from=None, t_to=None):
    """Largest |f_full - f_reduced| per device over ``[t_from, t_to]``."""
    mask = np.ones(series.t.size, dtype=bool)
    if t_from is not None:
        mask &= series.t >= t_from - 1e-12
    if t_to is not None:
        mask &= series.t <= t_to + 1e-12
    if not np.any(mask):
        raise ReducedModelError('empty comparison window')
    return np.max(np.abs(series.f[mask] - trace.f_reduced[mask]), axis=0)
