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

"""Frequency metrics: rating weighted average, windowed ROCOF, nadir,
settling frequency, aggregate inertia and response order."""

import logging

from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from scipy import stats

from gridfreq.module_utils.gridfreq_helper import MetricsError


logger = logging.getLogger(__name__)

FIRST_ORDER = 'first_order'
SECOND_ORDER = 'second_order'
INDETERMINATE = 'indeterminate'

ROCOF_WINDOW = 0.1
SETTLING_SPAN = 10.0
SETTLING_WINDOW = 0.5
SETTLING_PTP = 1e-3
CLASSIFY_EPS = 2e-3
PORTRAIT_CORE = 0.01


@dataclass(frozen=True)
class MetricsReport:
    rocof_max_abs: float
    rocof_time: float
    nadir: float
    nadir_time: float
    settling_f: Optional[float]
    aggregate_H: float
    order_class: str
    overshoot: Optional[float]
    frequency_spread: float = 0.0
    device_rocof: Dict[str, float] = field(default_factory=dict)

    def as_dict(self):
        """Flat mapping, per-device ROCOF as ``rocof:<name>`` keys."""
        values = OrderedDict((k, v) for k, v in asdict(self).items() if k != 'device_rocof')
        for name, value in self.device_rocof.items():
            values['rocof:{0}'.format(name)] = value
        return values

    def to_text(self):
        lines = []
        for key, value in self.as_dict().items():
            if value is None:
                value = 'unavailable'
            elif isinstance(value, float):
                value = '{0:.9g}'.format(value)
            lines.append('{0}: {1}'.format(key, value))
        return '\n'.join(lines) + '\n'


def average_frequency(device_f, ratings):
    """Rating weighted average frequency per sample.

    :param device_f: array (devices, samples) in Hz
    :param ratings: MVA per device

    :rtype: numpy.ndarray
    """
    device_f = np.atleast_2d(np.asarray(device_f, dtype=float))
    ratings = np.asarray(ratings, dtype=float)
    if ratings.size == 0 or device_f.shape[0] == 0:
        raise MetricsError('average frequency of an empty device set')
    if device_f.shape[0] != ratings.size:
        raise MetricsError('{0} traces but {1} ratings'.format(device_f.shape[0], ratings.size))
    if np.any(ratings <= 0):
        raise MetricsError('device ratings must be positive')
    if ratings.size == 1:
        return device_f[0].copy()
    return ratings @ device_f / np.sum(ratings)


def rocof(f, dt, window=ROCOF_WINDOW):
    """Largest absolute sliding window rate of change.

    :param f: frequency trace in Hz on a uniform grid
    :param dt: sample spacing in s
    :param window: averaging window in s

    :return: (Hz/s, offset in s of the window start from the first sample)
    :rtype: tuple
    """
    f = np.asarray(f, dtype=float)
    w = int(round(window / dt))
    if w < 1:
        raise MetricsError('ROCOF window {0} s shorter than the sample spacing {1} s'.format(window, dt))
    if w >= f.size:
        raise MetricsError('ROCOF window {0} s longer than the trace'.format(window))
    rates = np.abs(f[w:] - f[:-w]) / (w * dt)
    k = int(np.argmax(rates))
    return float(rates[k]), k * dt


def aggregate_inertia(devices):
    """Rating weighted inertia constant, inverters enter with H = 0.

    :param devices: iterable of (H in s, rating in MVA)
    """
    devices = list(devices)
    if not devices:
        raise MetricsError('aggregate inertia of an empty device set')
    h, s = np.asarray(devices, dtype=float).T
    if np.any(s <= 0):
        raise MetricsError('device ratings must be positive')
    return float(np.sum(h * s) / np.sum(s))


def nadir_and_settling(f, t, event_time):
    """Lowest frequency after the event and the settled value.

    Settling is the mean of the final 0.5 s, ``None`` when the trace spans
    less than 10 s past the event or still moves more than 1 mHz there.

    :return: (nadir Hz, nadir time s, settling Hz or None)
    :rtype: tuple
    """
    f = np.asarray(f, dtype=float)
    t = np.asarray(t, dtype=float)
    after = t >= event_time - 1e-12
    if not np.any(after):
        raise MetricsError('no samples after the event at t={0} s'.format(event_time))
    k = int(np.argmin(f[after]))
    nadir = float(f[after][k])
    nadir_time = float(t[after][k])

    settling = None
    if t[-1] - event_time < SETTLING_SPAN - 1e-9:
        logger.debug('trace spans %.3g s past the event, settling unavailable', t[-1] - event_time)
    else:
        tail = f[t >= t[-1] - SETTLING_WINDOW - 1e-12]
        if np.ptp(tail) < SETTLING_PTP:
            settling = float(np.mean(tail))
        else:
            logger.debug('final window moves %.3g Hz, settling unavailable', np.ptp(tail))
    return nadir, nadir_time, settling


def classify_response(f, t, event_time, settling, eps=CLASSIFY_EPS):
    """First or second order shape of the post event trace.

    The trace is folded so it approaches ``settling`` from above; first order
    never dips below it and never turns back by more than ``eps``, second
    order dips and returns.

    :return: (order class, overshoot in Hz)
    :rtype: tuple
    """
    if settling is None:
        return INDETERMINATE, None
    f = np.asarray(f, dtype=float)
    post = f[np.asarray(t, dtype=float) >= event_time - 1e-12]
    if post.size < 2:
        return INDETERMINATE, None

    sign = 1.0 if post[0] >= settling else -1.0
    y = sign * (post - settling)
    overshoot = max(0.0, float(-np.min(y)))
    if np.max(np.abs(y)) < eps:
        return INDETERMINATE, overshoot

    monotone = np.all(y - np.minimum.accumulate(y) <= eps)
    if np.min(y) >= -eps and monotone:
        return FIRST_ORDER, overshoot
    if np.min(y) < -eps and abs(y[-1]) <= eps:
        return SECOND_ORDER, overshoot
    return INDETERMINATE, overshoot


def delta_f_prior(rocof_value, t_response):
    """Frequency deviation accumulated before the pre-converter power responds."""
    if rocof_value < 0 or t_response < 0:
        raise MetricsError('ROCOF and response time must not be negative')
    return rocof_value * t_response


def frequency_spread(device_f):
    """Largest instantaneous gap between the fastest and slowest device."""
    device_f = np.atleast_2d(np.asarray(device_f, dtype=float))
    return float(np.max(np.max(device_f, axis=0) - np.min(device_f, axis=0)))


def nadir_rocof_correlation(nadirs, rocofs):
    """Pearson correlation between nadir and ROCOF over a family of runs."""
    nadirs = np.asarray(nadirs, dtype=float)
    rocofs = np.asarray(rocofs, dtype=float)
    if nadirs.size != rocofs.size or nadirs.size < 3:
        raise MetricsError('correlation needs at least three paired runs')
    r, _ = stats.pearsonr(nadirs, rocofs)
    return float(r)


def _portrait_coordinates(p_m, f):
    p_m = np.asarray(p_m, dtype=float)
    f = np.asarray(f, dtype=float)
    span_p, span_f = np.ptp(p_m), np.ptp(f)
    if span_p == 0 or span_f == 0:
        return None
    return np.column_stack([p_m / span_p, f / span_f])


def portrait_linearity(p_m, f):
    """Largest orthogonal distance from the total least squares line.

    Both axes are scaled by their span, so the result is a fraction of the
    p_m span. A degenerate portrait (point or straight axis line) returns 0.
    """
    points = _portrait_coordinates(p_m, f)
    if points is None:
        return 0.0
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return float(np.max(np.abs(centered @ vt[-1])))


def portrait_winding(p_m, f, core=PORTRAIT_CORE):
    """Revolutions of the portrait around its final point.

    Samples closer to the final point than ``core`` times the largest radius
    are ignored.
    """
    points = _portrait_coordinates(p_m, f)
    if points is None:
        return 0.0
    rel = points - points[-1]
    radius = np.hypot(rel[:, 0], rel[:, 1])
    keep = radius > core * np.max(radius)
    if np.count_nonzero(keep) < 2:
        return 0.0
    angle = np.unwrap(np.arctan2(rel[keep, 1], rel[keep, 0]))
    return float(abs(angle[-1] - angle[0]) / (2 * np.pi))


def evaluate(series, scenario, window=None):
    """Full report of a recorded run.

    :param series: :class:`~gridfreq.module_utils.engine.TimeSeries`
    :param scenario: the scenario that produced it
    :param window: ROCOF window in s, defaults to ``scenario.sim.rocof_window``

    :rtype: MetricsReport
    """
    window = window or scenario.sim.rocof_window
    event_time = min(series.event_times) if series.event_times else float(series.t[0])
    dt = series.dt

    rate, offset = rocof(series.avg_f, dt, window)
    nadir, nadir_time, settling = nadir_and_settling(series.avg_f, series.t, event_time)
    order_class, overshoot = classify_response(series.avg_f, series.t, event_time, settling)
    inertia = aggregate_inertia((d.inertia_H, d.params.rating) for d in scenario.devices)

    device_rocof = OrderedDict()
    for k, name in enumerate(series.device_names):
        device_rocof[name] = rocof(series.f[:, k], dt, window)[0]

    report = MetricsReport(
        rocof_max_abs=rate,
        rocof_time=float(series.t[0]) + offset,
        nadir=nadir,
        nadir_time=nadir_time,
        settling_f=settling,
        aggregate_H=inertia,
        order_class=order_class,
        overshoot=overshoot,
        frequency_spread=frequency_spread(series.f.T),
        device_rocof=device_rocof,
    )
    logger.debug('metrics of %s: %s', scenario.name, dict(report.as_dict()))
    return report
