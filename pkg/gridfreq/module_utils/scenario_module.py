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

import logging
import os

from collections import OrderedDict
from dataclasses import replace

import pandas as pd

from gridfreq.module_utils.engine import CSV_FLOAT_FORMAT, simulate, with_overrides
from gridfreq.module_utils.gridfreq_helper import GridfreqModule
from gridfreq.module_utils.metrics import evaluate
from gridfreq.module_utils.scenarios import Scenario, resolve_scenario


logger = logging.getLogger(__name__)

REACTIVE_NOTE = 'reactive parts of load steps are discarded, only active power is modelled'


def prepare_scenario(scenario, overrides=None):
    """Resolve a scenario reference and apply simulation overrides."""
    if not isinstance(scenario, Scenario):
        scenario = resolve_scenario(scenario)
    sim = with_overrides(scenario.sim, overrides)
    if sim != scenario.sim:
        scenario = replace(scenario, sim=sim)
    return scenario


def log_configuration(scenario):
    sim = scenario.sim
    logger.info('scenario %s: dt=%g s, duration=%g s, window=%g s, stride=%d, newton_tol=%g',
                scenario.name, sim.dt, sim.duration, sim.rocof_window, sim.record_stride, sim.newton_tol)
    if scenario.events:
        logger.info(REACTIVE_NOTE)


def run_scenario(scenario):
    """Simulate and evaluate one scenario.

    :return: (time series, metrics report)
    :rtype: tuple
    """
    series = simulate(scenario)
    return series, evaluate(series, scenario)


def metrics_row(scenario, report):
    row = OrderedDict(name=scenario.name, label=scenario.label if scenario.label is not None else '')
    row.update(report.as_dict())
    return row


def write_metrics(scenario, report, out_dir):
    """Write ``metrics.txt`` and ``metrics.csv``, returns the text path."""
    text_path = os.path.join(out_dir, 'metrics.txt')
    with open(text_path, 'w', encoding='utf-8') as metrics_file:
        metrics_file.write('scenario: {0}\n'.format(scenario.name))
        metrics_file.write(report.to_text())
        if scenario.events:
            metrics_file.write('note: {0}\n'.format(REACTIVE_NOTE))
    pd.DataFrame([metrics_row(scenario, report)]).to_csv(os.path.join(out_dir, 'metrics.csv'), index=False, float_format=CSV_FLOAT_FORMAT)
    return text_path


def portrait_frame(series):
    columns = OrderedDict(t=series.t)
    for k, name in enumerate(series.device_names):
        columns['dev:{0}:pm'.format(name)] = series.p_m[:, k]
        columns['dev:{0}:f'.format(name)] = series.f[:, k]
    return pd.DataFrame(columns)


def write_portrait(series, out_dir):
    path = os.path.join(out_dir, 'portrait.csv')
    portrait_frame(series).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path


class GridfreqScenarioModule(GridfreqModule):
    """ Baseclass for commands working on one scenario argument. """

    def __init__(self, argv=None, **kwargs):
        gridfreq_spec = dict(
            scenario=dict(type='str', required=True, positional=True),
        )
        gridfreq_spec.update(kwargs.pop('gridfreq_spec', {}))
        super(GridfreqScenarioModule, self).__init__(argv=argv, gridfreq_spec=gridfreq_spec, **kwargs)

    def run(self):
        raise NotImplementedError
