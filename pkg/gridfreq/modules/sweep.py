#!/usr/bin/env python

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

DOCUMENTATION = '''
---
module: sweep
version_added: 0.1.0
short_description: Run a substitution or inertia series
description:
    - Generate a scenario series from a base scenario and simulate every member.
    - By default synchronous generators are replaced one by one with grid-forming inverters of equal rating, dispatch and droop.
    - With I(inertia) and I(device) the inertia constant of one generator is swept instead.
    - Writes one C(sweep.csv) row per member with label, aggregate inertia, ROCOF, nadir and settling frequency.
author:
    - "The gridfreq authors"
options:
    order:
        description:
            - Comma separated device names replaced in this order.
            - Defaults to C(series.order) of the scenario.
        type: list
        elements: str
        required: false
    labels:
        description: Comma separated labels, one more than replacements
        type: list
        elements: str
        required: false
    inertia:
        description: Comma separated inertia constants in s for I(device)
        type: list
        elements: float
        required: false
    device:
        description: Generator whose inertia is swept
        type: str
        required: false
    jobs:
        description: Number of worker processes
        type: int
        default: 1
        required: false
    keep_series:
        description: Also write C(timeseries_<label>.csv) for every member
        type: bool
        required: false
extends_documentation_fragment:
    - gridfreq
    - scenario
'''

EXAMPLES = '''
- name: "9-bus ladder A to D"
  command: gridfreq sweep ieee9 -o out/ieee9

- name: "39-bus ladder on four workers"
  command: gridfreq sweep ieee39 --jobs 4 -o out/ieee39

- name: "Single generator inertia family"
  command: gridfreq sweep single_sg --inertia 4,3,2,1 --device G1 -o out/inertia
'''

RETURN = '''
outputs:
    description: Files written, by kind
    returned: always
    type: dict
rows:
    description: Number of simulated members
    returned: success
    type: int
nadir_rocof_r:
    description: Pearson correlation between nadir and ROCOF over the members, null for fewer than three
    returned: success
    type: float
'''

import logging
import os

from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from gridfreq.module_utils.engine import CSV_FLOAT_FORMAT
from gridfreq.module_utils.gridfreq_helper import SimulationError
from gridfreq.module_utils.metrics import nadir_rocof_correlation
from gridfreq.module_utils.scenario_module import (
    GridfreqScenarioModule,
    log_configuration,
    metrics_row,
    prepare_scenario,
    run_scenario,
)
from gridfreq.module_utils.scenarios import make_inertia_series, make_substitution_series


logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['label', 'name', 'aggregate_H', 'rocof_max_abs', 'nadir', 'settling_f', 'order_class',
                 'overshoot', 'nadir_time', 'rocof_time', 'frequency_spread']


def build_series(scenario, order=None, labels=None, inertias=None, device=None):
    if inertias is not None:
        return make_inertia_series(scenario, device, inertias, labels)
    return make_substitution_series(scenario, order, labels)


def sweep_table(rows):
    table = pd.DataFrame(rows)
    columns = [c for c in SWEEP_COLUMNS if c in table.columns]
    return table[columns + [c for c in table.columns if c not in columns]]


def cmd_sweep(base_scenario, order=None, out_dir='.', labels=None, inertias=None, device=None, jobs=1, keep_series=False, overrides=None):
    """Simulate every member of a series and tabulate the metrics.

    Members run in ``jobs`` worker processes; files are only written here.
    A failing member stops the sweep after the rows finished so far are saved.

    :return: one row per member
    :rtype: pandas.DataFrame
    """
    base = prepare_scenario(base_scenario, overrides)
    log_configuration(base)
    members = build_series(base, order, labels, inertias, device)
    logger.info('sweep of %s: %d members (%s)', base.name, len(members), ', '.join(m.label for m in members))

    path = os.path.join(out_dir, 'sweep.csv')
    rows = []
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        results = executor.map(run_scenario, members) if executor else map(run_scenario, members)
        for member in members:
            try:
                series, report = next(results)
            except Exception as e:
                if rows:
                    sweep_table(rows).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
                raise SimulationError('sweep member {0} failed: {1}; {2} finished rows kept in {3}'.format(
                    member.label, e, len(rows), path if rows else 'no file'), time=getattr(e, 'time', None)) from e
            rows.append(metrics_row(member, report))
            logger.info('%s: H=%.4g s, ROCOF=%.4g Hz/s, nadir=%.5g Hz', member.label, report.aggregate_H, report.rocof_max_abs, report.nadir)
            if keep_series:
                series.to_csv(os.path.join(out_dir, 'timeseries_{0}.csv'.format(member.label)))
    finally:
        if executor:
            executor.shutdown(cancel_futures=True)

    table = sweep_table(rows)
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return table


def table_correlation(table):
    if len(table) < 3:
        return None
    return nadir_rocof_correlation(table['nadir'], table['rocof_max_abs'])


class GridfreqSweepModule(GridfreqScenarioModule):

    def run(self):
        table = cmd_sweep(
            self.params['scenario'],
            order=self.params['order'],
            out_dir=self.out_dir,
            labels=self.params['labels'],
            inertias=self.params['inertia'],
            device=self.params['device'],
            jobs=self.params['jobs'],
            keep_series=self.params['keep_series'],
            overrides=self.overrides,
        )
        self.record_output('sweep', os.path.join(self.out_dir, 'sweep.csv'))
        r = table_correlation(table)
        if r is not None:
            logger.info('nadir/ROCOF Pearson r = %.4f', r)
        self.set_result('rows', len(table))
        self.set_result('nadir_rocof_r', r)


def main(argv=None):
    module = GridfreqSweepModule(
        argv=argv,
        gridfreq_spec=dict(
            order=dict(type='list', elements='str'),
            labels=dict(type='list', elements='str'),
            inertia=dict(type='list', elements='float'),
            device=dict(type='str'),
            jobs=dict(type='int', default=1),
            keep_series=dict(type='bool'),
        ),
        mutually_exclusive=[['order', 'inertia']],
        required_together=[['inertia', 'device']],
        documentation=DOCUMENTATION,
    )

    with module.simulation_session():
        module.run()


if __name__ == "__main__":
    main()
