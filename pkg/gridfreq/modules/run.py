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
module: run
version_added: 0.1.0
short_description: Simulate one scenario
description:
    - Simulate a scenario from its dispatch equilibrium and evaluate the frequency metrics.
    - Writes C(timeseries.csv), C(metrics.txt), C(metrics.csv) and C(run.log) into the output directory.
author:
    - "The gridfreq authors"
options:
    portrait:
        description: Also write the frequency-power portrait C(portrait.csv)
        type: bool
        required: false
extends_documentation_fragment:
    - gridfreq
    - scenario
'''

EXAMPLES = '''
- name: "Single inverter load step"
  command: gridfreq run single_gfm -o out/single_gfm

- name: "Bundled 9-bus scenario C with a finer step"
  command: gridfreq run ieee9_C --dt 0.0005 -o out/ieee9_C

- name: "Own scenario file"
  command: gridfreq run my_system.yml --duration 30 --portrait
'''

RETURN = '''
outputs:
    description: Files written, by kind
    returned: success
    type: dict
metrics:
    description: Metrics of the average frequency
    returned: success
    type: dict
    contains:
        rocof_max_abs:
            description: Largest windowed ROCOF in Hz/s
            type: float
        nadir:
            description: Lowest frequency after the event in Hz
            type: float
        settling_f:
            description: Settled frequency in Hz, null when the run did not settle
            type: float
        aggregate_H:
            description: Rating weighted inertia constant in s
            type: float
        order_class:
            description: first_order, second_order or indeterminate
            type: str
'''

import os

from gridfreq.module_utils.gridfreq_helper import RunOutputs
from gridfreq.module_utils.scenario_module import (
    GridfreqScenarioModule,
    log_configuration,
    prepare_scenario,
    run_scenario,
    write_metrics,
    write_portrait,
)


def cmd_run(scenario, out_dir, overrides=None, portrait=False):
    """Simulate one scenario and write its files.

    :param scenario: scenario object, file, directory or bundled name
    :param out_dir: existing output directory
    :param overrides: mapping of dt, duration, window, stride

    :return: written files and the metrics report
    :rtype: tuple
    """
    scenario = prepare_scenario(scenario, overrides)
    log_configuration(scenario)
    series, report = run_scenario(scenario)
    outputs = RunOutputs(
        timeseries=series.to_csv(os.path.join(out_dir, 'timeseries.csv')),
        metrics=write_metrics(scenario, report, out_dir),
        portrait=write_portrait(series, out_dir) if portrait else None,
    )
    return outputs, report


class GridfreqRunModule(GridfreqScenarioModule):

    def run(self):
        outputs, report = cmd_run(self.params['scenario'], self.out_dir, self.overrides, portrait=self.params['portrait'])
        for kind, path in outputs.as_dict().items():
            self.record_output(kind, path)
        self.set_result('metrics', report.as_dict())


def main(argv=None):
    module = GridfreqRunModule(
        argv=argv,
        gridfreq_spec=dict(
            portrait=dict(type='bool'),
        ),
        documentation=DOCUMENTATION,
    )

    with module.simulation_session():
        module.run()


if __name__ == "__main__":
    main()
