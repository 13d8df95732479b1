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
module: portrait
version_added: 0.1.0
short_description: Frequency-power portraits of every device
description:
    - Simulate a scenario and write C(portrait.csv) with the pre-converter power and frequency of every device.
    - Inverters trace a straight line, generators a converging spiral; both measures are logged per device.
author:
    - "The gridfreq authors"
extends_documentation_fragment:
    - gridfreq
    - scenario
'''

EXAMPLES = '''
- name: "Portraits of the all-inverter 39-bus case"
  command: gridfreq portrait ieee39_10 -o out/portrait_10
'''

RETURN = '''
outputs:
    description: Files written, by kind
    returned: success
    type: dict
devices:
    description: Per device linearity (fraction of the p_m span) and winding (revolutions)
    returned: success
    type: dict
'''

import logging

from collections import OrderedDict

from gridfreq.module_utils.engine import simulate
from gridfreq.module_utils.metrics import portrait_linearity, portrait_winding
from gridfreq.module_utils.scenario_module import (
    GridfreqScenarioModule,
    log_configuration,
    prepare_scenario,
    write_portrait,
)


logger = logging.getLogger(__name__)


def portrait_shapes(series):
    shapes = OrderedDict()
    for k, name in enumerate(series.device_names):
        shapes[name] = dict(
            linearity=portrait_linearity(series.p_m[:, k], series.f[:, k]),
            winding=portrait_winding(series.p_m[:, k], series.f[:, k]),
        )
    return shapes


def cmd_portrait(scenario, out_dir, overrides=None):
    """Simulate and write ``portrait.csv``.

    :return: path of the portrait file and per device shape measures
    :rtype: tuple
    """
    scenario = prepare_scenario(scenario, overrides)
    log_configuration(scenario)
    series = simulate(scenario)
    path = write_portrait(series, out_dir)
    shapes = portrait_shapes(series)
    for name, shape in shapes.items():
        logger.info('%s: linearity %.4f, winding %.3f', name, shape['linearity'], shape['winding'])
    return path, shapes


class GridfreqPortraitModule(GridfreqScenarioModule):

    def run(self):
        path, shapes = cmd_portrait(self.params['scenario'], self.out_dir, self.overrides)
        self.record_output('portrait', path)
        self.set_result('devices', shapes)


def main(argv=None):
    module = GridfreqPortraitModule(
        argv=argv,
        documentation=DOCUMENTATION,
    )

    with module.simulation_session():
        module.run()


if __name__ == "__main__":
    main()
