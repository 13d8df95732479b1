# (c) The gridfreq authors 2026
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.    See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.    If not, see <http://www.gnu.org/licenses/>.


class ModuleDocFragment(object):

    # gridfreq documentation fragment
    GRIDFREQ = '''
requirements:
    - inflection
    - numpy
    - pandas
    - PyYAML
    - scipy
options:
    out:
        description: Output directory, created when missing
        required: false
        default: out
        type: path
    verbose:
        description: Log at debug level
        required: false
        type: bool
    dt:
        description: Integration step in seconds, overrides C(sim.dt) of the scenario
        required: false
        type: float
    duration:
        description: Simulated horizon in seconds, overrides C(sim.duration)
        required: false
        type: float
    window:
        description: ROCOF sliding window in seconds, overrides C(sim.rocof_window)
        required: false
        type: float
    stride:
        description: Record every n-th integration step, overrides C(sim.record_stride)
        required: false
        type: int
'''

    SCENARIO = '''
options:
    scenario:
        description:
            - Scenario to simulate.
            - Either a YAML file, a directory holding a C(scenario.yml) or the name of a bundled scenario.
        required: true
        type: str
'''
