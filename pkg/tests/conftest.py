import json

from dataclasses import replace

import pytest
import py.path  # type: ignore

from gridfreq.module_utils.engine import simulate
from gridfreq.module_utils.scenarios import find_bundled, load_scenario_file


DATA_PATH = py.path.local(__file__).realpath() / '..' / '..' / 'data'


def find_all_bundled_scenarios():
    for scenario in DATA_PATH.listdir(sort=True):
        if (scenario / 'scenario.yml').check(file=1):
            yield scenario.basename


BUNDLED_SCENARIOS = list(find_all_bundled_scenarios())


def pytest_addoption(parser):
    parser.addoption(
        "--scenario",
        action="store",
        default="",
        help="bundled scenario to run",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs (39-bus ladder)")


@pytest.fixture
def scenario_name(request):
    name = request.config.getoption('scenario')
    if not name:
        pytest.skip('no --scenario given')
    return name


def load_bundled(name):
    return load_scenario_file((DATA_PATH / name).strpath)


_RUNS = {}


def run_bundled(name, **sim):
    """Simulate a bundled scenario or series member once per session."""
    key = (name, tuple(sorted(sim.items())))
    if key not in _RUNS:
        scenario = find_bundled(name)
        if sim:
            scenario = replace(scenario, sim=replace(scenario.sim, **sim))
        _RUNS[key] = (scenario, simulate(scenario))
    return _RUNS[key]


def run_command(capsys, main, argv):
    """Call a command's main() and return (rc, parsed json result)."""
    with pytest.raises(SystemExit) as exit_info:
        main(argv)
    captured = capsys.readouterr()
    rc = exit_info.value.code
    stream = captured.out if rc == 0 else captured.err
    lines = [line for line in stream.splitlines() if line.startswith('{')]
    result = json.loads(lines[-1]) if lines else {}
    return rc, result

