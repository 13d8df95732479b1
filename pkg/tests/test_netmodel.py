import numpy as np
import pytest

from gridfreq.module_utils.gridfreq_helper import (
    InfeasibleFlowError,
    NetworkSolverError,
    NetworkStructureError,
)
from gridfreq.module_utils.netmodel import (
    Branch,
    Bus,
    Network,
    NetworkSolver,
    build_susceptance,
    lossless_imbalance,
    solve_dispatch,
    solve_network,
)
from gridfreq.module_utils import netmodel
from gridfreq.module_utils.scenarios import initialize_dispatch

from .conftest import load_bundled


def two_bus(b=2.0, load=0.0):
    return Network(
        [Bus(0, 'device'), Bus(1, 'load', p_load=load)],
        [Branch(0, 1, b)],
        [0],
    )


def test_susceptance_single_branch():
    matrix = build_susceptance([Branch(0, 1, 2.0)], 2).toarray()
    np.testing.assert_allclose(matrix, [[2.0, -2.0], [-2.0, 2.0]])


def test_susceptance_parallel_branches_add_up():
    matrix = build_susceptance([Branch(0, 1, 2.0), Branch(1, 0, 3.0), Branch(1, 2, 1.0, in_service=False), Branch(1, 2, 1.0)], 3).toarray()
    assert matrix[0, 1] == pytest.approx(-5.0)
    assert matrix[1, 1] == pytest.approx(6.0)


def test_susceptance_without_branches_is_disconnected():
    with pytest.raises(NetworkStructureError, match='isolated buses'):
        build_susceptance([], 2)


def test_susceptance_names_isolated_component():
    with pytest.raises(NetworkStructureError, match='isolated buses: 7'):
        build_susceptance([Branch(1, 2, 1.0), Branch(2, 3, 1.0)], 4, bus_index={1: 0, 2: 1, 3: 2, 7: 3})


def test_susceptance_ieee9_rows_sum_to_zero():
    network = load_bundled('ieee9').network()
    matrix = network.susceptance.toarray()
    np.testing.assert_allclose(matrix.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(matrix, matrix.T)
    # 4-5: x = 0.085 on 100 MVA, system base 600 MVA
    assert matrix[network.bus_position(4), network.bus_position(5)] == pytest.approx(-1.0 / (0.085 * 6))


def test_two_bus_solution():
    solution = solve_network(two_bus(), [0.1], [0.0, 0.19867])
    assert solution.angles[1] == pytest.approx(0.0, abs=1e-3)
    assert 2 * np.sin(0.1 - solution.angles[1]) == pytest.approx(0.19867, abs=1e-10)
    assert solution.device_p_e[0] == pytest.approx(0.19867, abs=1e-10)
    assert solution.max_mismatch <= 1e-10


def test_unloaded_equal_angles():
    network = load_bundled('ieee9').network()
    solution = solve_network(network, [0.3, 0.3, 0.3], np.zeros(network.n_bus))
    np.testing.assert_allclose(solution.angles, 0.3, atol=1e-12)
    np.testing.assert_allclose(solution.device_p_e, 0.0, atol=1e-12)


def test_ieee9_dispatch_reproduced():
    scenario = load_bundled('ieee9')
    network = scenario.network()
    angles, states = initialize_dispatch(scenario)
    solution = solve_network(network, angles, network.p_load)
    dispatch = np.asarray([d.dispatch * d.params.rating / scenario.system_base for d in scenario.devices])
    np.testing.assert_allclose(solution.device_p_e, dispatch, atol=1e-8)
    assert abs(lossless_imbalance(solution, network.p_load)) < 1e-9


def test_shift_invariance():
    scenario = load_bundled('ieee9')
    network = scenario.network()
    angles, _ = initialize_dispatch(scenario)
    base = solve_network(network, angles, network.p_load)
    shifted = solve_network(network, angles + 0.7, network.p_load, guess=base.angles + 0.7)
    np.testing.assert_allclose(shifted.device_p_e, base.device_p_e, atol=1e-9)
    np.testing.assert_allclose(shifted.angles - 0.7, base.angles, atol=1e-9)


def test_two_bus_monotone_in_angle():
    network = Network([Bus(0, 'device'), Bus(1, 'device')], [Branch(0, 1, 2.0)], [0, 1])
    deltas = np.linspace(-1.5, 1.5, 31)
    p_e = [solve_network(network, [d, 0.0], [0.0, 0.0]).device_p_e[0] for d in deltas]
    assert np.all(np.diff(p_e) > 0)


def test_newton_converges_quadratically():
    scenario = load_bundled('ieee9')
    network = scenario.network()
    angles, _ = initialize_dispatch(scenario)
    solution = solve_network(network, angles, network.p_load, guess=np.zeros(network.n_bus))
    residuals = solution.residuals
    assert solution.iterations >= 2
    pairs = [(a, b) for a, b in zip(residuals, residuals[1:]) if a < 1e-3 and b > 0]
    assert pairs
    for before, after in pairs:
        assert after / before < 0.1


def test_infeasible_load_detected_before_newton():
    with pytest.raises(InfeasibleFlowError, match='exceeds branch capacity'):
        solve_network(two_bus(b=2.0), [0.0], [0.0, 2.5])


def test_solver_error_carries_mismatch():
    with pytest.raises(NetworkSolverError) as error:
        solve_network(two_bus(), [0.1], [0.0, 1.9], max_iter=0)
    assert error.value.mismatch > 0
    assert error.value.iterations == 0


def test_dispatch_reference_absorbs_balance():
    network = Network(
        [Bus(1, 'device'), Bus(2, 'device'), Bus(3, 'load', p_load=0.6)],
        [Branch(1, 3, 5.0), Branch(2, 3, 5.0)],
        [1, 2],
    )
    solution = solve_dispatch(network, [0.1, 0.4], network.p_load)
    assert solution.angles[0] == 0.0
    assert solution.device_p_e[1] == pytest.approx(0.4, abs=1e-10)
    assert solution.device_p_e[0] == pytest.approx(0.2, abs=1e-10)


def test_device_bus_local_load_counts_in_p_e():
    network = Network([Bus(1, 'device', p_load=0.5)], [], [1])
    solution = solve_network(network, [0.0], network.p_load)
    assert solution.device_p_e[0] == pytest.approx(0.5)


@pytest.mark.parametrize('buses, branches, device_buses, message', [
    ([Bus(0, 'device', voltage_mag=0.0), Bus(1)], [Branch(0, 1, 1.0)], [0], 'voltage_mag'),
    ([Bus(0, 'device'), Bus(1, 'passthrough', p_load=0.1)], [Branch(0, 1, 1.0)], [0], 'passthrough'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 0, 1.0)], [0], 'itself'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 1, -1.0)], [0], 'susceptance'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 1, 1.0)], [], 'reference'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 1, 1.0)], [0, 0], 'more than one'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 1, 1.0)], [1], 'kind'),
    ([Bus(0, 'device'), Bus(1)], [Branch(0, 2, 1.0)], [0], 'unknown bus 2'),
])
def test_network_structure_errors(buses, branches, device_buses, message):
    with pytest.raises(NetworkStructureError, match=message):
        Network(buses, branches, device_buses)


def ieee9_operating_point():
    scenario = load_bundled('ieee9')
    network = scenario.network()
    angles, _ = initialize_dispatch(scenario)
    return network, np.asarray(angles)


def test_solver_reuse_matches_fresh_solves():
    network, angles = ieee9_operating_point()
    solver = NetworkSolver(network)
    previous = solver.solve(angles)
    for k in range(1, 6):
        shifted = angles + np.array([0.0, 0.01, -0.01]) * k
        reused = solver.solve(shifted, guess=previous.angles)
        fresh = solve_network(network, shifted, network.p_load)
        np.testing.assert_allclose(reused.device_p_e, fresh.device_p_e, atol=1e-9)
        np.testing.assert_allclose(reused.angles, fresh.angles, atol=1e-9)
        assert reused.max_mismatch <= 1e-10
        previous = reused


def test_solver_common_rotation_needs_no_iteration():
    solver = NetworkSolver(two_bus(load=0.5))
    first = solver.solve([0.1])
    rotated = solver.solve([0.4], guess=first.angles)
    assert rotated.iterations == 0
    assert rotated.angles[1] - first.angles[1] == pytest.approx(0.3, abs=1e-12)
    assert rotated.device_p_e[0] == pytest.approx(0.5, abs=1e-10)


def test_solver_without_free_buses_skips_newton():
    network = Network([Bus(0, 'device'), Bus(1, 'device')], [Branch(0, 1, 2.0)], [0, 1])
    solution = NetworkSolver(network).solve([0.2, 0.0])
    assert solution.iterations == 0
    assert solution.residuals == (0.0,)
    assert solution.device_p_e[0] == pytest.approx(2 * np.sin(0.2))


def test_solver_follows_load_change():
    network, angles = ieee9_operating_point()
    solver = NetworkSolver(network)
    base = solver.solve(angles)
    loads = network.p_load.copy()
    loads[network.bus_position(5)] += 0.05
    solver.set_loads(loads)
    stepped = solver.solve(angles, guess=base.angles)
    fresh = solve_network(network, angles, loads)
    np.testing.assert_allclose(stepped.device_p_e, fresh.device_p_e, atol=1e-9)
    assert abs(lossless_imbalance(stepped, loads)) < 1e-9


def test_solver_load_change_checks_capacity():
    solver = NetworkSolver(two_bus(b=2.0))
    with pytest.raises(InfeasibleFlowError, match='exceeds branch capacity'):
        solver.set_loads([0.0, 2.5])


def test_sparse_and_dense_paths_agree(monkeypatch):
    dense, angles = ieee9_operating_point()
    monkeypatch.setattr(netmodel, 'DENSE_BUS_LIMIT', 0)
    sparse_network = load_bundled('ieee9').network()
    assert dense.dense
    assert not sparse_network.dense
    expected = solve_network(dense, angles + 0.02, dense.p_load)
    solver = NetworkSolver(sparse_network)
    base = solver.solve(angles)
    result = solver.solve(angles + 0.02, guess=base.angles)
    np.testing.assert_allclose(result.device_p_e, expected.device_p_e, atol=1e-9)
    np.testing.assert_allclose(result.angles, expected.angles, atol=1e-9)
