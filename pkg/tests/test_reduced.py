from dataclasses import replace

import numpy as np
import pytest

from gridfreq.module_utils.devices import GfmParams, SgParams
from gridfreq.module_utils.engine import simulate
from gridfreq.module_utils.gridfreq_helper import ReducedModelError
from gridfreq.module_utils.reduced import (
    GFM_ALGEBRAIC,
    SG_FIRST_ORDER,
    gfm_reduced_frequency,
    reduce_series,
    reduced_error,
    sg_reduced_frequency,
    sg_reduced_trajectory,
    sg_second_order_residual,
)

from .conftest import load_bundled, run_bundled


def test_gfm_reduced_at_set_point():
    params = GfmParams(p_set=0.5)
    np.testing.assert_allclose(gfm_reduced_frequency(np.full(5, 0.5), params), 60.0)


def test_gfm_reduced_step_is_instant():
    params = GfmParams(p_set=0.5, droop_M_P=0.05)
    f = gfm_reduced_frequency([0.5, 0.55, 0.55], params)
    np.testing.assert_allclose(f, [60.0, 59.85, 59.85])


def test_sg_inertial_line_slope():
    f = sg_reduced_trajectory(SgParams(inertia_H=4.0), 0.05, 1.0)
    assert f[0] == 60.0
    slope = np.polyfit(np.arange(f.size) * 0.001, f, 1)[0]
    assert slope == pytest.approx(-0.375)


def test_sg_trajectory_without_step_is_flat():
    np.testing.assert_array_equal(sg_reduced_trajectory(SgParams(), 0.0, 0.5), 60.0)


def test_sg_trajectory_with_damping_levels_off():
    params = SgParams(inertia_H=4.0, damping_D=2.0)
    f = sg_reduced_trajectory(params, 0.05, 60.0, dt=0.01)
    assert f[-1] == pytest.approx(60.0 - 0.05 * 60.0 / 2.0, abs=1e-4)
    assert np.all(np.diff(f) <= 0)


@pytest.mark.parametrize('damping', [0.0, 2.0])
def test_reduced_frequency_matches_trajectory(damping):
    params = SgParams(inertia_H=4.0, damping_D=damping, p_set=0.5)
    t = np.arange(501) * 0.001
    f = sg_reduced_frequency(t, np.full(t.size, 0.55), params)
    np.testing.assert_allclose(f, sg_reduced_trajectory(params, 0.05, 0.5), atol=1e-8)


def test_reduced_frequency_length_mismatch():
    with pytest.raises(ReducedModelError, match='differ in length'):
        sg_reduced_frequency(np.arange(3), np.zeros(4), SgParams())


def test_gfm_reduction_after_filter_transient():
    scenario, series = run_bundled('single_gfm')
    trace = reduce_series(series, scenario)
    assert trace.source_model == (GFM_ALGEBRAIC,)
    assert trace.f_reduced.shape == series.f.shape
    tau_I = scenario.device('I1').params.tau_I
    assert reduced_error(series, trace, t_from=1.0 + 5 * tau_I)[0] < 5e-3
    assert trace.f_reduced[-1, 0] == pytest.approx(series.f[-1, 0], abs=1e-9)


def test_sg_inertial_line_before_governor():
    scenario, series = run_bundled('single_sg')
    trace = reduce_series(series, scenario)
    assert trace.source_model == (SG_FIRST_ORDER,)
    error = reduced_error(series, trace, t_from=0.0, t_to=1.2)[0]
    assert error < 5e-3
    assert error > 1e-4

    line = sg_reduced_trajectory(scenario.device('G1').params, 0.05, 0.2)
    window = (series.t >= 1.0 - 1e-9) & (series.t <= 1.2 + 1e-9)
    assert np.max(np.abs(series.f[window, 0] - line)) < 5e-3


def test_residual_small_on_sg_run():
    scenario, series = run_bundled('single_sg')
    residual = sg_second_order_residual(series, 'G1', scenario.device('G1').params)
    assert np.isnan(residual[0]) and np.isnan(residual[-1])
    assert np.isnan(residual[series.t == 1.0]).all()
    assert np.nanmax(np.abs(residual)) < 1e-3


def test_residual_masks_snapped_off_grid_event():
    scenario = load_bundled('single_sg')
    event = replace(scenario.events[0], time=1.0006)
    scenario = replace(scenario, events=(event,), sim=replace(scenario.sim, duration=1.5))
    series = simulate(scenario)
    residual = sg_second_order_residual(series, 'G1', scenario.device('G1').params)
    assert series.event_times == pytest.approx((1.001,))
    assert np.isnan(residual[[1000, 1001, 1002]]).all()
    assert np.isfinite(residual[[999, 1003]]).all()


def test_residual_zero_at_equilibrium():
    scenario, series = run_bundled('single_sg')
    residual = sg_second_order_residual(series, 'G1', scenario.device('G1').params)
    before = (series.t > 0.0) & (series.t < 0.99)
    np.testing.assert_allclose(residual[before], 0.0, atol=1e-6)


def test_residual_flags_gfm_trace():
    _, series = run_bundled('single_gfm')
    residual = sg_second_order_residual(series, 'I1', SgParams(p_set=0.5))
    assert np.nanmax(np.abs(residual)) > 1.0


def test_residual_needs_three_samples():
    scenario = load_bundled('single_sg')
    series = simulate(replace(scenario, events=(), sim=replace(scenario.sim, duration=0.001)))
    with pytest.raises(ReducedModelError, match='too short'):
        sg_second_order_residual(series, 'G1', scenario.device('G1').params)
