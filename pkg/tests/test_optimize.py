import math

import pytest

from mixchart.chart import ChartParams, CostSpec, ProcessSpec, build_model
from mixchart.distributions import MixtureShiftSpec
from mixchart.errors import ParameterError
from mixchart.optimize import SearchSpace, axis_values, grid_search

SPEC = MixtureShiftSpec(zeta=0.5, xi=0.5, delta=0.5)
PROC = ProcessSpec(mu0=0.0, sigma=1.0, s=0.2)
COSTS = CostSpec(c_s=1.0, c_f=5.0, c_rb=10.0, c_rs=2.0, c_os=2.0, c_ob=1.0)


def test_axis_values():
    assert axis_values(1.0, 2.0, count=3) == (1.0, 1.5, 2.0)
    assert axis_values(0.5, 1.5, step=0.5) == (0.5, 1.0, 1.5)
    assert axis_values(2.0, 2.0, count=1) == (2.0,)
    with pytest.raises(ParameterError):
        axis_values(2.0, 1.0, count=2)
    with pytest.raises(ParameterError):
        axis_values(1.0, 2.0, count=2, step=0.5)


def test_search_space_validation():
    with pytest.raises(ParameterError):
        SearchSpace(h_values=(), K_values=(1.0,))
    with pytest.raises(ParameterError):
        SearchSpace(h_values=(0.0, 1.0), K_values=(1.0,))
    space = SearchSpace.from_ranges((0.5, 1.0, 2), {"min": 1.0, "max": 2.0, "step": 0.5})
    assert space.h_values == (0.5, 1.0) and space.K_values == (1.0, 1.5, 2.0)
    assert space.size == 6


def test_single_point_space():
    space = SearchSpace(h_values=(1.0,), K_values=(2.0,))
    opt = grid_search(space, PROC, SPEC, COSTS, 0.1, 24.0)
    assert opt.best_params == ChartParams(h=1.0, K=2.0)
    assert opt.best_cost == pytest.approx(build_model(ChartParams(1.0, 2.0), PROC, SPEC, COSTS, 0.1, 24.0).expected_cost)


def test_all_zero_costs_tie_break():
    space = SearchSpace(h_values=(1.5, 0.5, 1.0), K_values=(3.0, 2.0))
    opt = grid_search(space, PROC, SPEC, CostSpec(), 0.1, 24.0)
    assert opt.best_cost == 0.0
    assert opt.best_params == ChartParams(h=0.5, K=2.0)


def test_sampling_cost_dominates_prefers_longest_interval():
    space = SearchSpace.from_ranges((0.5, 2.5, 5), (1.0, 3.0, 3))
    opt = grid_search(space, PROC, SPEC, CostSpec(c_s=10.0), 0.1, 30.0)
    assert opt.best_params.h == 2.5
    for p in opt.cost_surface:
        assert p.cost == pytest.approx(10.0 / p.h, rel=1e-12)


def test_optimum_is_surface_argmin():
    space = SearchSpace.from_ranges((0.5, 3.0, 6), (1.0, 3.0, 5))
    opt = grid_search(space, PROC, SPEC, COSTS, 0.1, 30.0)
    assert len(opt.cost_surface) == 30
    assert opt.best_cost == min(p.cost for p in opt.cost_surface)
    assert 0.5 < opt.best_params.h < 3.0


def test_parallel_and_serial_surfaces_identical():
    space = SearchSpace.from_ranges((0.5, 2.0, 4), (1.0, 3.0, 3))
    serial = grid_search(space, PROC, SPEC, COSTS, 0.1, 30.0)
    parallel = grid_search(space, PROC, SPEC, COSTS, 0.1, 30.0, workers=3)
    assert serial.cost_surface == parallel.cost_surface
    assert serial.best_params == parallel.best_params


def test_failed_points_are_recorded():
    # a long interval pushes too much shift mass beyond a small grid
    space = SearchSpace(h_values=(0.5, 40.0), K_values=(2.0,))
    opt = grid_search(space, PROC, SPEC, COSTS, 0.1, 30.0)
    assert len(opt.failures) == 1
    bad = opt.failures[0]
    assert bad.h == 40.0 and math.isnan(bad.cost) and "GridTooSmallError" in bad.error
    assert opt.best_params.h == 0.5
