"""Capacity sizing curves and the amortized-price capacity rule."""

from __future__ import annotations

import numpy as np
import pytest

from gridstash.data_io import load_trace_from_values, price_trace_from_values
from gridstash.distributions import UniformDistribution
from gridstash.sizing import (
    SizingCurve,
    curve_to_csv,
    expected_min_cost_curve,
    min_cost_curve,
    optimal_capacity,
)


def test_worked_example_curve():
    prices = price_trace_from_values([1.0, 9.0, 10.0])
    load = load_trace_from_values([0.0, 1.0, 1.0])
    curve = min_cost_curve(prices, load, [0.0, 1.0, 2.0])
    assert curve.costs == pytest.approx((19.0, 10.0, 2.0))
    assert curve.marginal_savings() == pytest.approx((9.0, 8.0))


def test_curve_validation():
    SizingCurve((0.0, 1.0), (5.0, 5.0))  # flat is fine
    with pytest.raises(ValueError):
        SizingCurve((0.0, 1.0), (5.0, 6.0))  # cost rises
    with pytest.raises(ValueError):
        SizingCurve((1.0, 0.0), (5.0, 4.0))  # grid not increasing
    with pytest.raises(ValueError):
        SizingCurve((0.0,), (5.0,))  # one point is not a curve
    with pytest.raises(ValueError):
        SizingCurve((0.0, 1.0, 2.0), (10.0, 9.5, 8.0))  # saving rises 0.5 -> 1.5
    with pytest.raises(ValueError):
        SizingCurve((0.0, 1.0), (5.0,))


def test_random_instances_have_valid_shape():
    rng = np.random.default_rng(20)
    for trial in range(20):
        n = int(rng.integers(3, 40))
        prices = price_trace_from_values(rng.uniform(1.0, 10.0, size=n))
        load = load_trace_from_values(rng.integers(0, 4, size=n).astype(float))
        grid = np.linspace(0.0, float(load.values.sum()) + 1.0, 8)
        # the constructor itself asserts non-increasing costs and
        # diminishing marginal savings; building it is the test
        curve = min_cost_curve(prices, load, grid)
        assert len(curve.capacities) == 8


def test_optimal_capacity_prefix_rule():
    curve = SizingCurve((0.0, 1.0, 2.0, 3.0), (19.0, 10.0, 2.0, 1.0))
    # savings per segment: 9, 8, 1
    assert optimal_capacity(curve, 8.5).capacity == 1.0
    assert optimal_capacity(curve, 8.0).capacity == 2.0
    assert optimal_capacity(curve, 1.0).capacity == 3.0
    assert optimal_capacity(curve, 100.0).capacity == 0.0
    free = optimal_capacity(curve, 0.0)
    assert free.capacity == 3.0  # free storage takes the whole grid
    assert free.cost_at_capacity == 1.0
    with pytest.raises(ValueError):
        optimal_capacity(curve, -1.0)


def test_optimal_capacity_non_increasing_in_price():
    rng = np.random.default_rng(21)
    prices = price_trace_from_values(rng.uniform(1.0, 30.0, size=72))
    load = load_trace_from_values(rng.integers(0, 3, size=72).astype(float))
    curve = min_cost_curve(prices, load, np.linspace(0.0, 10.0, 9))
    price_grid = np.linspace(0.0, 12.0, 10)
    caps = [optimal_capacity(curve, float(p)).capacity for p in price_grid]
    assert all(b2 <= b1 for b1, b2 in zip(caps, caps[1:]))


def test_expected_curve_averages_scenarios():
    load = load_trace_from_values(np.tile([0.0, 2.0, 1.0, 0.0], 12))
    dist = UniformDistribution(5.0, 25.0)
    curve = expected_min_cost_curve(dist, load, [0.0, 2.0, 5.0], n_scenarios=30, seed=4)
    again = expected_min_cost_curve(dist, load, [0.0, 2.0, 5.0], n_scenarios=30, seed=4)
    assert curve.costs == again.costs  # seeded determinism
    assert curve.costs[0] > curve.costs[1] > curve.costs[2]
    with pytest.raises(ValueError):
        expected_min_cost_curve(dist, load, [0.0, 1.0], n_scenarios=0, seed=0)


def test_zero_capacity_cost_is_deadline_cost():
    prices = price_trace_from_values([3.0, 7.0, 2.0])
    load = load_trace_from_values([1.0, 2.0, 4.0])
    curve = min_cost_curve(prices, load, [0.0, 1.0])
    assert curve.costs[0] == pytest.approx(3.0 + 14.0 + 8.0)


def test_curve_csv_layout(tmp_path):
    curve = SizingCurve((0.0, 1.0, 2.0), (19.0, 10.0, 2.0))
    path = tmp_path / "curve.csv"
    curve_to_csv(curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "B,min_cost,marginal_saving"
    assert lines[1].split(",") == ["0.0", "19.0", "9.0"]
    assert lines[2].split(",") == ["1.0", "10.0", "8.0"]
    assert lines[3].split(",") == ["2.0", "2.0", ""]  # last row has no segment
