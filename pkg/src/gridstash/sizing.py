"""Storage sizing: hindsight cost as a function of capacity, and the largest
capacity whose marginal saving still beats an amortized per-unit price.

The minimum-cost curve MinC(B) is non-increasing with diminishing marginal
savings (each extra unit of capacity helps no more than the previous one;
equivalently the savings curve MinC(0) - MinC(B) is concave). The economic
capacity is the last grid point whose segment still saves at least the
amortized capacity price per unit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data_io import LoadTrace, PriceTrace
from .distributions import PriceDistribution
from .evaluation import offline_optimal_general


@dataclass(frozen=True, eq=False)
class SizingCurve:
    """Hindsight cost sampled on a capacity grid.

    Validates shape on construction: capacities strictly increasing and
    nonnegative, costs non-increasing, marginal savings non-increasing
    (both within a scale-aware 1e-9 slack).
    """

    capacities: tuple[float, ...]
    costs: tuple[float, ...]

    def __post_init__(self) -> None:
        caps = tuple(float(b) for b in self.capacities)
        costs = tuple(float(c) for c in self.costs)
        if len(caps) != len(costs):
            raise ValueError(f"{len(caps)} capacities vs {len(costs)} costs")
        if len(caps) < 2:
            raise ValueError("curve needs at least two grid points")
        if caps[0] < 0 or any(b2 <= b1 for b1, b2 in zip(caps, caps[1:])):
            raise ValueError("capacities must be nonnegative and strictly increasing")
        scale = max(1.0, max(abs(c) for c in costs))
        slack = 1e-9 * scale
        for i, (c1, c2) in enumerate(zip(costs, costs[1:])):
            if c2 > c1 + slack:
                raise ValueError(
                    f"cost increases from {c1!r} to {c2!r} at grid index {i}"
                )
        marg = _marginal_savings(caps, costs)
        for i, (m1, m2) in enumerate(zip(marg, marg[1:])):
            if m2 > m1 + slack:
                raise ValueError(
                    f"marginal saving rises from {m1!r} to {m2!r} at segment {i}"
                )
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "costs", costs)

    def marginal_savings(self) -> tuple[float, ...]:
        """Per-unit saving of each grid segment, clipped at zero."""
        return _marginal_savings(self.capacities, self.costs)


def _marginal_savings(caps: Sequence[float], costs: Sequence[float]) -> tuple[float, ...]:
    return tuple(
        max(0.0, (c1 - c2) / (b2 - b1))
        for b1, b2, c1, c2 in zip(caps, caps[1:], costs, costs[1:])
    )


@dataclass(frozen=True)
class SizingResult:
    capacity: float
    amortized_price: float
    cost_at_capacity: float


def min_cost_curve(
    prices: PriceTrace, load: LoadTrace, capacities: Sequence[float]
) -> SizingCurve:
    """Hindsight-optimal cost at each capacity for one realized trace pair."""
    costs = [offline_optimal_general(prices, load, float(b)) for b in capacities]
    return SizingCurve(tuple(float(b) for b in capacities), tuple(costs))


def expected_min_cost_curve(
    dist: PriceDistribution,
    load: LoadTrace,
    capacities: Sequence[float],
    n_scenarios: int,
    seed: int,
) -> SizingCurve:
    """Scenario-averaged curve: mean hindsight cost over sampled price traces.

    Diminishing marginal savings holds per scenario, hence for the average.
    """
    if n_scenarios < 1:
        raise ValueError(f"n_scenarios must be >= 1, got {n_scenarios}")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    totals = np.zeros(len(capacities))
    for _ in range(n_scenarios):
        trace = PriceTrace(load.start, dist.sample(len(load), rng))
        totals += [offline_optimal_general(trace, load, float(b)) for b in capacities]
    costs = totals / n_scenarios
    return SizingCurve(tuple(float(b) for b in capacities), tuple(float(c) for c in costs))


def optimal_capacity(curve: SizingCurve, amortized_price: float) -> SizingResult:
    """Largest grid capacity whose segment saves >= the amortized unit price.

    Because marginal savings are non-increasing, the segments clearing the
    price form a prefix; the answer is that prefix's upper endpoint, or the
    smallest grid capacity when even the first segment does not clear it.
    Free capacity (price 0) selects the top of the grid.
    """
    if not math.isfinite(amortized_price) or amortized_price < 0:
        raise ValueError(f"amortized price must be finite and >= 0, got {amortized_price!r}")
    best = 0
    for i, saving in enumerate(curve.marginal_savings()):
        if saving >= amortized_price:
            best = i + 1
        else:
            break
    return SizingResult(
        capacity=curve.capacities[best],
        amortized_price=amortized_price,
        cost_at_capacity=curve.costs[best],
    )


def curve_to_csv(curve: SizingCurve, path) -> None:
    """Rows of B, cost, and the saving rate of the segment starting at B."""
    marg = curve.marginal_savings()
    with open(Path(path), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("B", "min_cost", "marginal_saving"))
        for i, (b, c) in enumerate(zip(curve.capacities, curve.costs)):
            writer.writerow((repr(b), repr(c), repr(marg[i]) if i < len(marg) else ""))
