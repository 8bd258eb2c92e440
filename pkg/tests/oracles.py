"""Independent reference implementations the tests trust.

Deliberately dumb and exhaustive: a storage-lattice dynamic program over
integer instances, and full price-path enumeration for expected policy cost.
Neither shares code with the package's decomposition or recursion paths.
"""

from __future__ import annotations

import numpy as np

from gridstash.policy import ThresholdSchedule, simulate_one_shot_matrix


def dp_storage_optimum(prices, demands, capacity: int) -> float:
    """Exact hindsight optimum by enumerating integer storage levels.

    State: stored units after each slot. Transition: discharge any amount of
    the slot's demand from storage, buy the rest plus any refill that fits.
    """
    states = {0: 0.0}
    for t in range(len(demands)):
        demand = int(demands[t])
        price = float(prices[t])
        new: dict[int, float] = {}
        for level, cost in states.items():
            for discharge in range(0, min(level, demand) + 1):
                direct = demand - discharge
                room = capacity - (level - discharge)
                for buy in range(0, room + 1):
                    nxt = level - discharge + buy
                    total = cost + (direct + buy) * price
                    if nxt not in new or total < new[nxt]:
                        new[nxt] = total
        states = new
    return min(states.values())


def all_price_paths(values: np.ndarray, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Every length-`horizon` price path over a finite support, with path
    probabilities left to the caller (returns index matrix and price matrix)."""
    size = len(values)
    count = size**horizon
    digits = size ** np.arange(horizon - 1, -1, -1, dtype=np.int64)
    ids = np.arange(count, dtype=np.int64)
    idx = (ids[:, None] // digits[None, :]) % size
    return idx, np.asarray(values, dtype=float)[idx]


def enumerate_policy_expected_cost(
    values, probs, schedule: ThresholdSchedule
) -> float:
    """Expected price the threshold policy pays, by exhausting all paths."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    idx, paths = all_price_paths(values, schedule.horizon)
    paid, _ = simulate_one_shot_matrix(paths, schedule)
    weights = probs[idx].prod(axis=1)
    return float(np.dot(paid, weights))


def enumerate_offline_expected_min(values, probs, horizon: int) -> float:
    """Expected minimum over all paths, enumerated independently."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    idx, paths = all_price_paths(values, horizon)
    weights = probs[idx].prod(axis=1)
    return float(np.dot(paths.min(axis=1), weights))
