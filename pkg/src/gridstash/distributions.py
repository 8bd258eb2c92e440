"""Price distribution interface used by the threshold policy and the bounds.

Every distribution exposes the handful of functionals the policy recursion
and the regret machinery need: mean, cdf/pdf, truncated first moment, the
expected minimum of two independent draws, and seeded sampling. Mixtures
delegate to the fitting module; uniform/point/discrete laws carry closed
forms so oracle tests never depend on quadrature.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import gmm


class PriceDistribution(abc.ABC):
    """A one-dimensional price law."""

    @abc.abstractmethod
    def mean(self) -> float: ...

    @abc.abstractmethod
    def pdf(self, p): ...

    @abc.abstractmethod
    def cdf(self, p):
        """P(X <= p)."""

    @abc.abstractmethod
    def partial_expectation(self, a: float, b: float) -> float:
        """E[X * 1{a < X <= b}]; endpoints may be infinite, a <= b."""

    @abc.abstractmethod
    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    @abc.abstractmethod
    def support_bounds(self) -> tuple[float, float]:
        """A finite interval carrying essentially all mass (for scans/quadrature)."""

    def prob_below(self, p: float) -> float:
        """P(X < p); equals the cdf except at atoms."""
        return float(self.cdf(p))

    def expected_min_of_two(self) -> float:
        """E[min(X1, X2)] for two independent copies; default uses quadrature."""
        lo, hi = self.support_bounds()
        val, _ = integrate.quad(
            lambda p: p * self.pdf(p) * (1.0 - self.cdf(p)), lo, hi, limit=200
        )
        return 2.0 * val


@dataclass(frozen=True)
class UniformDistribution(PriceDistribution):
    low: float
    high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("endpoints must be finite")
        if self.high <= self.low:
            raise ValueError(f"need low < high, got [{self.low}, {self.high}]")

    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def pdf(self, p):
        x = np.asarray(p, dtype=float)
        dens = np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)
        return float(dens) if x.ndim == 0 else dens

    def cdf(self, p):
        x = np.asarray(p, dtype=float)
        vals = np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)
        return float(vals) if x.ndim == 0 else vals

    def partial_expectation(self, a: float, b: float) -> float:
        if a > b:
            raise ValueError(f"need a <= b, got a={a!r} > b={b!r}")
        lo = max(a, self.low)
        hi = min(b, self.high)
        if hi <= lo:
            return 0.0
        return (hi * hi - lo * lo) / (2.0 * (self.high - self.low))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=n)

    def support_bounds(self) -> tuple[float, float]:
        return (self.low, self.high)

    def expected_min_of_two(self) -> float:
        return self.low + (self.high - self.low) / 3.0


@dataclass(frozen=True, eq=False)
class DiscreteDistribution(PriceDistribution):
    """Finite support with exact closed forms; atoms are kept sorted."""

    values: np.ndarray
    probs: np.ndarray

    def __init__(self, values, probs) -> None:
        v = np.asarray(values, dtype=float).ravel()
        q = np.asarray(probs, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("need at least one atom")
        if v.size != q.size:
            raise ValueError(f"{v.size} values vs {q.size} probs")
        if not np.all(np.isfinite(v)):
            raise ValueError("atom values must be finite")
        if np.any(q < -1e-12):
            raise ValueError("probabilities must be nonnegative")
        total = float(q.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        order = np.argsort(v, kind="stable")
        v = v[order]
        q = np.maximum(q[order], 0.0)
        if np.any(np.diff(v) == 0):
            raise ValueError("atom values must be distinct")
        v.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", q)
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(q))))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def pdf(self, p):
        # Lebesgue density of an atomic law is zero off the atoms; callers
        # that need per-atom mass use .probs directly.
        x = np.asarray(p, dtype=float)
        zeros = np.zeros_like(x)
        return float(zeros) if x.ndim == 0 else zeros

    def cdf(self, p):
        x = np.asarray(p, dtype=float)
        idx = np.searchsorted(self.values, x, side="right")
        vals = self._cum[idx]
        return float(vals) if x.ndim == 0 else vals

    def prob_below(self, p: float) -> float:
        idx = int(np.searchsorted(self.values, p, side="left"))
        return float(self._cum[idx])

    def partial_expectation(self, a: float, b: float) -> float:
        if a > b:
            raise ValueError(f"need a <= b, got a={a!r} > b={b!r}")
        mask = (self.values > a) & (self.values <= b)
        return float(np.dot(self.values[mask], self.probs[mask]))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.values, size=n, p=self.probs)

    def support_bounds(self) -> tuple[float, float]:
        return (float(self.values[0]), float(self.values[-1]))

    def expected_min_of_two(self) -> float:
        # P(min = v_k) = P(X >= v_k)^2 - P(X >= v_{k+1})^2
        survival = 1.0 - self._cum[:-1]
        shifted = np.concatenate((survival[1:], [0.0]))
        return float(np.dot(self.values, survival**2 - shifted**2))

    def min_atom_mass_in(self, lo: float, hi: float) -> float:
        """Smallest atom probability inside [lo, hi]; 0.0 when no atom lies there."""
        mask = (self.values >= lo) & (self.values <= hi)
        if not np.any(mask):
            return 0.0
        return float(self.probs[mask].min())


class PointMass(DiscreteDistribution):
    """All mass at one price."""

    def __init__(self, value: float) -> None:
        super().__init__([value], [1.0])


@dataclass(frozen=True)
class GmmDistribution(PriceDistribution):
    """A fitted Gaussian mixture viewed as a price law."""

    model: gmm.GmmModel

    def mean(self) -> float:
        return self.model.mean()

    def pdf(self, p):
        return gmm.pdf(self.model, p)

    def cdf(self, p):
        return gmm.cdf(self.model, p)

    def partial_expectation(self, a: float, b: float) -> float:
        return gmm.partial_expectation(self.model, a, b)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return gmm.sample_with_rng(self.model, n, rng)

    def support_bounds(self) -> tuple[float, float]:
        lo = float(np.min(self.model.means - 12.0 * self.model.stds))
        hi = float(np.max(self.model.means + 12.0 * self.model.stds))
        return (lo, hi)

    def expected_min_of_two(self) -> float:
        lo, hi = self.support_bounds()
        interior = [float(m) for m in self.model.means if lo < m < hi]
        val, _ = integrate.quad(
            lambda p: p * gmm.pdf(self.model, p) * (1.0 - gmm.cdf(self.model, p)),
            lo,
            hi,
            points=interior,
            limit=200,
        )
        return 2.0 * val
