"""One-dimensional Gaussian mixture fitting via EM with BIC model selection.

The fitting loop is written out by hand (log-domain E-step, closed-form
M-step, k-means++-style seeding) so its convergence accounting and failure
modes are fully under our control; scipy supplies only logsumexp and the
normal CDF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, ndtr

from .errors import DegenerateFitError, InsufficientSamplesError

_LOG_2PI = math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# A component whose total responsibility falls below this is starved.
_RESP_EPS = 1e-12


@dataclass(frozen=True)
class GmmComponent:
    weight: float
    mean: float
    std: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.weight) and math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError("component parameters must be finite")
        if not -1e-12 <= self.weight <= 1.0 + 1e-12:
            raise ValueError(f"component weight {self.weight} outside [0, 1]")
        if self.std <= 0:
            raise ValueError(f"component std {self.std} must be positive")


@dataclass(frozen=True, eq=False)
class GmmModel:
    """An immutable mixture; components are kept sorted by mean."""

    components: tuple[GmmComponent, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mixture needs at least one component")
        comps = tuple(sorted(self.components, key=lambda c: (c.mean, c.std, c.weight)))
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_weights", np.array([c.weight for c in comps]))
        object.__setattr__(self, "_means", np.array([c.mean for c in comps]))
        object.__setattr__(self, "_stds", np.array([c.std for c in comps]))

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def means(self) -> np.ndarray:
        return self._means

    @property
    def stds(self) -> np.ndarray:
        return self._stds

    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def variance(self) -> float:
        second_moment = float(np.dot(self.weights, self.stds**2 + self.means**2))
        return second_moment - self.mean() ** 2

    def __eq__(self, other) -> bool:
        if not isinstance(other, GmmModel):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)


def make_model(weights, means, stds) -> GmmModel:
    """Build a model from parallel parameter sequences."""
    if not len(weights) == len(means) == len(stds):
        raise ValueError("weights, means, stds must have equal length")
    return GmmModel(
        tuple(
            GmmComponent(float(w), float(m), float(s))
            for w, m, s in zip(weights, means, stds)
        )
    )


@dataclass(frozen=True)
class EmConfig:
    """Knobs for one EM run.

    sigma_floor is relative to the sample standard deviation; it becomes an
    absolute 1e-9 when the sample is constant.
    """

    tol: float = 1e-6
    max_iter: int = 500
    sigma_floor: float = 1e-6
    init_seed: int = 0

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.sigma_floor <= 0:
            raise ValueError("sigma_floor must be positive")


@dataclass(frozen=True)
class FitReport:
    """Outcome of one EM fit; ll_trace holds the log-likelihood after each pass."""

    model: GmmModel
    log_likelihood: float
    bic: float
    iterations: int
    converged: bool
    n_samples: int
    ll_trace: tuple[float, ...]


def bic(log_likelihood: float, n_samples: int, n_params: int) -> float:
    """Bayesian information criterion: n_params*ln(n_samples) - 2*log_likelihood."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n_params < 0:
        raise ValueError("n_params must be >= 0")
    return n_params * math.log(n_samples) - 2.0 * log_likelihood


def n_free_params(n_components: int) -> int:
    """Free parameters of a K-component univariate mixture: K-1 + K + K."""
    return 3 * n_components - 1


def _log_component_densities(x: np.ndarray, weights, means, stds) -> np.ndarray:
    z = (x[:, None] - means[None, :]) / stds[None, :]
    return (
        np.log(np.maximum(weights, 1e-300))[None, :]
        - np.log(stds)[None, :]
        - 0.5 * z * z
        - 0.5 * _LOG_2PI
    )


def log_likelihood(model: GmmModel, samples) -> float:
    """Total log-likelihood of samples under the mixture; 0.0 for no samples."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    log_comp = _log_component_densities(x, model.weights, model.means, model.stds)
    return float(np.sum(logsumexp(log_comp, axis=1)))


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.size
    centers = np.empty(k)
    centers[0] = x[rng.integers(n)]
    if k == 1:
        return centers
    d2 = (x - centers[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, (x - centers[j]) ** 2)
    return centers


def _initial_params(x: np.ndarray, k: int, rng: np.random.Generator, floor: float):
    centers = _kmeans_pp_centers(x, k, rng)
    labels = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
    pop_std = float(x.std())
    weights = np.empty(k)
    means = np.empty(k)
    stds = np.empty(k)
    for j in range(k):
        members = x[labels == j]
        if members.size == 0:
            # duplicate centers (fewer distinct values than k); keep the
            # component alive with a token weight so EM can reassign mass
            weights[j] = 1.0
            means[j] = centers[j]
            stds[j] = max(pop_std, floor)
        else:
            weights[j] = float(members.size)
            means[j] = float(members.mean())
            stds[j] = max(float(members.std()), floor)
    weights /= weights.sum()
    return weights, means, stds


def em_fit(samples, n_components: int, config: EmConfig = EmConfig()) -> FitReport:
    """Fit a mixture by expectation-maximization.

    Each pass computes responsibilities in the log domain, checks convergence
    of the total log-likelihood against the previous pass, then applies one
    M-step (weighted mean, weighted variance around the new mean, weight =
    responsibility share). Raises DegenerateFitError if a component starves,
    the likelihood stops being finite, or it decreases beyond 1e-9.
    """
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    n = x.size
    if n < n_components:
        raise InsufficientSamplesError(
            f"{n} samples cannot support {n_components} components"
        )
    rng = np.random.default_rng(config.init_seed)
    floor = config.sigma_floor * float(x.std())
    if floor <= 0:
        floor = 1e-9
    weights, means, stds = _initial_params(x, n_components, rng, floor)

    prev_ll = -math.inf
    trace: list[float] = []
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        log_comp = _log_component_densities(x, weights, means, stds)
        log_norm = logsumexp(log_comp, axis=1)
        ll = float(log_norm.sum())
        if not math.isfinite(ll):
            raise DegenerateFitError(f"log-likelihood became {ll!r}")
        if ll < prev_ll - 1e-9:
            raise DegenerateFitError(
                f"log-likelihood decreased from {prev_ll!r} to {ll!r}"
            )
        trace.append(ll)
        if abs(ll - prev_ll) < config.tol:
            converged = True
            break
        prev_ll = ll
        resp = np.exp(log_comp - log_norm[:, None])
        resp_totals = resp.sum(axis=0)
        if resp_totals.min() < _RESP_EPS:
            starved = int(np.argmin(resp_totals))
            raise DegenerateFitError(
                f"component {starved} lost all responsibility "
                f"(total {resp_totals[starved]!r})"
            )
        means = (resp.T @ x) / resp_totals
        var = np.einsum("ik,ik->k", resp, (x[:, None] - means[None, :]) ** 2)
        stds = np.maximum(np.sqrt(var / resp_totals), floor)
        weights = resp_totals / n
        iterations += 1

    final_ll = trace[-1] if converged else log_likelihood_of_params(x, weights, means, stds)
    if not converged:
        trace.append(final_ll)
    model = make_model(weights, means, stds)
    return FitReport(
        model=model,
        log_likelihood=final_ll,
        bic=bic(final_ll, n, n_free_params(n_components)),
        iterations=iterations,
        converged=converged,
        n_samples=n,
        ll_trace=tuple(trace),
    )


def log_likelihood_of_params(x: np.ndarray, weights, means, stds) -> float:
    log_comp = _log_component_densities(x, np.asarray(weights), np.asarray(means), np.asarray(stds))
    return float(np.sum(logsumexp(log_comp, axis=1)))


def _per_candidate_config(config: EmConfig, n_components: int) -> EmConfig:
    # deterministic per-K seed so candidate fits are order-independent
    derived = int(np.random.SeedSequence([config.init_seed, n_components]).generate_state(1)[0])
    return replace(config, init_seed=derived)


@dataclass(frozen=True)
class CandidateFit:
    """One row of a model-selection sweep; error is None on success."""

    n_components: int
    report: FitReport | None
    error: str | None


def fit_candidates(samples, max_components: int, config: EmConfig = EmConfig()) -> list[CandidateFit]:
    """Fit every K in 1..max_components, capturing per-K failures."""
    if max_components < 1:
        raise ValueError(f"max_components must be >= 1, got {max_components}")
    rows: list[CandidateFit] = []
    last_error: Exception | None = None
    for k in range(1, max_components + 1):
        try:
            report = em_fit(samples, k, _per_candidate_config(config, k))
        except (DegenerateFitError, InsufficientSamplesError) as exc:
            rows.append(CandidateFit(k, None, str(exc)))
            last_error = exc
            continue
        rows.append(CandidateFit(k, report, None))
    if all(row.report is None for row in rows):
        assert last_error is not None
        raise last_error
    return rows


def select_model(samples, max_components: int, config: EmConfig = EmConfig()) -> FitReport:
    """Pick the candidate with the lowest BIC; ties go to fewer components."""
    best: FitReport | None = None
    for row in fit_candidates(samples, max_components, config):
        if row.report is None:
            continue
        if best is None or row.report.bic < best.bic:
            best = row.report
    assert best is not None  # fit_candidates raised otherwise
    return best


def pdf(model: GmmModel, p) -> float | np.ndarray:
    """Mixture density at p (scalar or array)."""
    x = np.asarray(p, dtype=float)
    z = (x[..., None] - model.means) / model.stds
    dens = np.sum(model.weights / model.stds * _INV_SQRT_2PI * np.exp(-0.5 * z * z), axis=-1)
    return float(dens) if x.ndim == 0 else dens


def cdf(model: GmmModel, p) -> float | np.ndarray:
    """Mixture distribution function at p (scalar or array)."""
    x = np.asarray(p, dtype=float)
    z = (x[..., None] - model.means) / model.stds
    vals = np.sum(model.weights * ndtr(z), axis=-1)
    return float(vals) if x.ndim == 0 else vals


def partial_expectation(model: GmmModel, a: float, b: float) -> float:
    """E[X * 1{a < X <= b}] for the mixture, integrating over full support.

    Accepts -inf/+inf endpoints; requires a <= b.
    """
    if math.isnan(a) or math.isnan(b):
        raise ValueError("endpoints must not be NaN")
    if a > b:
        raise ValueError(f"need a <= b, got a={a!r} > b={b!r}")
    za = (a - model.means) / model.stds
    zb = (b - model.means) / model.stds
    # exp(-0.5*inf**2) underflows cleanly to 0, covering infinite endpoints
    phi_a = _INV_SQRT_2PI * np.exp(-0.5 * za * za)
    phi_b = _INV_SQRT_2PI * np.exp(-0.5 * zb * zb)
    terms = model.weights * (model.means * (ndtr(zb) - ndtr(za)) + model.stds * (phi_a - phi_b))
    return float(terms.sum())


def sample(model: GmmModel, n: int, seed: int) -> np.ndarray:
    """Draw n prices from the mixture with a fresh seeded generator."""
    return sample_with_rng(model, n, np.random.default_rng(seed))


def sample_with_rng(model: GmmModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return np.empty(0)
    picks = rng.choice(model.n_components, size=n, p=model.weights)
    return rng.normal(model.means[picks], model.stds[picks])


def model_to_json_dict(model: GmmModel) -> dict:
    return {
        "components": [
            {"weight": c.weight, "mean": c.mean, "std": c.std} for c in model.components
        ]
    }


def model_from_json_dict(doc: dict) -> GmmModel:
    try:
        comps = doc["components"]
        return GmmModel(
            tuple(GmmComponent(float(c["weight"]), float(c["mean"]), float(c["std"])) for c in comps)
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed mixture document: {exc}") from None


def save_model(model: GmmModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_json_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> GmmModel:
    return model_from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))
