"""Thompson-sampling core: Beta posteriors over per-trace property success.

Each candidate model carries a Beta(alpha, beta) posterior over its
probability of satisfying the non-functional property on the next trace.
Selection samples one value per posterior and plays the argmax; the score
outcome then increments exactly one of the two counters.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels
from .domain import (
    DomainError,
    ExecutionTrace,
    NonFunctionalProperty,
    ObservationEntry,
    UsageError,
)


@dataclass
class BetaState:
    """Parameters of one model's Beta posterior."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise UsageError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        """Posterior mean alpha / (alpha + beta)."""
        return self.alpha / (self.alpha + self.beta)


class CandidateSet:
    """The model pool under assessment plus the currently selected model.

    Posterior parameters are stored as parallel float arrays (they are
    rationals by construction but kept as reals so window reinitialisation
    can scale them).  Pool order is fixed at construction and is the
    tie-break order everywhere downstream.
    """

    def __init__(self, ids: Sequence[str], alphas: np.ndarray, betas: np.ndarray, selected: str):
        ids = tuple(ids)
        if not ids:
            raise UsageError("candidate set needs at least one model")
        if len(set(ids)) != len(ids):
            raise UsageError("duplicate model ids in candidate set")
        if selected not in ids:
            raise UsageError(f"selected model {selected!r} is not in the pool")
        if alphas.shape != (len(ids),) or betas.shape != (len(ids),):
            raise UsageError("posterior arrays must have one entry per model")
        if not (np.all(alphas > 0) and np.all(betas > 0)):
            raise UsageError("Beta parameters must be positive")
        self.ids = ids
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.betas = np.asarray(betas, dtype=np.float64)
        self.selected = selected
        self._index = {mid: i for i, mid in enumerate(ids)}

    @classmethod
    def fresh(cls, ids: Sequence[str], selected: str | None = None) -> "CandidateSet":
        """A pool with uninformative Beta(1, 1) posteriors."""
        ids = tuple(ids)
        if not ids:
            raise UsageError("candidate set needs at least one model")
        k = len(ids)
        return cls(ids, np.ones(k), np.ones(k), selected if selected is not None else ids[0])

    @property
    def k(self) -> int:
        return len(self.ids)

    def index(self, model_id: str) -> int:
        try:
            return self._index[model_id]
        except KeyError:
            raise UsageError(f"unknown model id {model_id!r}") from None

    def state(self, model_id: str) -> BetaState:
        i = self.index(model_id)
        return BetaState(float(self.alphas[i]), float(self.betas[i]))

    def posterior_mean(self, model_id: str) -> float:
        i = self.index(model_id)
        return float(self.alphas[i] / (self.alphas[i] + self.betas[i]))

    def posterior_means(self) -> np.ndarray:
        return self.alphas / (self.alphas + self.betas)


def beta_pdf(x: float, alpha: float, beta: float) -> float:
    """Beta density x^(alpha-1) (1-x)^(beta-1) / B(alpha, beta) at ``x``.

    Evaluated in log space for stability.  ``x`` outside [0, 1] is a
    domain error; non-positive shape parameters are a usage error.
    """
    if not (alpha > 0.0 and beta > 0.0):
        raise UsageError(f"Beta parameters must be positive, got ({alpha}, {beta})")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"Beta density is defined on [0, 1], got {x}")
    if x == 0.0:
        if alpha > 1.0:
            return 0.0
        if alpha == 1.0:
            return beta
        return math.inf
    if x == 1.0:
        if beta > 1.0:
            return 0.0
        if beta == 1.0:
            return alpha
        return math.inf
    log_norm = math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)
    return math.exp((alpha - 1.0) * math.log(x) + (beta - 1.0) * math.log1p(-x) - log_norm)


def sample_beta(state: BetaState, rng: np.random.Generator) -> float:
    """One draw from the posterior."""
    return float(rng.beta(state.alpha, state.beta))


def argmax_first(values: np.ndarray) -> int:
    """Index of the maximum; ties resolve to the lowest index."""
    if len(values) == 0:
        raise UsageError("argmax of an empty vector")
    return int(np.argmax(values))


def thompson_select(candidates: CandidateSet, rng: np.random.Generator) -> str:
    """Sample one value per posterior and return the argmax model id."""
    draws = kernels.sample_row(rng, candidates.alphas, candidates.betas)
    return candidates.ids[argmax_first(draws)]


def apply_score(
    candidates: CandidateSet,
    model_id: str,
    score: float,
    prop: NonFunctionalProperty,
) -> bool:
    """Judge ``score`` against the property and update the model's posterior.

    Success (score strictly below the threshold) increments alpha, failure
    increments beta; exactly one counter moves.  Returns the success flag.
    The candidate set is updated in place.
    """
    i = candidates.index(model_id)
    success = prop.satisfied(score)
    if success:
        candidates.alphas[i] += 1.0
    else:
        candidates.betas[i] += 1.0
    return success


def static_select(
    candidates: CandidateSet,
    traces: Iterable[ExecutionTrace],
    prop: NonFunctionalProperty,
    predictors: Mapping[str, Any],
    rng: np.random.Generator,
) -> tuple[str, dict[str, int]]:
    """One-shot selection: play the bandit over a fixed trace budget.

    Every trace pulls one model, scores it, and updates its posterior.
    Returns the model with the most pulls (ties to pool order) and the
    full pull-count table.  The candidate set keeps its final posteriors.
    """
    counts = {mid: 0 for mid in candidates.ids}
    seen = 0
    for trace in traces:
        pulled = thompson_select(candidates, rng)
        score = prop.scorer(trace, predictors[pulled])
        apply_score(candidates, pulled, score, prop)
        counts[pulled] += 1
        seen += 1
    if seen == 0:
        raise UsageError("static selection needs a non-empty trace budget")
    best = max(candidates.ids, key=lambda mid: counts[mid])  # max is stable: first wins ties
    return best, counts


def replay_observations(
    entries: Iterable[ObservationEntry], ids: Sequence[str]
) -> CandidateSet:
    """Rebuild posteriors from an observation log.

    Starting from fresh Beta(1, 1) states, replays each recorded outcome.
    A run and its replay therefore end in identical states.
    """
    candidates = CandidateSet.fresh(ids)
    for entry in entries:
        i = candidates.index(entry.pulled)
        if entry.success:
            candidates.alphas[i] += 1.0
        else:
            candidates.betas[i] += 1.0
    return candidates
