"""Variable-size evaluation windows driven by value-remaining estimates.

The engine consumes a trace stream one record at a time.  Each trace
pulls one model via Thompson sampling, scores it against the property,
and then draws a ``k x g`` Monte Carlo matrix from the current posteriors
to answer two questions: *how much value is still at stake* (could the
apparent leader be wrong?) and *how assured is the production model*.
When the value remaining falls below a configured residual of the
leader's posterior mean -- and the window has outlived its burn-in -- the
window closes: the pool is ranked, the top model goes into production,
and the posteriors are reinitialised, either from scratch or keeping a
configured fraction of their evidence.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from . import kernels
from .bandit import CandidateSet, apply_score, argmax_first, thompson_select
from .domain import (
    EngineConfig,
    ExecutionTrace,
    NonFunctionalProperty,
    ObservationEntry,
    ObservationLog,
    ScorerError,
    SingularityError,
    SubstitutionEvent,
    UsageError,
)
from .substitution import (
    AssuranceTracker,
    Ranking,
    assurance_level,
    check_early_substitution,
    compute_ranking,
    end_of_window_substitute,
    update_degradation,
)

# Reinitialisation policies at a window boundary.
MEMORY = "memory"  # keep floor(memory * parameter), at least 1
RESET = "reset"    # start over from Beta(1, 1)


@dataclass(frozen=True)
class DrawMatrix:
    """A ``k x g`` block of posterior draws, one row per model.

    ``column_max`` caches the per-column maxima (the kernels compute them
    during the winner scan).
    """

    values: np.ndarray
    ids: tuple[str, ...]
    column_max: np.ndarray

    def row(self, model_id: str) -> np.ndarray:
        try:
            return self.values[self.ids.index(model_id)]
        except ValueError:
            raise UsageError(f"unknown model id {model_id!r}") from None


@dataclass(frozen=True)
class WinnerEstimate:
    """Per-draw winner frequencies plus the current leader.

    ``counts[i]`` is the number of draw columns won by model i (pool
    order); ``probabilities`` is ``counts / g`` and therefore sums to one
    by construction.  ``best`` is the model with the highest posterior
    mean (ties to pool order) and ``best_mean`` that mean.
    """

    counts: np.ndarray
    probabilities: np.ndarray
    best: str
    best_mean: float


@dataclass
class WindowState:
    """Book-keeping for the window currently accepting traces."""

    index: int = 0
    start: int = 1
    size: int = 0
    open: bool = True


def monte_carlo(
    candidates: CandidateSet, draws: int, rng: np.random.Generator
) -> tuple[DrawMatrix, WinnerEstimate]:
    """Draw the per-trace Monte Carlo matrix and summarise it.

    ``draws`` is the number of columns (posterior samples per model).
    """
    if draws < 1:
        raise UsageError(f"draw count must be at least 1, got {draws}")
    values, counts, colmax = kernels.mc_matrix(rng, candidates.alphas, candidates.betas, draws)
    matrix = DrawMatrix(values=values, ids=candidates.ids, column_max=colmax)
    means = candidates.posterior_means()
    best_row = argmax_first(means)
    estimate = WinnerEstimate(
        counts=counts,
        probabilities=counts / draws,
        best=candidates.ids[best_row],
        best_mean=float(means[best_row]),
    )
    return matrix, estimate


def regret_samples(matrix: DrawMatrix, best_id: str) -> np.ndarray:
    """Relative regret of the current leader within each draw column.

    For each column: (column maximum - leader's draw) / leader's draw.
    Zero where the leader wins the column, positive otherwise.  A leader
    draw at or below 1e-12 makes the ratio meaningless and raises a
    singularity error.
    """
    row = matrix.row(best_id)
    if float(row.min()) <= 1e-12:
        raise SingularityError("leader draw is numerically zero")
    return (matrix.column_max - row) / row


def nearest_rank_percentile(samples: np.ndarray, level: float) -> float:
    """Nearest-rank percentile: the value at rank ceil(level/100 * n).

    No interpolation -- the result is always an element of ``samples``.
    """
    n = len(samples)
    if n == 0:
        raise UsageError("percentile of an empty sample set")
    if not 0.0 < level <= 100.0:
        raise UsageError(f"percentile level must lie in (0, 100], got {level}")
    rank = math.ceil(level / 100.0 * n)
    idx = rank - 1
    return float(np.partition(samples, idx)[idx])


def should_terminate(
    samples: np.ndarray, best_mean: float, residual: float, level: float = 95
) -> bool:
    """True when the remaining value is within ``residual`` of the leader.

    Compares the nearest-rank percentile of the regret samples against
    ``best_mean * residual``.
    """
    return nearest_rank_percentile(samples, level) <= best_mean * residual


def close_window(candidates: CandidateSet, memory: float) -> None:
    """Reinitialise posteriors keeping a fraction of their evidence.

    Each parameter becomes floor(memory * parameter); zeros are raised to
    one so the states stay proper.  ``memory`` = 0 is a full restart.
    """
    if not 0.0 <= memory <= 1.0:
        raise UsageError(f"memory must lie in [0, 1], got {memory}")
    candidates.alphas[:] = np.maximum(np.floor(candidates.alphas * memory), 1.0)
    candidates.betas[:] = np.maximum(np.floor(candidates.betas * memory), 1.0)


def reset_window(candidates: CandidateSet) -> None:
    """Restart every posterior from Beta(1, 1)."""
    candidates.alphas[:] = 1.0
    candidates.betas[:] = 1.0


class TraceRecord(NamedTuple):
    """Per-trace engine output."""

    trace: int
    window: int
    pulled: str
    score: float
    success: bool
    selected: str
    assurance: float
    degradation: float
    value_remaining: float


class WindowRecord(NamedTuple):
    """Per-window engine output; ``closed`` is False for a trailing stub.

    ``probabilities``, ``alphas`` and ``betas`` are pool-ordered; the
    parameter values are taken at the closing trace, before
    reinitialisation.
    """

    index: int
    start: int
    end: int
    size: int
    closed: bool
    ranking: tuple[str, ...]
    probabilities: tuple[float, ...]
    alphas: tuple[float, ...]
    betas: tuple[float, ...]


@dataclass(frozen=True)
class StepResult:
    """What one engine step produced."""

    record: TraceRecord
    closed: WindowRecord | None = None


class Engine:
    """Continuous assessment loop over a candidate pool.

    ``reinit`` picks the boundary policy: ``"memory"`` scales posteriors
    by ``config.memory`` (the default), ``"reset"`` is the from-scratch
    baseline.  With ``memory=0`` the two are equivalent.

    One step per trace:

    1. Thompson-sample a model and score the trace with it; the outcome
       moves that model's posterior.
    2. Draw the Monte Carlo matrix; record value remaining, assurance of
       the selected model, and the degradation running mean.
    3. Past burn-in, close the window if the value remaining is inside
       the residual: rank the pool, substitute the top model, snapshot the
       window, reinitialise the posteriors, store the ranking.
    4. Otherwise check for early substitution against the ranking stored
       at the previous boundary (never in the first window).  If the
       selected model is already ranked last, a warning is recorded once
       per window instead of an event.
    """

    def __init__(
        self,
        candidates: CandidateSet,
        predictors: Mapping[str, Any],
        prop: NonFunctionalProperty,
        config: EngineConfig,
        reinit: str = MEMORY,
    ):
        if reinit not in (MEMORY, RESET):
            raise UsageError(f"reinit must be {MEMORY!r} or {RESET!r}, got {reinit!r}")
        missing = [mid for mid in candidates.ids if mid not in predictors]
        if missing:
            raise UsageError(f"no predictor supplied for models {missing}")
        self.candidates = candidates
        self.predictors = predictors
        self.prop = prop
        self.config = config
        self.reinit = reinit
        self.rng = np.random.default_rng(config.seed)
        self.window = WindowState()
        self.tracker = AssuranceTracker()
        self.stored_ranking: Ranking | None = None
        self.rankings: dict[int, Ranking] = {}
        self.observations = ObservationLog()
        self.trace_records: list[TraceRecord] = []
        self.window_records: list[WindowRecord] = []
        self.events: list[SubstitutionEvent] = []
        self.warnings: list[str] = []
        self.traces_seen = 0
        self._last_estimate: WinnerEstimate | None = None
        self._warned_exhausted_window = -1
        self._finished = False

    def current_ranking(self) -> Ranking:
        """Live ranking of the pool by posterior mean."""
        return compute_ranking(self.candidates, self.window.index)

    def step(self, trace: ExecutionTrace) -> StepResult:
        if self._finished:
            raise UsageError("engine already finished; no further traces accepted")
        cfg = self.config
        t = self.traces_seen + 1
        self.traces_seen = t
        self.window.size += 1
        selected = self.candidates.selected

        pulled = thompson_select(self.candidates, self.rng)
        try:
            score = self.prop.scorer(trace, self.predictors[pulled])
        except ScorerError as exc:
            raise ScorerError(f"trace {t}: {exc}", probe=exc.probe) from exc
        success = apply_score(self.candidates, pulled, score, self.prop)
        self.observations.append(ObservationEntry(trace=t, pulled=pulled, score=score, success=success))

        matrix, estimate = monte_carlo(self.candidates, cfg.mc_draws, self.rng)
        self._last_estimate = estimate
        samples = regret_samples(matrix, estimate.best)
        value_remaining = nearest_rank_percentile(samples, cfg.percentile_level)
        assurance = assurance_level(self.candidates.state(selected), matrix.column_max)
        degradation = update_degradation(self.tracker, assurance)

        record = TraceRecord(
            trace=t,
            window=self.window.index,
            pulled=pulled,
            score=score,
            success=success,
            selected=selected,
            assurance=assurance,
            degradation=degradation,
            value_remaining=value_remaining,
        )
        self.trace_records.append(record)

        closed = None
        if self.window.size > cfg.burn_in and should_terminate(
            samples, estimate.best_mean, cfg.residual, cfg.percentile_level
        ):
            closed = self._close(t, estimate)
        else:
            outcome = check_early_substitution(
                self.tracker,
                self.stored_ranking,
                self.candidates,
                cfg.degradation_threshold,
                self.window.index,
                t,
                cfg.max_early_substitutions,
            )
            if outcome.event is not None:
                self.events.append(outcome.event)
            if outcome.warning is not None and self._warned_exhausted_window != self.window.index:
                self.warnings.append(outcome.warning)
                self._warned_exhausted_window = self.window.index
        return StepResult(record=record, closed=closed)

    def _close(self, trace: int, estimate: WinnerEstimate) -> WindowRecord:
        ranking = compute_ranking(self.candidates, self.window.index)
        event = end_of_window_substitute(ranking, self.candidates, trace)
        if event is not None:
            self.events.append(event)
        record = WindowRecord(
            index=self.window.index,
            start=self.window.start,
            end=trace,
            size=self.window.size,
            closed=True,
            ranking=ranking.ids,
            probabilities=tuple(float(p) for p in estimate.probabilities),
            alphas=tuple(float(a) for a in self.candidates.alphas),
            betas=tuple(float(b) for b in self.candidates.betas),
        )
        self.window_records.append(record)
        self.rankings[self.window.index] = ranking
        if self.reinit == MEMORY:
            close_window(self.candidates, self.config.memory)
        else:
            reset_window(self.candidates)
        self.stored_ranking = ranking
        self.tracker.new_window()
        self.window = WindowState(index=self.window.index + 1, start=trace + 1, size=0, open=True)
        return record

    def finish(self) -> None:
        """Snapshot a trailing, still-open window (if it saw any traces)."""
        if self._finished:
            return
        self._finished = True
        if self.window.size == 0:
            return
        estimate = self._last_estimate
        self.window_records.append(
            WindowRecord(
                index=self.window.index,
                start=self.window.start,
                end=self.traces_seen,
                size=self.window.size,
                closed=False,
                ranking=self.current_ranking().ids,
                probabilities=tuple(float(p) for p in estimate.probabilities)
                if estimate is not None
                else (),
                alphas=tuple(float(a) for a in self.candidates.alphas),
                betas=tuple(float(b) for b in self.candidates.betas),
            )
        )

    def run(self, traces: Iterable[ExecutionTrace]) -> "Engine":
        """Convenience: step every trace, then finish."""
        for trace in traces:
            self.step(trace)
        self.finish()
        return self
