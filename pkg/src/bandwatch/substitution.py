"""Model ranking and the two substitution mechanisms.

At every window boundary the pool is ranked by posterior mean and the
top model goes into production.  Between boundaries an assurance tracker
watches how far the selected model's posterior mean falls below the pool's
Monte Carlo optimum; when the cumulative shortfall (degradation) exceeds a
threshold, the selected model is swapped early for the next one down in
the ranking stored at the last boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bandit import BetaState, CandidateSet
from .domain import EARLY, END_OF_WINDOW, SingularityError, SubstitutionEvent, UsageError


def ranking_metric(alpha: float, beta: float) -> float:
    """Posterior mean alpha / (alpha + beta), the quantity models are ranked by."""
    return alpha / (alpha + beta)


@dataclass(frozen=True)
class Ranking:
    """Pool order by descending ranking metric at one window boundary.

    ``entries`` pairs model ids with their metric values; ties keep pool
    order.  ``window`` is the index of the window the ranking closed.
    """

    entries: tuple[tuple[str, float], ...]
    window: int

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(mid for mid, _ in self.entries)

    def position(self, model_id: str) -> int:
        """1-based rank of ``model_id``; unknown ids are a usage error."""
        for i, (mid, _) in enumerate(self.entries):
            if mid == model_id:
                return i + 1
        raise UsageError(f"model {model_id!r} does not appear in the ranking")

    def next_below(self, model_id: str) -> str | None:
        """The model ranked directly below ``model_id``, or None at the bottom."""
        pos = self.position(model_id)
        if pos >= len(self.entries):
            return None
        return self.entries[pos][0]


def compute_ranking(candidates: CandidateSet, window: int) -> Ranking:
    """Rank the pool by posterior mean, descending, ties in pool order."""
    metrics = candidates.posterior_means()
    order = np.argsort(-metrics, kind="stable")
    entries = tuple((candidates.ids[i], float(metrics[i])) for i in order)
    return Ranking(entries=entries, window=window)


def end_of_window_substitute(
    ranking: Ranking, candidates: CandidateSet, trace: int
) -> SubstitutionEvent | None:
    """Put the top-ranked model into production.

    Emits an event only when the selection actually changes; the candidate
    set's ``selected`` field is updated in place.
    """
    top = ranking.entries[0][0]
    if top == candidates.selected:
        return None
    event = SubstitutionEvent(
        kind=END_OF_WINDOW,
        window=ranking.window,
        trace=trace,
        from_model=candidates.selected,
        to_model=top,
    )
    candidates.selected = top
    return event


def assurance_level(state: BetaState, column_max: np.ndarray) -> float:
    """Selected model's posterior mean over the Monte Carlo optimum.

    The denominator is the mean over draw columns of the column-wise
    maximum -- the expected value of always playing the per-draw best
    model.  Values near 1 mean the selected model still tracks the pool
    optimum; a ratio can exceed 1 when sampling noise favours it.
    """
    denom = float(column_max.mean())
    if denom <= 1e-12:
        raise SingularityError("Monte Carlo optimum is numerically zero")
    return state.mean / denom


@dataclass
class AssuranceTracker:
    """Running mean of assurance levels within the current window.

    ``substitutions`` counts early substitutions fired in the window; it
    survives ``reset`` (which only restarts the running mean after a
    substitution) and is cleared by ``new_window``.
    """

    cumulative: float = 0.0
    count: int = 0
    substitutions: int = 0

    def reset(self) -> None:
        self.cumulative = 0.0
        self.count = 0

    def new_window(self) -> None:
        self.reset()
        self.substitutions = 0


def update_degradation(tracker: AssuranceTracker, assurance: float) -> float:
    """Fold one assurance level into the tracker; returns the degradation.

    Degradation is one minus the running mean of assurance levels.  It can
    be negative when assurance exceeds 1.
    """
    tracker.cumulative += assurance
    tracker.count += 1
    return 1.0 - tracker.cumulative / tracker.count


@dataclass(frozen=True)
class EarlyCheckOutcome:
    """Result of one early-substitution check."""

    event: SubstitutionEvent | None = None
    warning: str | None = None


def check_early_substitution(
    tracker: AssuranceTracker,
    ranking: Ranking | None,
    candidates: CandidateSet,
    threshold: float,
    window: int,
    trace: int,
    max_substitutions: int,
) -> EarlyCheckOutcome:
    """Fire an early substitution if degradation strictly exceeds the threshold.

    Requires a stored ranking from a previous window boundary and at least
    one tracked assurance level; otherwise nothing can fire.  The
    replacement is the model ranked directly below the selected one in the
    stored ranking; if the selected model is already last, a warning is
    returned instead of an event.  On substitution the tracker's running
    mean resets and its per-window substitution count increments.
    """
    if ranking is None or tracker.count < 1:
        return EarlyCheckOutcome()
    degradation = 1.0 - tracker.cumulative / tracker.count
    if not degradation > threshold:
        return EarlyCheckOutcome()
    if tracker.substitutions >= max_substitutions:
        return EarlyCheckOutcome()
    replacement = ranking.next_below(candidates.selected)
    if replacement is None:
        return EarlyCheckOutcome(
            warning=(
                f"trace {trace}: degradation {degradation:.4f} exceeds {threshold}"
                f" but {candidates.selected!r} is ranked last; no substitute available"
            )
        )
    event = SubstitutionEvent(
        kind=EARLY,
        window=window,
        trace=trace,
        from_model=candidates.selected,
        to_model=replacement,
        degradation=degradation,
    )
    candidates.selected = replacement
    tracker.reset()
    tracker.substitutions += 1
    return EarlyCheckOutcome(event=event)
