"""Ranking, end-of-window substitution, assurance, and early substitution."""

import numpy as np
import pytest

from bandwatch.bandit import BetaState, CandidateSet
from bandwatch.domain import EARLY, END_OF_WINDOW, SingularityError, UsageError
from bandwatch.harness import classify_early_substitutions
from bandwatch.substitution import (
    AssuranceTracker,
    Ranking,
    assurance_level,
    check_early_substitution,
    compute_ranking,
    end_of_window_substitute,
    ranking_metric,
    update_degradation,
)


def pool_with(alphas, betas, selected="m1"):
    ids = tuple(f"m{i + 1}" for i in range(len(alphas)))
    return CandidateSet(ids, np.array(alphas, float), np.array(betas, float), selected)


# --- ranking ----------------------------------------------------------------


def test_ranking_metric_is_the_posterior_mean():
    assert abs(ranking_metric(110.0, 2.0) - 110.0 / 112.0) < 1e-12


def test_compute_ranking_orders_by_metric_descending():
    pool = pool_with([9.0, 1.0, 5.0], [1.0, 9.0, 5.0])
    ranking = compute_ranking(pool, window=3)
    assert ranking.ids == ("m1", "m3", "m2")
    assert ranking.window == 3
    assert ranking.entries[0] == ("m1", 0.9)


def test_compute_ranking_ties_keep_pool_order():
    pool = pool_with([2.0, 4.0, 2.0], [2.0, 4.0, 2.0])  # all means 0.5
    assert compute_ranking(pool, window=0).ids == ("m1", "m2", "m3")


def test_ranking_position_and_walk_down():
    ranking = Ranking(entries=(("a", 0.9), ("b", 0.5), ("c", 0.1)), window=0)
    assert ranking.position("b") == 2
    assert ranking.next_below("a") == "b"
    assert ranking.next_below("b") == "c"
    assert ranking.next_below("c") is None
    with pytest.raises(UsageError, match="does not appear"):
        ranking.position("zz")


# --- end-of-window substitution ----------------------------------------------


def test_substitute_fires_only_on_change():
    pool = pool_with([1.0, 9.0], [9.0, 1.0], selected="m1")
    ranking = compute_ranking(pool, window=0)
    event = end_of_window_substitute(ranking, pool, trace=60)
    assert event is not None
    assert (event.kind, event.from_model, event.to_model) == (END_OF_WINDOW, "m1", "m2")
    assert pool.selected == "m2"

    # already on top: no event
    assert end_of_window_substitute(compute_ranking(pool, 1), pool, trace=120) is None


# --- assurance and degradation ----------------------------------------------


def test_assurance_level_is_mean_over_column_optimum():
    state = BetaState(3.0, 1.0)  # mean 0.75
    colmax = np.array([1.0, 0.5])  # mean 0.75
    assert assurance_level(state, colmax) == 1.0


def test_assurance_level_rejects_zero_optimum():
    with pytest.raises(SingularityError):
        assurance_level(BetaState(1.0, 1.0), np.zeros(4))


def test_degradation_is_one_minus_running_mean():
    tracker = AssuranceTracker()
    assert update_degradation(tracker, 1.0) == 0.0
    second = update_degradation(tracker, 0.9)
    assert second == 1.0 - (1.0 + 0.9) / 2.0
    assert second == pytest.approx(0.05, abs=1e-15)


def test_degradation_can_go_negative():
    tracker = AssuranceTracker()
    assert update_degradation(tracker, 1.2) < 0.0


# --- early substitution -----------------------------------------------------


def stored_ranking():
    return Ranking(entries=(("m1", 0.9), ("m2", 0.5), ("m3", 0.2)), window=0)


def tracker_at(assurance, count=1):
    tracker = AssuranceTracker()
    for _ in range(count):
        update_degradation(tracker, assurance)
    return tracker


def test_early_substitution_fires_above_threshold():
    pool = pool_with([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], selected="m1")
    tracker = tracker_at(0.5)  # degradation exactly 0.5
    outcome = check_early_substitution(
        tracker, stored_ranking(), pool, threshold=0.4, window=1, trace=75,
        max_substitutions=1,
    )
    event = outcome.event
    assert event is not None
    assert (event.kind, event.from_model, event.to_model) == (EARLY, "m1", "m2")
    assert event.degradation == 0.5
    assert pool.selected == "m2"
    # firing resets the running mean and burns budget
    assert tracker.count == 0 and tracker.substitutions == 1


def test_early_substitution_threshold_is_strict():
    # degradation == threshold must NOT fire; 1 - 0.5 == 0.5 exactly.
    pool = pool_with([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], selected="m1")
    outcome = check_early_substitution(
        tracker_at(0.5), stored_ranking(), pool, threshold=0.5, window=1, trace=75,
        max_substitutions=1,
    )
    assert outcome.event is None and outcome.warning is None
    assert pool.selected == "m1"


def test_early_substitution_needs_history_and_a_ranking():
    pool = pool_with([1.0], [1.0])
    fresh = AssuranceTracker()
    assert check_early_substitution(
        fresh, stored_ranking(), pool, 0.1, 1, 10, 1
    ).event is None  # no assurance yet
    assert check_early_substitution(
        tracker_at(0.0), None, pool, 0.1, 0, 10, 1
    ).event is None  # first window: nothing stored


def test_early_substitution_respects_budget():
    pool = pool_with([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], selected="m1")
    tracker = tracker_at(0.0)
    first = check_early_substitution(tracker, stored_ranking(), pool, 0.1, 1, 10, 1)
    assert first.event is not None
    update_degradation(tracker, 0.0)  # degrade again
    second = check_early_substitution(tracker, stored_ranking(), pool, 0.1, 1, 20, 1)
    assert second.event is None  # budget of one is spent
    assert pool.selected == "m2"


def test_early_substitution_walks_down_the_stored_ranking():
    pool = pool_with([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], selected="m1")
    tracker = tracker_at(0.0)
    check_early_substitution(tracker, stored_ranking(), pool, 0.1, 1, 10, 5)
    update_degradation(tracker, 0.0)
    check_early_substitution(tracker, stored_ranking(), pool, 0.1, 1, 20, 5)
    assert pool.selected == "m3"
    update_degradation(tracker, 0.0)
    outcome = check_early_substitution(tracker, stored_ranking(), pool, 0.1, 1, 30, 5)
    assert outcome.event is None
    assert "ranked last" in outcome.warning
    assert pool.selected == "m3"


def test_tracker_new_window_clears_budget():
    tracker = tracker_at(0.0)
    tracker.substitutions = 3
    tracker.new_window()
    assert tracker.substitutions == 0 and tracker.count == 0


# --- judging early calls at window close -------------------------------------


def event(window, frm, to):
    from bandwatch.domain import SubstitutionEvent

    return SubstitutionEvent(
        kind=EARLY, window=window, trace=10, from_model=frm, to_model=to, degradation=0.2
    )


def test_classification_tallies():
    rankings = {
        0: Ranking(entries=(("b", 0.9), ("a", 0.1)), window=0),
        1: Ranking(entries=(("a", 0.9), ("b", 0.1)), window=1),
    }
    events = [
        event(0, "a", "b"),  # relevant and successful: removed a, installed the top
        event(1, "a", "b"),  # irrelevant: a still finished on top
        event(0, "a", "c"),  # relevant but unsuccessful: installed the wrong model
    ]
    result = classify_early_substitutions(events, rankings)
    assert (result.total, result.relevant, result.success) == (3, 2, 1)


def test_classification_ignores_boundary_events():
    from bandwatch.domain import SubstitutionEvent

    boundary = SubstitutionEvent(
        kind=END_OF_WINDOW, window=0, trace=50, from_model="a", to_model="b"
    )
    result = classify_early_substitutions(
        [boundary], {0: Ranking(entries=(("b", 0.9), ("a", 0.1)), window=0)}
    )
    assert result.total == 0


def test_classification_requires_a_closed_window():
    with pytest.raises(UsageError, match="never closed"):
        classify_early_substitutions([event(7, "a", "b")], {})
