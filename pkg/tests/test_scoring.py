"""The fairness-as-variance scorer and protected-group expansion."""

import pytest

from bandwatch.domain import ExecutionTrace, FeatureSchema, ScorerError, UsageError
from bandwatch.scoring import (
    calibrate_threshold,
    expand_protected_groups,
    fairness_variance_score,
    make_scorer,
)


@pytest.fixture
def two_group_schema():
    return FeatureSchema(
        features=("x", "group"), target="pred", protected={"group": ("a", "b")}
    )


def trace(**features):
    return ExecutionTrace(features=features, prediction=0.0)


# --- probe expansion --------------------------------------------------------


def test_expansion_covers_each_group_once(two_group_schema):
    probes = expand_protected_groups(trace(x=1.0, group="b"), two_group_schema)
    assert probes == [{"x": 1.0, "group": "a"}, {"x": 1.0, "group": "b"}]


def test_expansion_without_protected_attributes_is_identity():
    schema = FeatureSchema(features=("x",), target="pred")
    probes = expand_protected_groups(trace(x=2.0), schema)
    assert probes == [{"x": 2.0}]


def test_expansion_is_cartesian_over_two_attributes():
    schema = FeatureSchema(
        features=("g", "h"),
        target="pred",
        protected={"g": ("a", "b"), "h": ("u", "v", "w")},
    )
    probes = expand_protected_groups(trace(g="a", h="w"), schema)
    assert len(probes) == 6
    assert probes[0] == {"g": "a", "h": "u"}
    assert probes[-1] == {"g": "b", "h": "w"}
    # the trace's own combination appears exactly once
    assert probes.count({"g": "a", "h": "w"}) == 1


# --- scoring ----------------------------------------------------------------


class FixedBatch:
    """Predictor returning a canned vector, whatever the probes are."""

    def __init__(self, values):
        self.values = values

    def predict_batch(self, probes):
        return self.values[: len(probes)]


class GroupBlind:
    """Scalar-only predictor that ignores the protected attribute."""

    def predict(self, features):
        return 3.0 * features["x"]


class Exploding:
    def predict_batch(self, probes):
        raise RuntimeError("cannot predict")


def test_variance_of_known_predictions(two_group_schema):
    result = fairness_variance_score(
        trace(x=0.0, group="a"), FixedBatch([10.0, 20.0]), two_group_schema
    )
    assert result.value == 25.0  # population variance of [10, 20]
    assert result.probes == 2


def test_group_blind_predictor_scores_zero(two_group_schema):
    result = fairness_variance_score(
        trace(x=7.0, group="b"), GroupBlind(), two_group_schema
    )
    assert result.value == 0.0


def test_scalar_predictors_are_probed_one_at_a_time(two_group_schema):
    calls = []

    class Recording:
        def predict(self, features):
            calls.append(dict(features))
            return 1.0

    fairness_variance_score(trace(x=1.0, group="a"), Recording(), two_group_schema)
    assert calls == [{"x": 1.0, "group": "a"}, {"x": 1.0, "group": "b"}]


def test_predictor_failure_becomes_scorer_error(two_group_schema):
    with pytest.raises(ScorerError, match="probe batch") as excinfo:
        fairness_variance_score(trace(x=1.0, group="a"), Exploding(), two_group_schema)
    assert excinfo.value.probe == {"x": 1.0, "group": "a"}


def test_make_scorer_rejects_unknown_name(two_group_schema):
    with pytest.raises(UsageError, match="unknown scorer"):
        make_scorer("latency", two_group_schema)


def test_make_scorer_binds_schema(two_group_schema):
    scorer = make_scorer("fairness-variance", two_group_schema)
    assert scorer(trace(x=0.0, group="a"), FixedBatch([4.0, 8.0])) == 4.0


# --- threshold calibration --------------------------------------------------


def test_calibrate_threshold_is_the_median():
    assert calibrate_threshold([3.0, 1.0, 2.0]) == 2.0
    assert calibrate_threshold([1.0, 3.0]) == 2.0


def test_calibrate_threshold_rejects_empty():
    with pytest.raises(UsageError):
        calibrate_threshold([])
