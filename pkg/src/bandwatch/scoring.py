"""Property scorers.

The built-in scorer treats fairness as prediction stability across
protected groups: for one trace it rebuilds the feature payload once per
combination of protected-attribute values, asks the model to predict all
of those probes, and reports the population variance of the predictions.
A model that ignores the protected attributes scores exactly zero.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from .domain import (
    ExecutionTrace,
    FeatureSchema,
    FeatureValue,
    Scorer,
    ScorerError,
    UsageError,
)

FAIRNESS_VARIANCE = "fairness-variance"


def expand_protected_groups(
    trace: ExecutionTrace, schema: FeatureSchema
) -> list[dict[str, FeatureValue]]:
    """All feature payloads reachable by varying the protected attributes.

    The cartesian product of the protected domains, in schema order, each
    combination overlaid on a copy of the trace's features.  The trace's
    own combination appears exactly once.  With no protected attributes
    the list is just the original payload.
    """
    names = schema.protected_features
    if not names:
        return [dict(trace.features)]
    probes = []
    for combo in itertools.product(*(schema.protected[n] for n in names)):
        probe = dict(trace.features)
        probe.update(zip(names, combo))
        probes.append(probe)
    return probes


@dataclass(frozen=True)
class ScoreResult:
    """A property score plus how many probes produced it."""

    value: float
    probes: int


def _predict_probes(predictor: Any, probes: list[dict[str, FeatureValue]]) -> list[float]:
    # Batch-aware predictors see all probes of a trace in one call; plain
    # predictors are asked one probe at a time.
    if hasattr(predictor, "predict_batch"):
        try:
            return [float(v) for v in predictor.predict_batch(probes)]
        except Exception as exc:
            raise ScorerError(f"predictor failed on a probe batch: {exc}", probe=probes[0]) from exc
    out = []
    for probe in probes:
        try:
            out.append(float(predictor.predict(probe)))
        except Exception as exc:
            raise ScorerError(f"predictor failed on a probe: {exc}", probe=probe) from exc
    return out


def fairness_variance_score(
    trace: ExecutionTrace, predictor: Any, schema: FeatureSchema
) -> ScoreResult:
    """Population variance of predictions across the protected groups."""
    probes = expand_protected_groups(trace, schema)
    predictions = _predict_probes(predictor, probes)
    return ScoreResult(value=float(np.var(predictions)), probes=len(probes))


def make_scorer(name: str, schema: FeatureSchema) -> Scorer:
    """Resolve a scorer by name, bound to a schema."""
    if name == FAIRNESS_VARIANCE:
        def scorer(trace: ExecutionTrace, predictor: Any) -> float:
            return fairness_variance_score(trace, predictor, schema).value

        return scorer
    raise UsageError(f"unknown scorer {name!r}")


def calibrate_threshold(scores: list[float]) -> float:
    """Default threshold: the median of an initial batch of scores."""
    if not scores:
        raise UsageError("cannot calibrate a threshold from zero scores")
    return float(np.median(scores))
