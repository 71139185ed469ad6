"""Candidate predictors and the pool factory.

Two predictor families ship with the package: a bucketised naive Bayes
regressor (train on logged traces, predict the midpoint of the most
probable prediction bucket) and a synthetic predictor whose probability
of scoring fairly is set explicitly -- the workhorse for calibration
experiments, where ground truth about which model *should* win is needed.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from .bandit import CandidateSet
from .domain import ExecutionTrace, FeatureSchema, FeatureValue, SchemaError, UsageError


class DegenerateBucketError(ValueError):
    """The target column cannot be split into more than one bucket."""


class Predictor(Protocol):
    """Anything that can score a feature payload."""

    def predict(self, features: Mapping[str, FeatureValue]) -> float: ...


def predict(predictor: Predictor, features: Mapping[str, FeatureValue]) -> float:
    """Score one feature payload with a predictor."""
    return float(predictor.predict(features))


def _quantile_edges(values: np.ndarray, buckets: int) -> np.ndarray:
    edges = np.quantile(values, np.linspace(0.0, 1.0, buckets + 1))
    return np.unique(edges)


def _bin_index(edges: np.ndarray, value: float) -> int:
    nbins = max(len(edges) - 1, 1)
    i = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(i, 0), nbins - 1)


@dataclass
class NaiveBayesModel:
    """Naive Bayes over discretised prediction buckets.

    The target column is cut into (at most) ``buckets`` equal-frequency
    buckets; each bucket is a class whose numeric value is the midpoint of
    its edge interval.  Categorical features are counted as-is, numeric
    features are first binned by their own training quantiles.  Additive
    smoothing keeps unseen feature values from zeroing a posterior.
    """

    edges: np.ndarray                      # target bucket edges, ascending
    class_counts: np.ndarray               # training rows per bucket
    feature_order: tuple[str, ...]
    feature_kinds: dict[str, str]          # name -> "categorical" | "numeric"
    feature_edges: dict[str, np.ndarray]   # numeric features only
    tables: dict[str, dict[str, np.ndarray]]  # feature -> token -> counts per class
    smoothing: float
    n: int

    @property
    def classes(self) -> int:
        return max(len(self.edges) - 1, 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0

    def _token(self, name: str, value: FeatureValue) -> str:
        if self.feature_kinds[name] == "numeric":
            if not isinstance(value, float):
                raise SchemaError(f"feature {name!r} was trained numeric, got {value!r}")
            return str(_bin_index(self.feature_edges[name], value))
        return str(value)

    def _log_posteriors(self, features: Mapping[str, FeatureValue]) -> np.ndarray:
        c = self.classes
        s = self.smoothing
        log_post = np.log((self.class_counts + s) / (self.n + s * c))
        for name in self.feature_order:
            if name not in features:
                raise SchemaError(f"feature payload is missing {name!r}")
            table = self.tables[name]
            vocab = len(table)
            counts = table.get(self._token(name, features[name]))
            numer = (counts if counts is not None else 0.0) + s
            log_post = log_post + np.log(numer / (self.class_counts + s * vocab))
        return log_post

    def predict_proba(self, features: Mapping[str, FeatureValue]) -> np.ndarray:
        """Posterior probability per prediction bucket (sums to one)."""
        log_post = self._log_posteriors(features)
        shifted = np.exp(log_post - log_post.max())
        return shifted / shifted.sum()

    def predict(self, features: Mapping[str, FeatureValue]) -> float:
        """Midpoint of the most probable bucket; ties go to the lowest bucket."""
        log_post = self._log_posteriors(features)
        return float(self.midpoints[int(np.argmax(log_post))])

    def to_json(self) -> str:
        payload = {
            "edges": self.edges.tolist(),
            "class_counts": self.class_counts.tolist(),
            "feature_order": list(self.feature_order),
            "feature_kinds": self.feature_kinds,
            "feature_edges": {k: v.tolist() for k, v in self.feature_edges.items()},
            "tables": {
                name: {token: counts.tolist() for token, counts in table.items()}
                for name, table in self.tables.items()
            },
            "smoothing": self.smoothing,
            "n": self.n,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NaiveBayesModel":
        raw = json.loads(text)
        return cls(
            edges=np.asarray(raw["edges"], dtype=np.float64),
            class_counts=np.asarray(raw["class_counts"], dtype=np.float64),
            feature_order=tuple(raw["feature_order"]),
            feature_kinds=dict(raw["feature_kinds"]),
            feature_edges={k: np.asarray(v, dtype=np.float64) for k, v in raw["feature_edges"].items()},
            tables={
                name: {token: np.asarray(counts, dtype=np.float64) for token, counts in table.items()}
                for name, table in raw["tables"].items()
            },
            smoothing=float(raw["smoothing"]),
            n=int(raw["n"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NaiveBayesModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def train_naive_bayes(
    rows: Sequence[ExecutionTrace],
    schema: FeatureSchema,
    buckets: int = 10,
    smoothing: float = 1.0,
) -> NaiveBayesModel:
    """Fit the bucketised naive Bayes model on logged rows.

    Each row's ``prediction`` field holds the observed target value.  The
    requested bucket count is an upper bound: duplicate quantile edges
    collapse.  A single-valued target cannot form buckets at all.
    """
    if not rows:
        raise UsageError("training needs at least one row")
    if buckets < 1:
        raise UsageError(f"bucket count must be at least 1, got {buckets}")
    if smoothing <= 0.0:
        raise UsageError(f"smoothing must be positive, got {smoothing}")

    targets = np.asarray([r.prediction for r in rows], dtype=np.float64)
    edges = _quantile_edges(targets, buckets)
    if len(edges) < 2:
        raise DegenerateBucketError("target column has a single value; no buckets to form")
    classes = len(edges) - 1
    labels = np.asarray([_bin_index(edges, t) for t in targets], dtype=np.int64)

    feature_kinds: dict[str, str] = {}
    feature_edges: dict[str, np.ndarray] = {}
    for name in schema.features:
        column = [r.features[name] for r in rows]
        if all(isinstance(v, float) for v in column):
            feature_kinds[name] = "numeric"
            feature_edges[name] = _quantile_edges(np.asarray(column, dtype=np.float64), buckets)
        else:
            feature_kinds[name] = "categorical"

    tables: dict[str, dict[str, np.ndarray]] = {name: {} for name in schema.features}
    for row, label in zip(rows, labels):
        for name in schema.features:
            value = row.features[name]
            if feature_kinds[name] == "numeric":
                token = str(_bin_index(feature_edges[name], float(value)))
            else:
                token = str(value)
            counts = tables[name].setdefault(token, np.zeros(classes))
            counts[label] += 1.0

    class_counts = np.bincount(labels, minlength=classes).astype(np.float64)
    return NaiveBayesModel(
        edges=edges,
        class_counts=class_counts,
        feature_order=tuple(schema.features),
        feature_kinds=feature_kinds,
        feature_edges=feature_edges,
        tables=tables,
        smoothing=smoothing,
        n=len(rows),
    )


@dataclass
class SyntheticPredictor:
    """A predictor with a dialled-in probability of scoring fairly.

    Each scoring call (one batch of probes for one trace) flips one coin.
    On success every probe gets the same value, so a variance scorer sees
    exactly zero; on failure the probes are spread apart deterministically.
    The scalar ``predict`` path always returns the base value.
    """

    success_probability: float
    rng: np.random.Generator = field(repr=False)
    base: float = 100.0
    spread: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.success_probability <= 1.0:
            raise UsageError(
                f"success probability must lie in [0, 1], got {self.success_probability}"
            )

    def set_success_probability(self, p: float) -> None:
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"success probability must lie in [0, 1], got {p}")
        self.success_probability = p

    def predict(self, features: Mapping[str, FeatureValue]) -> float:
        return self.base

    def predict_batch(self, rows: Sequence[Mapping[str, FeatureValue]]) -> list[float]:
        if float(self.rng.random()) < self.success_probability:
            return [self.base] * len(rows)
        return [self.base + self.spread * i for i in range(len(rows))]


def make_candidate_pool(
    specs: Sequence[Mapping[str, Any]],
    rng: np.random.Generator,
    initial: str | None = None,
) -> tuple[CandidateSet, dict[str, Any]]:
    """Build a fresh candidate set plus its predictors from declarations.

    Each spec needs ``id`` and ``kind``.  Synthetic specs take ``p`` (the
    success probability) and optional ``base``/``spread``; naive-bayes
    specs take either a ``path`` to a saved model or an inline ``model``.
    Every spec receives its own child RNG stream (spawned in order), so a
    pool rebuilt from the same parent seed behaves identically.
    """
    if not specs:
        raise UsageError("model pool cannot be empty")
    children = rng.spawn(len(specs))
    ids: list[str] = []
    predictors: dict[str, Any] = {}
    for spec, child in zip(specs, children):
        try:
            mid = str(spec["id"])
            kind = str(spec["kind"])
        except KeyError as exc:
            raise UsageError(f"model spec is missing key {exc.args[0]!r}") from None
        if mid in predictors:
            raise UsageError(f"duplicate model id {mid!r}")
        if kind == "synthetic":
            if "p" not in spec:
                raise UsageError(f"synthetic model {mid!r} needs a success probability 'p'")
            predictors[mid] = SyntheticPredictor(
                success_probability=float(spec["p"]),
                rng=child,
                base=float(spec.get("base", 100.0)),
                spread=float(spec.get("spread", 10.0)),
            )
        elif kind == "naive-bayes":
            if "model" in spec:
                predictors[mid] = spec["model"]
            elif "path" in spec:
                predictors[mid] = NaiveBayesModel.load(spec["path"])
            else:
                raise UsageError(f"naive-bayes model {mid!r} needs 'path' or 'model'")
        else:
            raise UsageError(f"unknown model kind {kind!r}")
        ids.append(mid)
    return CandidateSet.fresh(ids, selected=initial), predictors
