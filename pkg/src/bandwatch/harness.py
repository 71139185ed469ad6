"""Experiment harness: dual-track runs, quality metrics, report files.

``run_experiment`` drives two engines over the same stream with the same
seed: the configured one and a from-scratch baseline.  The baseline's
live ranking prices each trace's disagreement -- how far down the
baseline ranking the variant's current leader sits -- through a logistic
penalty, yielding the per-trace and cumulative residual error columns of
the report.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .domain import (
    EARLY,
    END_OF_WINDOW,
    DomainError,
    EngineConfig,
    ExecutionTrace,
    FeatureSchema,
    NonFunctionalProperty,
    ObservationLog,
    SubstitutionEvent,
    UsageError,
    schema_from_mapping,
)
from .models import make_candidate_pool
from .scoring import FAIRNESS_VARIANCE, calibrate_threshold, make_scorer
from .substitution import Ranking
from .window import MEMORY, RESET, Engine, WindowRecord


@dataclass(frozen=True)
class PenaltyParams:
    """Shape of the logistic penalty: 1 / (1 + exp(-steepness * (x - midpoint)))."""

    steepness: float = 10.0
    midpoint: float = 0.5

    def __post_init__(self) -> None:
        if self.steepness <= 0.0:
            raise UsageError(f"penalty steepness must be positive, got {self.steepness}")


DEFAULT_PENALTY = PenaltyParams()


def penalty(x: float, params: PenaltyParams = DEFAULT_PENALTY) -> float:
    """Logistic penalty of a normalised disagreement ``x`` in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"penalty input must lie in [0, 1], got {x}")
    return 1.0 / (1.0 + math.exp(-params.steepness * (x - params.midpoint)))


def residual_error(
    baseline: Ranking, variant_top: str, params: PenaltyParams = DEFAULT_PENALTY
) -> float:
    """Penalty for where the variant's leader sits in the baseline ranking.

    With the leader at 1-based position R among k models the penalty input
    is (R - 1) / (k - 1): zero when the rankings agree on the top model,
    one when the variant's leader is the baseline's worst.
    """
    k = len(baseline.entries)
    if k < 2:
        raise UsageError("residual error needs at least two ranked models")
    position = baseline.position(variant_top)
    return penalty((position - 1) / (k - 1), params)


@dataclass(frozen=True)
class EarlyClassification:
    """Outcome tallies for early substitutions, judged at window close.

    An early substitution is *relevant* if the model it removed was indeed
    not the window's final top model, and a relevant one is *successful*
    if the model it installed turned out to be exactly that top model.
    """

    total: int
    relevant: int
    success: int


def classify_early_substitutions(
    events: Iterable[SubstitutionEvent], final_rankings: Mapping[int, Ranking]
) -> EarlyClassification:
    """Judge early events against the final ranking of their window.

    ``final_rankings`` maps window index to the ranking computed when that
    window closed; an early event whose window is missing (window never
    closed) is a usage error -- filter those out first.
    """
    total = relevant = success = 0
    for event in events:
        if event.kind != EARLY:
            continue
        ranking = final_rankings.get(event.window)
        if ranking is None:
            raise UsageError(
                f"early event at trace {event.trace} belongs to window {event.window},"
                " which never closed"
            )
        total += 1
        top = ranking.entries[0][0]
        if event.from_model != top:
            relevant += 1
            if event.to_model == top:
                success += 1
    return EarlyClassification(total=total, relevant=relevant, success=success)


@dataclass(frozen=True)
class DriftSpec:
    """Flip one synthetic model's success probability at a trace index."""

    model: str
    at_trace: int
    success_probability: float

    def __post_init__(self) -> None:
        if self.at_trace < 1:
            raise UsageError(f"drift trace index must be >= 1, got {self.at_trace}")
        if not 0.0 <= self.success_probability <= 1.0:
            raise UsageError(
                f"drift probability must lie in [0, 1], got {self.success_probability}"
            )


def synthetic_schema() -> FeatureSchema:
    """The schema used by generated streams: one numeric, one protected feature."""
    return FeatureSchema(features=("x", "group"), target="pred", protected={"group": ("a", "b")})


def synthetic_stream(
    n: int, seed: int, schema: FeatureSchema | None = None
) -> list[ExecutionTrace]:
    """Generate ``n`` random traces for the synthetic schema.

    Synthetic predictors ignore the payloads, so the content only matters
    for schema round-trips; it is still fully determined by ``seed``.
    """
    if n < 1:
        raise UsageError(f"stream length must be at least 1, got {n}")
    schema = schema or synthetic_schema()
    rng = np.random.default_rng(seed)
    traces = []
    for _ in range(n):
        features: dict[str, Any] = {}
        for name in schema.features:
            if name in schema.protected:
                domain = schema.protected[name]
                features[name] = domain[int(rng.integers(len(domain)))]
            else:
                features[name] = float(rng.uniform(0.0, 100.0))
        traces.append(ExecutionTrace(features=features, prediction=float(rng.normal(100.0, 10.0))))
    return traces


TRACE_HEADER = (
    "trace,window,pulled,score,success,selected,assurance,degradation,"
    "value_remaining,residual_error,cumulative_residual_error"
)


@dataclass
class ExperimentReport:
    """Everything a dual-track run produced, plus writers."""

    config: EngineConfig
    model_ids: tuple[str, ...]
    scorer_name: str
    threshold: float
    trace_rows: list[tuple]
    window_rows: list[WindowRecord]
    events: list[SubstitutionEvent]
    observations: ObservationLog
    warnings: list[str]
    classification: EarlyClassification
    pending_early: int
    early_durations: list[dict[str, int]]
    cumulative_residual_error: float

    def summary(self) -> dict[str, Any]:
        closed = [w for w in self.window_rows if w.closed]
        open_tail = [w for w in self.window_rows if not w.closed]
        return {
            "traces": len(self.trace_rows),
            "models": list(self.model_ids),
            "config": {
                "seed": self.config.seed,
                "memory": self.config.memory,
                "residual": self.config.residual,
                "thr": self.config.degradation_threshold,
                "burn_in": self.config.burn_in,
                "g": self.config.mc_draws,
                "percentile_level": self.config.percentile_level,
                "max_early_substitutions": self.config.max_early_substitutions,
            },
            "property": {"name": self.scorer_name, "threshold": self.threshold},
            "windows": {
                "closed": len(closed),
                "mean_size": (sum(w.size for w in closed) / len(closed)) if closed else None,
                "open_tail_size": open_tail[0].size if open_tail else 0,
            },
            "substitutions": {
                "end_of_window": sum(1 for e in self.events if e.kind == END_OF_WINDOW),
                "early": sum(1 for e in self.events if e.kind == EARLY),
            },
            "early_classification": {
                "total": self.classification.total,
                "relevant": self.classification.relevant,
                "success": self.classification.success,
                "pending": self.pending_early,
            },
            "early_durations": self.early_durations,
            "cumulative_residual_error": self.cumulative_residual_error,
            "warnings": list(self.warnings),
        }

    def write(self, outdir: str | Path) -> None:
        """Write the report files: two CSV tables, two JSONL logs, one summary."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)

        with open(out / "per_trace.csv", "w", encoding="utf-8") as fh:
            fh.write(TRACE_HEADER + "\n")
            for row in self.trace_rows:
                fh.write(",".join(str(v) for v in row) + "\n")

        ids = self.model_ids
        header = ["index", "start", "end", "size", "closed", "ranking"]
        header += [f"prob_{m}" for m in ids] + [f"alpha_{m}" for m in ids] + [f"beta_{m}" for m in ids]
        with open(out / "per_window.csv", "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for w in self.window_rows:
                probs = w.probabilities if w.probabilities else (float("nan"),) * len(ids)
                cells = [w.index, w.start, w.end, w.size, w.closed, "|".join(w.ranking)]
                cells += list(probs) + list(w.alphas) + list(w.betas)
                fh.write(",".join(str(v) for v in cells) + "\n")

        with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
            for event in self.events:
                fh.write(event.to_json() + "\n")
        self.observations.write(out / "observations.jsonl")
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def resolve_threshold(
    model_specs: Sequence[Mapping[str, Any]],
    stream: Sequence[ExecutionTrace],
    schema: FeatureSchema,
    config: EngineConfig,
    scorer_name: str,
    threshold: float | None,
    initial: str | None,
) -> tuple[float, list[str]]:
    """Return the property threshold, calibrating it if unset.

    Calibration scores the first ``burn_in`` traces of the stream with the
    initially selected model (a throwaway pool built from the run seed)
    and takes the median.
    """
    if threshold is not None:
        return float(threshold), []
    scorer = make_scorer(scorer_name, schema)
    pool, predictors = make_candidate_pool(model_specs, np.random.default_rng(config.seed), initial)
    scores = [scorer(trace, predictors[pool.selected]) for trace in stream[: config.burn_in]]
    value = calibrate_threshold(scores)
    warnings = []
    if value <= 0.0:
        warnings.append(
            f"calibrated threshold is {value}; no score can fall strictly below it"
        )
    return value, warnings


def run_experiment(
    model_specs: Sequence[Mapping[str, Any]],
    stream: Sequence[ExecutionTrace],
    schema: FeatureSchema,
    config: EngineConfig,
    *,
    scorer_name: str = FAIRNESS_VARIANCE,
    threshold: float | None = None,
    drifts: Sequence[DriftSpec] = (),
    initial: str | None = None,
    penalty_params: PenaltyParams = DEFAULT_PENALTY,
) -> ExperimentReport:
    """Run the configured engine against its from-scratch twin.

    Both engines share the seed, the stream, and (behaviourally identical)
    predictor pools, so any divergence is attributable to the memory
    setting alone.  Drift flips are applied to both pools at the same
    trace indices.  Returns the variant's full report; the baseline only
    contributes the residual-error columns.
    """
    stream = list(stream)
    if not stream:
        raise UsageError("experiment needs a non-empty stream")

    threshold_value, warnings = resolve_threshold(
        model_specs, stream, schema, config, scorer_name, threshold, initial
    )
    scorer = make_scorer(scorer_name, schema)
    prop = NonFunctionalProperty(name=scorer_name, scorer=scorer, threshold=threshold_value)

    variant_pool, variant_predictors = make_candidate_pool(
        model_specs, np.random.default_rng(config.seed), initial
    )
    baseline_pool, baseline_predictors = make_candidate_pool(
        model_specs, np.random.default_rng(config.seed), initial
    )
    for drift in drifts:
        predictor = variant_predictors.get(drift.model)
        if predictor is None:
            raise UsageError(f"drift names unknown model {drift.model!r}")
        if not hasattr(predictor, "set_success_probability"):
            raise UsageError(f"model {drift.model!r} does not support drift injection")
    drift_map: dict[int, list[DriftSpec]] = {}
    for drift in drifts:
        drift_map.setdefault(drift.at_trace, []).append(drift)

    variant = Engine(variant_pool, variant_predictors, prop, config, reinit=MEMORY)
    baseline = Engine(baseline_pool, baseline_predictors, prop, config, reinit=RESET)

    k = variant_pool.k
    trace_rows: list[tuple] = []
    cumulative = 0.0
    for t, trace in enumerate(stream, start=1):
        for drift in drift_map.get(t, ()):
            variant_predictors[drift.model].set_success_probability(drift.success_probability)
            baseline_predictors[drift.model].set_success_probability(drift.success_probability)
        baseline.step(trace)
        result = variant.step(trace)
        if k >= 2:
            xi = residual_error(
                baseline.current_ranking(), variant.current_ranking().entries[0][0], penalty_params
            )
        else:
            xi = penalty(0.0, penalty_params)
        cumulative += xi
        trace_rows.append((*result.record, xi, cumulative))
    variant.finish()
    baseline.finish()

    window_ends = {w.index: w.end for w in variant.window_records if w.closed}
    closed_early = [e for e in variant.events if e.kind == EARLY and e.window in variant.rankings]
    pending_early = sum(
        1 for e in variant.events if e.kind == EARLY and e.window not in variant.rankings
    )
    classification = classify_early_substitutions(closed_early, variant.rankings)
    durations = [
        {"window": e.window, "trace": e.trace, "duration": window_ends[e.window] - e.trace}
        for e in closed_early
    ]

    return ExperimentReport(
        config=config,
        model_ids=variant_pool.ids,
        scorer_name=scorer_name,
        threshold=threshold_value,
        trace_rows=trace_rows,
        window_rows=variant.window_records,
        events=variant.events,
        observations=variant.observations,
        warnings=warnings + variant.warnings,
        classification=classification,
        pending_early=pending_early,
        early_durations=durations,
        cumulative_residual_error=cumulative,
    )


# --- run configuration ----------------------------------------------------

DEFAULT_MODEL_SPECS: tuple[dict[str, Any], ...] = tuple(
    {"id": f"m{i + 1}", "kind": "synthetic", "p": p}
    for i, p in enumerate((0.9, 0.6, 0.5, 0.4, 0.3))
)

DEFAULT_THRESHOLD = 1.0


@dataclass
class RunSetup:
    """A fully resolved run: engine config plus pool, schema, stream, drift."""

    config: EngineConfig
    model_specs: list[dict[str, Any]]
    schema: FeatureSchema
    scorer_name: str = FAIRNESS_VARIANCE
    threshold: float | None = DEFAULT_THRESHOLD
    stream_count: int | None = 2000
    stream_path: str | None = None
    stream_seed: int | None = None
    drifts: list[DriftSpec] = field(default_factory=list)
    initial: str | None = None

    def load_stream(self) -> list[ExecutionTrace]:
        from .domain import read_trace_file

        if self.stream_path is not None:
            return list(read_trace_file(self.stream_path, self.schema))
        seed = self.stream_seed if self.stream_seed is not None else self.config.seed
        return synthetic_stream(self.stream_count or 2000, seed, self.schema)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a TOML run configuration file."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_setup(raw: Mapping[str, Any] | None = None, **overrides: Any) -> RunSetup:
    """Assemble a run setup from a parsed config file plus flag overrides.

    Recognised raw keys mirror the CLI flags (``seed``, ``memory``,
    ``residual``, ``thr``, ``burn-in``, ``g``, ``max-early-substitutions``,
    ``initial``) plus the ``property``, ``schema``, ``models``, ``stream``
    and ``drift`` tables.  Overrides win over file values; ``traces`` may
    be an integer budget (synthetic stream) or a CSV path.
    """
    raw = dict(raw or {})

    def pick(flag: str, file_key: str, default: Any) -> Any:
        value = overrides.get(flag)
        if value is not None:
            return value
        return raw.get(file_key, default)

    config = EngineConfig(
        seed=int(pick("seed", "seed", 0)),
        memory=float(pick("memory", "memory", 0.0)),
        residual=float(pick("residual", "residual", 0.01)),
        degradation_threshold=float(pick("thr", "thr", 0.1)),
        burn_in=int(pick("burn_in", "burn-in", 50)),
        mc_draws=int(pick("g", "g", 100)),
        max_early_substitutions=int(raw.get("max-early-substitutions", 1)),
    )

    schema = (
        schema_from_mapping(raw["schema"]) if "schema" in raw else synthetic_schema()
    )
    model_specs = [dict(spec) for spec in raw.get("models", DEFAULT_MODEL_SPECS)]

    prop_raw = dict(raw.get("property", {}))
    scorer_name = str(prop_raw.get("name", FAIRNESS_VARIANCE))
    threshold: float | None
    if "threshold" in prop_raw:
        threshold = float(prop_raw["threshold"])
    elif "models" in raw or "schema" in raw:
        threshold = None  # calibrate from the stream
    else:
        threshold = DEFAULT_THRESHOLD  # built-in synthetic pool

    stream_raw = dict(raw.get("stream", {}))
    stream_count: int | None = None
    stream_path: str | None = None
    traces = overrides.get("traces")
    if traces is not None:
        text = str(traces)
        if text.isdigit():
            stream_count = int(text)
        else:
            stream_path = text
    elif "path" in stream_raw:
        stream_path = str(stream_raw["path"])
    else:
        stream_count = int(stream_raw.get("n", 2000))
    if stream_count is not None and stream_count < 1:
        raise UsageError(f"trace budget must be at least 1, got {stream_count}")

    drift_raw = raw.get("drift", [])
    if isinstance(drift_raw, Mapping):
        drift_raw = [drift_raw]
    drifts = [
        DriftSpec(
            model=str(d["model"]),
            at_trace=int(d["at"]),
            success_probability=float(d["p"]),
        )
        for d in drift_raw
    ]

    return RunSetup(
        config=config,
        model_specs=model_specs,
        schema=schema,
        scorer_name=scorer_name,
        threshold=threshold,
        stream_count=stream_count,
        stream_path=stream_path,
        stream_seed=stream_raw.get("seed"),
        drifts=drifts,
        initial=raw.get("initial"),
    )
