"""Core vocabulary: traces, schemas, properties, configuration, logs, events.

A deployed pipeline emits one *execution trace* per request: the feature
payload that was scored together with the prediction that was served for
it.  Everything downstream -- property scoring, posterior updates, window
bookkeeping, substitution events -- speaks in terms of the types defined
here.

File formats are deliberately boring: traces travel as header-first CSV,
schemas and run configuration as TOML, and event/observation logs as
line-delimited JSON so they can be appended to and replayed.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, TextIO


class SchemaError(ValueError):
    """A record or file does not match the declared feature schema."""


class DomainError(ValueError):
    """A value lies outside its declared domain."""


class UsageError(ValueError):
    """An operation was invoked with arguments that can never be valid."""


class SingularityError(ArithmeticError):
    """A denominator is too close to zero for the result to mean anything."""


class ScorerError(RuntimeError):
    """The predictor failed while scoring a probe.

    The offending probe is attached as the ``probe`` attribute.
    """

    def __init__(self, message: str, probe: Mapping[str, Any] | None = None):
        super().__init__(message)
        self.probe = probe


FeatureValue = float | str


@dataclass(frozen=True)
class FeatureSchema:
    """Declares the feature columns of a trace stream.

    ``features`` is the column order (the prediction/target column comes
    last in files and is named by ``target``).  ``protected`` maps a subset
    of the features to their finite value domains; those features are the
    ones a non-functional scorer may perturb.
    """

    features: tuple[str, ...]
    target: str
    protected: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.features:
            raise SchemaError("schema needs at least one feature")
        if len(set(self.features)) != len(self.features):
            raise SchemaError("duplicate feature names in schema")
        if self.target in self.features:
            raise SchemaError(f"target {self.target!r} collides with a feature name")
        for name, domain in self.protected.items():
            if name not in self.features:
                raise SchemaError(f"protected attribute {name!r} is not a feature")
            if not domain:
                raise SchemaError(f"protected attribute {name!r} has an empty domain")
            if len(set(domain)) != len(domain):
                raise SchemaError(f"protected attribute {name!r} repeats a value")

    @property
    def protected_features(self) -> tuple[str, ...]:
        """Protected attribute names in schema (column) order."""
        return tuple(f for f in self.features if f in self.protected)


@dataclass(frozen=True)
class ExecutionTrace:
    """One observed request: the feature assignment and the served prediction."""

    features: Mapping[str, FeatureValue]
    prediction: float


def _parse_value(raw: str) -> FeatureValue:
    try:
        return float(raw)
    except ValueError:
        return raw


def _format_value(value: FeatureValue) -> str:
    if isinstance(value, float):
        if value.is_integer():
            return str(int(value))
        return repr(value)
    return value


def parse_trace(line: str, schema: FeatureSchema) -> ExecutionTrace:
    """Parse one delimited record into a trace.

    The line must contain exactly one column per schema feature plus the
    prediction column, in schema order with the prediction last.  Numeric
    columns become 64-bit floats, everything else stays a string; protected
    columns are kept as strings and validated against their domain.
    """
    parts = line.rstrip("\n").split(",")
    expected = len(schema.features) + 1
    if len(parts) != expected:
        raise SchemaError(
            f"expected {expected} columns ({len(schema.features)} features"
            f" + {schema.target!r}), got {len(parts)}"
        )
    features: dict[str, FeatureValue] = {}
    for name, raw in zip(schema.features, parts):
        if name in schema.protected:
            if raw not in schema.protected[name]:
                raise DomainError(
                    f"value {raw!r} for protected attribute {name!r}"
                    f" is outside its domain {schema.protected[name]}"
                )
            features[name] = raw
        else:
            features[name] = _parse_value(raw)
    try:
        prediction = float(parts[-1])
    except ValueError:
        raise SchemaError(f"prediction column {parts[-1]!r} is not numeric") from None
    return ExecutionTrace(features=features, prediction=prediction)


def serialize_trace(trace: ExecutionTrace, schema: FeatureSchema) -> str:
    """Render a trace back to its delimited form (inverse of ``parse_trace``)."""
    missing = [f for f in schema.features if f not in trace.features]
    if missing:
        raise SchemaError(f"trace is missing features {missing}")
    parts = [_format_value(trace.features[f]) for f in schema.features]
    parts.append(_format_value(trace.prediction))
    return ",".join(parts)


def read_trace_file(path: str | Path, schema: FeatureSchema) -> Iterator[ExecutionTrace]:
    """Stream traces from a header-first CSV file.

    The header must equal the schema's features followed by the target
    column; anything else is a schema error.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        expected = ",".join((*schema.features, schema.target))
        if header != expected:
            raise SchemaError(f"header {header!r} does not match schema {expected!r}")
        for line in fh:
            if line.strip():
                yield parse_trace(line, schema)


def write_trace_file(path: str | Path, traces: Iterable[ExecutionTrace], schema: FeatureSchema) -> None:
    """Write traces as header-first CSV (the format ``read_trace_file`` accepts)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join((*schema.features, schema.target)) + "\n")
        for trace in traces:
            fh.write(serialize_trace(trace, schema) + "\n")


def schema_from_mapping(raw: Mapping[str, Any]) -> FeatureSchema:
    """Build a schema from its configuration-file shape.

    Expected keys: ``features`` (list of names), ``target`` (name), and an
    optional ``protected`` table mapping feature names to value lists.
    """
    try:
        features = tuple(str(f) for f in raw["features"])
        target = str(raw["target"])
    except KeyError as exc:
        raise SchemaError(f"schema is missing key {exc.args[0]!r}") from None
    protected = {
        str(name): tuple(str(v) for v in values)
        for name, values in dict(raw.get("protected", {})).items()
    }
    return FeatureSchema(features=features, target=target, protected=protected)


# A scorer maps (trace, predictor) to a real-valued property score.
Scorer = Callable[[ExecutionTrace, Any], float]


@dataclass
class NonFunctionalProperty:
    """A scored property of the serving system, judged against a threshold.

    A score *strictly below* the threshold counts as success; the
    comparison direction is fixed.  ``threshold`` may start as ``None``
    when it is to be calibrated from early observations.
    """

    name: str
    scorer: Scorer
    threshold: float | None

    def satisfied(self, score: float) -> bool:
        if self.threshold is None:
            raise UsageError(f"property {self.name!r} has no threshold set")
        return score < self.threshold


@dataclass(frozen=True)
class EngineConfig:
    """Tunables of the assessment engine.

    ``memory`` is the fraction of posterior evidence carried across a
    window boundary (0 restarts every window from scratch).  ``residual``
    sets how small the remaining relative regret must be, as a fraction of
    the leader's posterior mean, before a window may close.  ``burn_in``
    is the minimum number of traces a window must see before closing is
    considered.  ``mc_draws`` is the Monte Carlo draw-set width used for
    the per-trace estimate, and ``percentile_level`` the nearest-rank
    percentile of the regret samples compared against the residual (fixed
    at 95).  ``degradation_threshold`` triggers mid-window substitution,
    capped at ``max_early_substitutions`` per window.
    """

    seed: int = 0
    memory: float = 0.0
    residual: float = 0.01
    degradation_threshold: float = 0.1
    burn_in: int = 50
    mc_draws: int = 100
    percentile_level: int = 95
    max_early_substitutions: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.memory <= 1.0:
            raise UsageError(f"memory must lie in [0, 1], got {self.memory}")
        if self.residual <= 0.0:
            raise UsageError(f"residual must be positive, got {self.residual}")
        if not 0.0 <= self.degradation_threshold <= 1.0:
            raise UsageError(
                f"degradation threshold must lie in [0, 1], got {self.degradation_threshold}"
            )
        if self.burn_in < 1:
            raise UsageError(f"burn_in must be at least 1, got {self.burn_in}")
        if self.mc_draws < 1:
            raise UsageError(f"mc_draws must be at least 1, got {self.mc_draws}")
        if self.percentile_level != 95:
            raise UsageError("percentile_level is fixed at 95")
        if self.max_early_substitutions < 0:
            raise UsageError("max_early_substitutions cannot be negative")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise UsageError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class ObservationEntry:
    """One bandit observation: which model was pulled and how it scored."""

    trace: int
    pulled: str
    score: float
    success: bool

    def to_json(self) -> str:
        return json.dumps(
            {"trace": self.trace, "pulled": self.pulled, "score": self.score, "success": self.success},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "ObservationEntry":
        raw = json.loads(line)
        return cls(
            trace=int(raw["trace"]),
            pulled=str(raw["pulled"]),
            score=float(raw["score"]),
            success=bool(raw["success"]),
        )


class ObservationLog:
    """Append-only, strictly ordered record of bandit observations."""

    def __init__(self) -> None:
        self.entries: list[ObservationEntry] = []

    def append(self, entry: ObservationEntry) -> None:
        if self.entries and entry.trace <= self.entries[-1].trace:
            raise UsageError(
                f"trace index {entry.trace} does not advance past {self.entries[-1].trace}"
            )
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ObservationEntry]:
        return iter(self.entries)

    def write(self, target: str | Path | TextIO) -> None:
        if hasattr(target, "write"):
            for entry in self.entries:
                target.write(entry.to_json() + "\n")
            return
        with open(target, "w", encoding="utf-8") as fh:
            self.write(fh)

    @classmethod
    def read(cls, path: str | Path) -> "ObservationLog":
        log = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    log.append(ObservationEntry.from_json(line))
        return log


END_OF_WINDOW = "end-of-window"
EARLY = "early"


@dataclass(frozen=True)
class SubstitutionEvent:
    """The production model changed, either at a window boundary or early.

    ``degradation`` is only meaningful for early events (the degradation
    level that tripped the threshold); it is ``None`` at window boundaries.
    """

    kind: str
    window: int
    trace: int
    from_model: str
    to_model: str
    degradation: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (END_OF_WINDOW, EARLY):
            raise UsageError(f"unknown substitution kind {self.kind!r}")

    def to_json(self) -> str:
        payload: dict[str, Any] = {
            "kind": self.kind,
            "window": self.window,
            "trace": self.trace,
            "from": self.from_model,
            "to": self.to_model,
        }
        if self.degradation is not None:
            payload["degradation"] = self.degradation
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SubstitutionEvent":
        raw = json.loads(line)
        return cls(
            kind=str(raw["kind"]),
            window=int(raw["window"]),
            trace=int(raw["trace"]),
            from_model=str(raw["from"]),
            to_model=str(raw["to"]),
            degradation=float(raw["degradation"]) if "degradation" in raw else None,
        )


def write_events(path: str | Path, events: Iterable[SubstitutionEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.to_json() + "\n")


def read_events(path: str | Path) -> list[SubstitutionEvent]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(SubstitutionEvent.from_json(line))
    return out
