"""Shared fixtures: the synthetic schema, its scorer, and pool builders."""

import numpy as np
import pytest

from bandwatch.domain import NonFunctionalProperty
from bandwatch.harness import synthetic_schema, synthetic_stream
from bandwatch.models import make_candidate_pool
from bandwatch.scoring import make_scorer


@pytest.fixture(scope="session")
def schema():
    return synthetic_schema()


@pytest.fixture(scope="session")
def scorer(schema):
    return make_scorer("fairness-variance", schema)


@pytest.fixture
def prop(scorer):
    """Fairness-variance property with threshold 1: success iff variance is 0."""
    return NonFunctionalProperty(name="fairness-variance", scorer=scorer, threshold=1.0)


@pytest.fixture
def make_pool():
    """Build a synthetic pool from success probabilities: make_pool(0.9, 0.5)."""

    def build(*ps, seed=0, initial=None):
        specs = [
            {"id": f"m{i + 1}", "kind": "synthetic", "p": p} for i, p in enumerate(ps)
        ]
        return make_candidate_pool(specs, np.random.default_rng(seed), initial)

    return build


@pytest.fixture
def stream(schema):
    """Build a deterministic synthetic stream: stream(n, seed=0)."""

    def build(n, seed=0):
        return synthetic_stream(n, seed, schema)

    return build
