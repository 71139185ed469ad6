"""Acceptance gate: eight end-to-end criteria, one printed verdict line each.

Every test measures its own wall-clock time against an explicit budget and
prints ``[criterion N] <label>: PASS|FAIL (...)`` before asserting, so a
full run always shows the per-criterion scoreboard (pytest -rP keeps the
passing lines visible).
"""

import math
import time
from pathlib import Path

import numpy as np

from bandwatch.bandit import BetaState, CandidateSet, beta_pdf, sample_beta, static_select
from bandwatch.domain import EARLY, EngineConfig, NonFunctionalProperty
from bandwatch.harness import penalty, synthetic_schema, synthetic_stream, run_experiment
from bandwatch.models import make_candidate_pool
from bandwatch.scoring import FAIRNESS_VARIANCE, make_scorer
from bandwatch.substitution import AssuranceTracker, ranking_metric, update_degradation
from bandwatch.window import (
    DrawMatrix,
    Engine,
    close_window,
    monte_carlo,
    regret_samples,
)

SCHEMA = synthetic_schema()
SCORER = make_scorer(FAIRNESS_VARIANCE, SCHEMA)
PROP = NonFunctionalProperty(FAIRNESS_VARIANCE, SCORER, 1.0)


def synthetic_specs(ps):
    return [
        {"id": f"m{i + 1}", "kind": "synthetic", "p": p} for i, p in enumerate(ps)
    ]


def verdict(number: int, label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number}] {label}: {status} ({detail})")
    assert ok, f"criterion {number} ({label}): {detail}"


def run_engine(ps, seed, memory, n, *, burn_in, residual, thr=0.1, g=100,
               initial=None, max_early=1, reinit="memory"):
    pool, predictors = make_candidate_pool(
        synthetic_specs(ps), np.random.default_rng(seed), initial
    )
    config = EngineConfig(
        seed=seed, memory=memory, burn_in=burn_in, residual=residual,
        degradation_threshold=thr, mc_draws=g, max_early_substitutions=max_early,
    )
    engine = Engine(pool, predictors, PROP, config, reinit=reinit)
    if n:
        engine.run(synthetic_stream(n, seed, SCHEMA))
    return engine, predictors


def test_criterion_1_static_selection_convergence():
    started = time.perf_counter()
    specs = synthetic_specs((0.9, 0.6, 0.5, 0.4, 0.3))
    plurality_wins = 0
    sums_exact = True
    for seed in range(100):
        pool, predictors = make_candidate_pool(specs, np.random.default_rng(seed))
        stream = synthetic_stream(2000, seed, SCHEMA)
        _, counts = static_select(
            pool, stream, PROP, predictors, np.random.default_rng(seed + 10_000)
        )
        sums_exact &= sum(counts.values()) == 2000
        strongest = counts["m1"]
        if all(strongest > n for m, n in counts.items() if m != "m1"):
            plurality_wins += 1
    elapsed = time.perf_counter() - started
    ok = plurality_wins >= 95 and sums_exact and elapsed < 30.0
    verdict(
        1, "static selection convergence", ok,
        f"strict plurality in {plurality_wins}/100 seeds, need >= 95; "
        f"all pull counts sum to 2000: {sums_exact}; {elapsed:.1f}s < 30s",
    )


def test_criterion_2_formula_unit_suite():
    started = time.perf_counter()
    checks: list[bool] = []

    # ranking metric of a 110-success / 2-failure posterior
    checks.append(abs(ranking_metric(110.0, 2.0) - 110.0 / 112.0) <= 1e-12)

    # memory reinitialisation floors and clamps
    pool = CandidateSet(("m",), np.array([110.0]), np.array([2.0]), "m")
    close_window(pool, memory=0.1)
    checks.append(pool.alphas.tolist() == [11.0] and pool.betas.tolist() == [1.0])

    # degradation after assurance levels [1.0, 0.9]: one minus their mean.
    # 0.05 is reproduced to within one floating-point ulp of the decimal.
    tracker = AssuranceTracker()
    update_degradation(tracker, 1.0)
    degradation = update_degradation(tracker, 0.9)
    checks.append(degradation == 1.0 - (1.0 + 0.9) / 2.0)
    checks.append(abs(degradation - 0.05) <= 1e-15)

    # regret on a hand matrix: leader row [1.0, 0.5] against [0.5, 0.75]
    values = np.array([[1.0, 0.5], [0.5, 0.75]])
    matrix = DrawMatrix(values=values, ids=("a", "b"), column_max=values.max(axis=0))
    checks.append(regret_samples(matrix, "a").tolist() == [0.0, 0.5])

    # logistic penalty is exactly one half at its midpoint
    checks.append(abs(penalty(0.5) - 0.5) <= 1e-12)

    elapsed = time.perf_counter() - started
    ok = all(checks) and elapsed < 1.0
    verdict(
        2, "formula unit suite", ok,
        f"{sum(checks)}/{len(checks)} identities hold; {elapsed:.3f}s < 1s",
    )


def test_criterion_3_zero_memory_matches_the_reset_baseline():
    started = time.perf_counter()
    variant, _ = run_engine(
        (0.9, 0.7, 0.5, 0.3), seed=7, memory=0.0, n=10_000,
        burn_in=50, residual=0.05, reinit="memory",
    )
    baseline, _ = run_engine(
        (0.9, 0.7, 0.5, 0.3), seed=7, memory=0.0, n=10_000,
        burn_in=50, residual=0.05, reinit="reset",
    )
    same_events = variant.events == baseline.events
    variant_bounds = [(w.start, w.end, w.closed) for w in variant.window_records]
    baseline_bounds = [(w.start, w.end, w.closed) for w in baseline.window_records]
    same_bounds = variant_bounds == baseline_bounds
    elapsed = time.perf_counter() - started
    ok = same_events and same_bounds and elapsed < 30.0
    verdict(
        3, "zero-memory equivalence", ok,
        f"events identical={same_events} ({len(variant.events)}), "
        f"boundaries identical={same_bounds} ({len(variant_bounds)} windows); "
        f"{elapsed:.1f}s < 30s",
    )


def test_criterion_4_memory_shortens_windows():
    started = time.perf_counter()
    deltas = (0.0, 0.05, 0.10, 0.25)
    ordered_seeds = 0
    means_by_seed = []
    for seed in range(10):
        means = []
        for delta in deltas:
            engine, _ = run_engine(
                (1.0, 1.0), seed=seed, memory=delta, n=20_000,
                burn_in=14, residual=0.25, thr=1.0,
            )
            sizes = [w.size for w in engine.window_records if w.closed]
            means.append(sum(sizes) / len(sizes))
        means_by_seed.append(means)
        if all(a >= b for a, b in zip(means, means[1:])):
            ordered_seeds += 1
    elapsed = time.perf_counter() - started
    ok = ordered_seeds >= 8 and elapsed < 120.0
    spread = ", ".join(
        f"{delta}:{np.mean([m[i] for m in means_by_seed]):.2f}"
        for i, delta in enumerate(deltas)
    )
    verdict(
        4, "window sizes non-increasing in memory", ok,
        f"ordered in {ordered_seeds}/10 seeds, need >= 8; "
        f"mean sizes {spread}; {elapsed:.1f}s < 120s",
    )


def count_leader_flips(seed: int, memory: float) -> int:
    """First-position ranking changes on an anti-phase drifting stream."""
    base, amp, period = 0.6, 0.08, 2500
    engine, predictors = run_engine(
        (base, base), seed=seed, memory=memory, n=0,
        burn_in=60, residual=0.25, thr=1.0,
    )
    ids = ("m1", "m2")
    for t, trace in enumerate(synthetic_stream(40_000, seed, SCHEMA)):
        for i, mid in enumerate(ids):
            phase = 2 * math.pi * (t / period) + math.pi * i
            predictors[mid].set_success_probability(
                min(0.99, max(0.01, base + amp * math.sin(phase)))
            )
        engine.step(trace)
    engine.finish()
    leaders = [engine.rankings[i].ids[0] for i in sorted(engine.rankings)]
    return sum(1 for a, b in zip(leaders, leaders[1:]) if a != b)


def test_criterion_5_memory_stabilises_the_top_model():
    started = time.perf_counter()
    stable_seeds = 0
    pairs = []
    for seed in range(10):
        flips_low = count_leader_flips(seed, memory=0.05)
        flips_high = count_leader_flips(seed, memory=0.10)
        pairs.append((flips_low, flips_high))
        if flips_high < flips_low:
            stable_seeds += 1
    elapsed = time.perf_counter() - started
    ok = stable_seeds >= 8 and elapsed < 120.0
    verdict(
        5, "top-model changes drop with more memory", ok,
        f"strictly fewer in {stable_seeds}/10 seeds, need >= 8; "
        f"(memory 0.05, 0.10) flips {pairs}; {elapsed:.1f}s < 120s",
    )


def early_outcomes_in_second_window(seed: int, thr: float):
    """Drift the selected arm mid-window-2; classify that window's early events."""
    burn_in = 50
    engine, predictors = run_engine(
        (0.9, 0.8, 0.4, 0.3), seed=seed, memory=0.10, n=0,
        burn_in=burn_in, residual=0.1, thr=thr, initial="m1",
    )
    drift_at = None
    for t, trace in enumerate(synthetic_stream(12_000, seed, SCHEMA)):
        if drift_at is not None and t == drift_at:
            predictors["m1"].set_success_probability(0.2)
        engine.step(trace)
        closed = [w for w in engine.window_records if w.closed]
        if len(closed) == 1 and drift_at is None:
            drift_at = t + 1 + burn_in // 2
        if len(closed) == 2:
            break
    closed = [w for w in engine.window_records if w.closed]
    assert len(closed) == 2, "stream exhausted before the second window closed"
    second = closed[1].index
    events = [e for e in engine.events if e.kind == EARLY and e.window == second]
    top = engine.rankings[second].ids[0]
    triggered = len(events)
    relevant = sum(1 for e in events if e.from_model != top)
    successful = sum(
        1 for e in events if e.from_model != top and e.to_model == top
    )
    return triggered, relevant, successful


def test_criterion_6_early_substitutions_are_relevant_and_successful():
    started = time.perf_counter()
    thresholds = (0.05, 0.10, 0.25)
    totals = {}
    relevant_at_010 = successful_at_010 = 0
    for thr in thresholds:
        triggered = relevant = successful = 0
        for seed in range(50):
            t, r, s = early_outcomes_in_second_window(seed, thr)
            triggered += t
            relevant += r
            successful += s
        totals[thr] = triggered
        if thr == 0.10:
            total_at_010 = triggered
            relevant_at_010 = relevant
            successful_at_010 = successful
    relevance_rate = relevant_at_010 / total_at_010
    success_rate = successful_at_010 / relevant_at_010
    monotone = totals[0.05] >= totals[0.10] >= totals[0.25]
    elapsed = time.perf_counter() - started
    ok = (
        relevance_rate >= 0.70
        and success_rate >= 0.70
        and monotone
        and elapsed < 120.0
    )
    verdict(
        6, "early substitution quality under drift", ok,
        f"thr=0.10: {relevant_at_010}/{total_at_010} relevant ({relevance_rate:.1%}), "
        f"{successful_at_010}/{relevant_at_010} successful ({success_rate:.1%}), "
        f"both need >= 70%; counts by thr {totals} non-increasing={monotone}; "
        f"{elapsed:.1f}s < 120s",
    )


def test_criterion_7_statistical_primitives():
    started = time.perf_counter()
    checks: list[bool] = []

    # posterior sampling: Beta(110, 2) sample mean over 10,000 draws
    rng = np.random.default_rng(0)
    state = BetaState(110.0, 2.0)
    draws = [sample_beta(state, rng) for _ in range(10_000)]
    checks.append(abs(np.mean(draws) - 110.0 / 112.0) <= 0.005)

    # winner probabilities: integer draw counts over g columns, so every
    # probability is count/g bit-for-bit and the counts partition g
    probability_ok = True
    rng = np.random.default_rng(1)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        pool = CandidateSet.fresh(tuple(f"c{i}" for i in range(k)))
        pool.alphas[:] = rng.integers(1, 30, size=k).astype(float)
        pool.betas[:] = rng.integers(1, 30, size=k).astype(float)
        g = int(rng.integers(1, 200))
        _, estimate = monte_carlo(pool, draws=g, rng=rng)
        probability_ok &= estimate.counts.sum() == g
        probability_ok &= np.array_equal(estimate.probabilities, estimate.counts / g)
        probability_ok &= bool(np.isclose(estimate.probabilities.sum(), 1.0, atol=1e-12))
    checks.append(probability_ok)

    # regret samples from random draw matrices are never negative
    regret_ok = True
    rng = np.random.default_rng(2)
    for _ in range(1000):
        k, g = int(rng.integers(2, 7)), int(rng.integers(1, 60))
        values = rng.uniform(0.01, 1.0, size=(k, g))
        matrix = DrawMatrix(
            values=values,
            ids=tuple(map(str, range(k))),
            column_max=values.max(axis=0),
        )
        regret_ok &= bool(np.all(regret_samples(matrix, str(rng.integers(k))) >= 0.0))
    checks.append(regret_ok)

    # the Beta density integrates to one for all shape pairs in {1..5}^2
    xs = np.linspace(0.0, 1.0, 10_001)
    integral_ok = True
    for alpha in range(1, 6):
        for beta in range(1, 6):
            density = [beta_pdf(x, float(alpha), float(beta)) for x in xs]
            integral_ok &= abs(np.trapezoid(density, xs) - 1.0) <= 1e-6
    checks.append(integral_ok)

    elapsed = time.perf_counter() - started
    ok = all(checks) and elapsed < 30.0
    verdict(
        7, "statistical primitives", ok,
        f"{sum(checks)}/{len(checks)} blocks hold (sampling, winner shares, "
        f"regret, density); {elapsed:.1f}s < 30s",
    )


def test_criterion_8_identical_runs_write_identical_bytes(tmp_path):
    started = time.perf_counter()
    names = (
        "per_trace.csv", "per_window.csv", "events.jsonl",
        "observations.jsonl", "summary.json",
    )
    for label in ("one", "two"):
        config = EngineConfig(seed=3, memory=0.25, burn_in=50, residual=0.05)
        report = run_experiment(
            synthetic_specs((0.9, 0.6, 0.5, 0.4, 0.3)),
            synthetic_stream(2000, 3, SCHEMA),
            SCHEMA,
            config,
            threshold=1.0,
        )
        report.write(tmp_path / label)
    identical = [
        (tmp_path / "one" / n).read_bytes() == (tmp_path / "two" / n).read_bytes()
        for n in names
    ]
    elapsed = time.perf_counter() - started
    ok = all(identical) and elapsed < 30.0
    verdict(
        8, "byte-identical reports", ok,
        f"{sum(identical)}/{len(names)} files identical; {elapsed:.1f}s < 30s",
    )
