"""Benchmark the pure-numpy kernels against the compiled ones.

Run as ``python -m bandwatch.kernels.bench``.  Times the two hot kernel
calls at engine-realistic shapes and a short end-to-end engine run under
each backend, and checks that both backends produce identical draws from
the same seed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import pure


def _load_native():
    try:
        from . import _native
    except ImportError:
        return None
    return _native


def _time(fn, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def _bench_kernels(backend, k: int, g: int, repeats: int) -> tuple[float, float]:
    alphas = np.linspace(1.0, 40.0, k)
    betas = np.linspace(4.0, 2.0, k)
    gen = np.random.default_rng(7)
    row = _time(lambda: backend.sample_row(gen, alphas, betas), repeats)
    matrix = _time(lambda: backend.mc_matrix(gen, alphas, betas, g), repeats)
    return row, matrix


def _bench_engine(k: int, traces: int) -> float:
    # Import here: the engine picks its backend from the environment at
    # package import time, so per-backend runs use separate processes.
    from ..domain import EngineConfig
    from ..harness import synthetic_stream
    from ..models import make_candidate_pool
    from ..scoring import make_scorer
    from ..domain import NonFunctionalProperty
    from ..harness import synthetic_schema
    from ..window import Engine

    schema = synthetic_schema()
    specs = [
        {"id": f"m{i}", "kind": "synthetic", "p": p}
        for i, p in enumerate(np.linspace(0.9, 0.3, k))
    ]
    pool, predictors = make_candidate_pool(specs, np.random.default_rng(3))
    prop = NonFunctionalProperty("fairness-variance", make_scorer("fairness-variance", schema), 1.0)
    engine = Engine(pool, predictors, prop, EngineConfig(seed=3, burn_in=20))
    stream = synthetic_stream(traces, 3, schema)
    start = time.perf_counter()
    engine.run(stream)
    return (time.perf_counter() - start) / traces


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=5, help="pool size")
    parser.add_argument("--g", type=int, default=100, help="draw columns per trace")
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--traces", type=int, default=3000, help="end-to-end engine traces")
    args = parser.parse_args(argv)

    native = _load_native()
    backends = [("pure", pure)] + ([("native", native)] if native else [])

    if native is not None:
        gen_a, gen_b = np.random.default_rng(11), np.random.default_rng(11)
        alphas = np.array([2.0, 30.0, 1.0])
        betas = np.array([5.0, 2.0, 1.0])
        same_rows = np.array_equal(
            pure.sample_row(gen_a, alphas, betas), native.sample_row(gen_b, alphas, betas)
        )
        same_matrix = all(
            np.array_equal(x, y)
            for x, y in zip(
                pure.mc_matrix(gen_a, alphas, betas, args.g),
                native.mc_matrix(gen_b, alphas, betas, args.g),
            )
        )
        print(f"stream agreement: rows={'ok' if same_rows else 'MISMATCH'}"
              f" matrix={'ok' if same_matrix else 'MISMATCH'}")
    else:
        print("native backend not built; timing pure only")

    print(f"\nshapes: k={args.k}, g={args.g}; per-call microseconds")
    print(f"{'backend':<8} {'sample_row':>12} {'mc_matrix':>12}")
    results = {}
    for name, backend in backends:
        row, matrix = _bench_kernels(backend, args.k, args.g, args.repeats)
        results[name] = (row, matrix)
        print(f"{name:<8} {row * 1e6:>12.2f} {matrix * 1e6:>12.2f}")
    if "native" in results:
        row_speedup = results["pure"][0] / results["native"][0]
        mat_speedup = results["pure"][1] / results["native"][1]
        print(f"{'speedup':<8} {row_speedup:>11.1f}x {mat_speedup:>11.1f}x")

    from . import BACKEND

    per_trace = _bench_engine(args.k, args.traces)
    print(f"\nend-to-end engine ({BACKEND} backend): {per_trace * 1e6:.1f} us/trace")
    print("set BANDWATCH_KERNELS=pure|native and rerun to compare end to end")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
