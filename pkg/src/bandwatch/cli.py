"""Command-line front end.

Subcommands:

* ``static-select`` -- play the bandit once over a fixed trace budget and
  print the pull-count table.
* ``run``           -- continuous dual-track assessment; writes a report
  directory (per-trace/per-window CSV, event and observation logs, summary).
* ``report``        -- pretty-print the summary of a written report.

Exit codes: 0 success, 1 runtime failure (missing files, scoring errors),
2 usage errors (bad flags or impossible configuration).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bandit import static_select
from .domain import NonFunctionalProperty, UsageError
from .harness import (
    build_setup,
    load_config_file,
    resolve_threshold,
    run_experiment,
)
from .models import make_candidate_pool
from .scoring import make_scorer


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandwatch",
        description="Continuous non-functional assessment of a model pool.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_engine_flags: bool) -> None:
        p.add_argument("--config", help="TOML run configuration file")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
        p.add_argument(
            "--traces",
            help="trace budget (integer, synthetic stream) or a CSV trace file",
        )
        p.add_argument("--out", help="output directory")
        if with_engine_flags:
            p.add_argument("--memory", type=float, help="fraction of evidence kept across windows")
            p.add_argument("--residual", type=float, help="window-close residual fraction")
            p.add_argument("--thr", type=float, help="early-substitution degradation threshold")
            p.add_argument("--burn-in", dest="burn_in", type=int, help="minimum window size")
            p.add_argument("--g", type=int, help="Monte Carlo draws per trace")

    p_static = sub.add_parser("static-select", help="one-shot selection over a trace budget")
    common(p_static, with_engine_flags=False)

    p_run = sub.add_parser("run", help="continuous assessment with variable windows")
    common(p_run, with_engine_flags=True)

    p_report = sub.add_parser("report", help="summarise a written report directory")
    p_report.add_argument("--out", required=True, help="report directory to read")
    return parser


def _setup_from_args(args: argparse.Namespace) -> "tuple":
    raw = load_config_file(args.config) if args.config else None
    overrides = {
        key: getattr(args, key, None)
        for key in ("seed", "memory", "residual", "thr", "burn_in", "g", "traces")
    }
    return build_setup(raw, **overrides)


def _cmd_static_select(args: argparse.Namespace) -> int:
    setup = _setup_from_args(args)
    stream = setup.load_stream()
    threshold, warnings = resolve_threshold(
        setup.model_specs,
        stream,
        setup.schema,
        setup.config,
        setup.scorer_name,
        setup.threshold,
        setup.initial,
    )
    scorer = make_scorer(setup.scorer_name, setup.schema)
    prop = NonFunctionalProperty(setup.scorer_name, scorer, threshold)
    candidates, predictors = make_candidate_pool(
        setup.model_specs, np.random.default_rng(setup.config.seed), setup.initial
    )
    best, counts = static_select(candidates, stream, prop, predictors, np.random.default_rng(setup.config.seed))

    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    width = max(len(m) for m in counts)
    print(f"{'model':<{width}}  pulls")
    for mid in candidates.ids:
        print(f"{mid:<{width}}  {counts[mid]}")
    print(f"selected: {best}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"selected": best, "pulls": counts, "traces": len(stream), "seed": setup.config.seed}
        (out / "static_select.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    setup = _setup_from_args(args)
    stream = setup.load_stream()
    report = run_experiment(
        setup.model_specs,
        stream,
        setup.schema,
        setup.config,
        scorer_name=setup.scorer_name,
        threshold=setup.threshold,
        drifts=setup.drifts,
        initial=setup.initial,
    )
    outdir = Path(args.out) if args.out else Path("report")
    report.write(outdir)
    summary = report.summary()
    print(f"traces:            {summary['traces']}")
    print(f"windows closed:    {summary['windows']['closed']}")
    print(f"mean window size:  {summary['windows']['mean_size']}")
    print(f"substitutions:     {summary['substitutions']['end_of_window']} end-of-window, "
          f"{summary['substitutions']['early']} early")
    print(f"residual error:    {summary['cumulative_residual_error']}")
    print(f"report written to: {outdir}")
    for warning in summary["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    summary_path = out / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"no summary.json under {out}")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    windows = summary["windows"]
    subs = summary["substitutions"]
    early = summary["early_classification"]
    print(f"traces:            {summary['traces']}")
    print(f"models:            {', '.join(summary['models'])}")
    print(f"memory:            {summary['config']['memory']}")
    print(f"windows closed:    {windows['closed']} (mean size {windows['mean_size']})")
    print(f"substitutions:     {subs['end_of_window']} end-of-window, {subs['early']} early")
    print(f"early outcomes:    {early['relevant']}/{early['total']} relevant, "
          f"{early['success']}/{early['relevant'] or 1} successful, {early['pending']} pending")
    print(f"residual error:    {summary['cumulative_residual_error']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "static-select": _cmd_static_select,
        "run": _cmd_run,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: missing files, scorer errors, ...
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
