"""
Command handlers for ``run``, ``verify``, ``compare`` and ``list-problems``.

Handlers take the parsed argparse namespace and return the process exit
code: 0 success, 1 failed verify check, 2 invalid input, 3 solver abort.
"""

import argparse
import json
from pathlib import Path
from typing import Optional

from ..diagnostics.suites import SUITES, resolve_suites, run_suite
from ..logging import get_logger
from ..problems.service import FAMILIES
from ..runtime.core import RuntimeConfig, get_runtime_config, write_atomic
from .config import load_config
from .models import ExperimentConfig, RunStatus
from .service import SOLVERS, compare, run_experiment
from .storage import comparison_to_csv, comparison_to_gnuplot, write_json, write_run_outputs

logger = get_logger(__name__)


def _runtime(args: argparse.Namespace) -> RuntimeConfig:
    return get_runtime_config().with_threads(getattr(args, "threads", None))


def _with_timing(config: ExperimentConfig, timing: bool) -> ExperimentConfig:
    if not timing:
        return config
    return config.model_copy(update={"solver": config.solver.model_copy(update={"record_timing": True})})


def output_dir(args_out: Optional[str], config_out: Optional[str], runtime: RuntimeConfig, name: str) -> Path:
    """--out wins over the config's ``output``, which wins over DSSA_OUTPUT_ROOT/<name>."""
    if args_out:
        return Path(args_out)
    if config_out:
        return Path(config_out)
    return runtime.output_root / name


def cmd_run(args: argparse.Namespace) -> int:
    runtime = _runtime(args)
    config = load_config(args.config, seed=args.seed, replications=args.reps)
    config = _with_timing(config, args.timing)
    problem, results = run_experiment(config, runtime.threads)
    out = output_dir(args.out, config.output, runtime, config.name)
    write_run_outputs(out, config, problem.name, results)

    exit_code = 0
    for replication, result in enumerate(results):
        print(
            f"rep {replication:03d}: {result.status.value:<16} iterations={result.totals.iterations} "
            f"oracle_calls={result.totals.oracle_calls} final_residual={result.final_residual!r}"
        )
        if result.status == RunStatus.ABORTED:
            print(f"  aborted: {result.abort_reason}")
            exit_code = 3
    print(f"outputs written to {out}")
    return exit_code


def cmd_verify(args: argparse.Namespace) -> int:
    runtime = _runtime(args)
    names = resolve_suites(args.suite)
    seed = args.seed if args.seed is not None else 0
    failed = []
    for name in names:
        report = run_suite(name, seed, runtime.threads)
        payload = report.model_dump(mode="json") | {"passed": report.passed, "evaluations": report.evaluations}
        if args.out:
            write_json(Path(args.out) / f"{name}.json", payload)
        else:
            print(json.dumps(payload, indent=2))
        for check in report.checks:
            if not check.passed:
                print(f"FAIL {name}: {check.name} measured={check.measured!r} band={check.band}")
        print(f"{name}: {'PASS' if report.passed else 'FAIL'} ({report.evaluations} evaluations)")
        if not report.passed:
            failed.append(name)
    return 1 if failed else 0


def cmd_compare(args: argparse.Namespace) -> int:
    runtime = _runtime(args)
    configs = [load_config(path, seed=args.seed, replications=args.reps) for path in args.config]
    table = compare(configs, runtime.threads)
    out = Path(args.out) if args.out else runtime.output_root / "compare"
    write_atomic(out / "comparison.csv", comparison_to_csv(table.labels, table.checkpoints, table.values))
    write_atomic(out / "comparison.dat", comparison_to_gnuplot(table.labels, table.checkpoints, table.values))

    for label, values in zip(table.labels, table.values):
        reached = [v for v in values if v is not None]
        final = reached[-1] if reached else None
        print(f"{label}: best residual^2={final!r} iterations to residual^2 <= {table.target:g}: "
              f"{table.iterations_to_target[label]}")
    print(f"comparison written to {out}")
    return 0


def cmd_list_problems(args: argparse.Namespace) -> int:
    print("problem families:")
    for family, description in FAMILIES.items():
        print(f"  {family:<8} {description}")
    print("methods:")
    for method in SOLVERS:
        print(f"  {method}")
    print("verify suites:")
    for suite in SUITES:
        print(f"  {suite}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG master seed (overrides the config)")
    common.add_argument("--reps", type=int, default=None, help="Number of replications (overrides the config)")
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--threads", type=int, default=None, help="Worker processes (overrides DSSA_THREADS)")

    run = subparsers.add_parser("run", parents=[common], help="Run one experiment config")
    run.add_argument("--config", required=True, type=Path, help="TOML experiment config")
    run.add_argument("--timing", action="store_true", help="Record wall-clock nanoseconds")
    run.set_defaults(handler=cmd_run)

    verify = subparsers.add_parser("verify", parents=[common], help="Run an acceptance suite")
    verify.add_argument("--suite", required=True, help=f"One of: {', '.join(SUITES)}, all")
    verify.set_defaults(handler=cmd_verify)

    comparison = subparsers.add_parser("compare", parents=[common], help="Compare configs on one problem")
    comparison.add_argument("--config", required=True, action="append", type=Path,
                            help="TOML experiment config; repeat for each method")
    comparison.set_defaults(handler=cmd_compare)

    listing = subparsers.add_parser("list-problems", help="List problem families, methods and suites")
    listing.set_defaults(handler=cmd_list_problems)
