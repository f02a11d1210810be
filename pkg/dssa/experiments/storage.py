"""
Trace persistence: per-replication CSV files, the run summary JSON and the
comparison tables. Every file is written atomically.
"""

import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional

from ..diagnostics.service import oracle_call_increment
from ..logging import get_logger
from ..runtime.core import write_atomic
from .models import ExperimentConfig, RunResult

logger = get_logger(__name__)

CSV_HEADER = [
    "k", "N_k", "alpha_k", "ell_k", "beta_k", "gamma_k", "oracle_calls_cum",
    "residual_exact", "residual_est", "dist_to_solution", "wall_ns",
]


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool,)):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def trace_rows(result: RunResult) -> list[list[str]]:
    rows = []
    for record in result.trace:
        rows.append([format_value(v) for v in (
            record.k, record.n_k, record.alpha_k, record.ell_k, record.beta_k, record.gamma_k,
            record.oracle_calls_cum, record.residual_exact, record.residual_est,
            record.dist_to_solution, record.wall_ns,
        )])
    return rows


def trace_to_csv(result: RunResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(trace_rows(result))
    return buffer.getvalue()


def read_trace_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def recompute_calls_from_rows(rows: Sequence[dict[str, str]], method: str) -> int:
    """Cumulative oracle calls rebuilt from the N_k and ell_k columns."""
    total = 0
    for row in rows:
        total += oracle_call_increment(method, int(row["N_k"]), int(row["ell_k"]))
    return total


def run_summary(config: ExperimentConfig, problem_name: str, results: Sequence[RunResult]) -> dict:
    runs = []
    for replication, result in enumerate(results):
        trace_calls = result.trace[-1].oracle_calls_cum if result.trace else 0
        entry = {
            "replication": replication,
            "file": replica_filename(replication),
            "status": result.status.value,
            "abort_reason": result.abort_reason,
            "iterations": result.totals.iterations,
            "oracle_calls": result.totals.oracle_calls,
            "oracle_calls_trace": trace_calls,
            "stop_test_calls": result.totals.stop_test_calls,
            "sample_evaluations": result.totals.sample_evaluations,
            "final_residual": result.final_residual,
            "final_dist": result.final_dist,
            "best_residual_sq": result.best_residual_sq,
            "final_point": [float(v) for v in result.final_point],
        }
        if result.totals.wall_ns is not None:
            entry["wall_ns"] = result.totals.wall_ns
        runs.append(entry)
    return {
        "name": config.name,
        "method": config.method,
        "problem": problem_name,
        "seed": config.seed,
        "replications": config.replications,
        "config": config.model_dump(mode="json"),
        "runs": runs,
    }


def replica_filename(replication: int) -> str:
    return f"rep_{replication:03d}.csv"


def write_run_outputs(out_dir: Path, config: ExperimentConfig, problem_name: str,
                      results: Sequence[RunResult]) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for replication, result in enumerate(results):
        paths.append(write_atomic(out_dir / replica_filename(replication), trace_to_csv(result)))
    summary = run_summary(config, problem_name, results)
    paths.append(write_atomic(out_dir / "summary.json", json.dumps(summary, indent=2) + "\n"))
    logger.info("Wrote %s files to %s", len(paths), out_dir)
    return paths


def write_json(path: Path, payload: dict) -> Path:
    return write_atomic(Path(path), json.dumps(payload, indent=2) + "\n")


def comparison_to_csv(labels: Sequence[str], checkpoints: Sequence[int],
                      values: Sequence[Sequence[Optional[float]]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["oracle_calls", *labels])
    for j, calls in enumerate(checkpoints):
        writer.writerow([format_value(int(calls)), *(format_value(_finite(values[i][j])) for i in range(len(labels)))])
    return buffer.getvalue()


def comparison_to_gnuplot(labels: Sequence[str], checkpoints: Sequence[int],
                          values: Sequence[Sequence[Optional[float]]]) -> str:
    """Whitespace-separated columns; missing values written as NaN."""
    lines = ["# oracle_calls " + " ".join(label.replace(" ", "_") for label in labels)]
    for j, calls in enumerate(checkpoints):
        cells = []
        for i in range(len(labels)):
            value = _finite(values[i][j])
            cells.append("NaN" if value is None else repr(value))
        lines.append(" ".join([str(int(calls)), *cells]))
    return "\n".join(lines) + "\n"


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or value != value:
        return None
    return float(value)
