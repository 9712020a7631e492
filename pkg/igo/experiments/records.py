"""Per-step traces of optimization runs and their CSV files."""

import csv
import logging
import os
from dataclasses import astuple, dataclass, field, fields
from typing import List, Optional

import numpy as np

from ..errors import IgoError
from ..settings import CSV_VERSION
from ..utils import format_float

log = logging.getLogger("igo")


RUN_STATUSES = (
    "converged",
    "both_optima_reached",
    "failed_singular",
    "failed_unreliable",
    "failed_degenerate",
    "step_limit",
)
FAILED_STATUSES = ("failed_singular", "failed_unreliable", "failed_degenerate")
SUMMARY_PERCENTILES = (16, 50, 84)
SUMMARY_COLUMNS = ("best_f", "mean_f", "quantile_f", "second_optimum_distance", "hidden_mean", "kl", "speed")


@dataclass
class StepRow:
    """One step of one run."""

    run_id: int
    step: int
    time: float
    dt: float
    best_f: float
    mean_f: float
    quantile_f: float
    second_optimum_distance: Optional[float] = None
    hidden_mean: Optional[float] = None
    kl: Optional[float] = None
    kl_standard_error: Optional[float] = None
    speed: Optional[float] = None
    reliability: str = "exact"
    mean_eigenvalue: Optional[float] = None

    @classmethod
    def columns(cls):
        return [item.name for item in fields(cls)]

    def to_csv_row(self):
        return [value if isinstance(value, str) else format_float(value) for value in astuple(self)]


@dataclass
class RunRecord:
    """Rows of a run in step order, its parameter trajectory and its terminal status."""

    run_id: int
    rows: List[StepRow] = field(default_factory=list)
    thetas: List[np.ndarray] = field(default_factory=list)
    status: Optional[str] = None
    message: str = ""

    def append(self, row):
        if self.status is not None:
            raise IgoError(f"Run {self.run_id} already finished with status {self.status}.")
        expected = self.rows[-1].step + 1 if self.rows else 0
        if row.step != expected:
            raise IgoError(f"Run {self.run_id}: expected step {expected}, got {row.step}.")
        self.rows.append(row)

    def finish(self, status, message=""):
        if status not in RUN_STATUSES:
            raise IgoError(f"Unknown run status '{status}'.")
        if self.status is not None:
            raise IgoError(f"Run {self.run_id} already finished with status {self.status}.")
        self.status = status
        self.message = message
        log.debug(f"Run {self.run_id} finished after {len(self.rows)} steps: {status}.")

    @property
    def failed(self):
        return self.status in FAILED_STATUSES

    def column(self, name):
        return np.array([np.nan if getattr(row, name) is None else getattr(row, name) for row in self.rows], dtype=float)


def _write_header(handle, kind, **metadata):
    extra = "".join(f" {key}={value}" for key, value in metadata.items())
    handle.write(f"# igo-csv {CSV_VERSION} {kind}{extra}\n")


def write_steps_csv(path, records):
    """Write every row of every run, runs in run_id order."""

    with open(path, "w", newline="") as handle:
        _write_header(handle, "steps")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(StepRow.columns())
        for record in sorted(records, key=lambda record: record.run_id):
            for row in record.rows:
                writer.writerow(row.to_csv_row())
    return path


def write_runs_csv(path, records):
    """Write one line per run with its status and number of steps."""

    with open(path, "w", newline="") as handle:
        _write_header(handle, "runs")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["run_id", "status", "steps", "final_time", "final_best_f", "message"])
        for record in sorted(records, key=lambda record: record.run_id):
            last = record.rows[-1] if record.rows else None
            writer.writerow([
                record.run_id,
                record.status,
                len(record.rows),
                format_float(last.time if last else None),
                format_float(last.best_f if last else None),
                record.message,
            ])
    return path


def summarize(records, columns=SUMMARY_COLUMNS, percentiles=SUMMARY_PERCENTILES):
    """Percentiles across runs of each column at each step.

    A run contributes to a step only while it is still running; missing values are
    ignored. Returns a list of dicts, one per step.
    """

    steps = max((len(record.rows) for record in records), default=0)
    summary = []
    for step in range(steps):
        rows = [record.rows[step] for record in records if len(record.rows) > step]
        entry = {"step": step, "runs": len(rows), "time": float(np.median([row.time for row in rows]))}
        for name in columns:
            values = np.array([getattr(row, name) for row in rows if getattr(row, name) is not None], dtype=float)
            for percentile in percentiles:
                entry[f"{name}_p{percentile}"] = float(np.percentile(values, percentile)) if values.size else None
        summary.append(entry)
    return summary


def write_summary_csv(path, records):
    """Write the 16th, 50th and 84th percentiles across runs of every column."""

    summary = summarize(records)
    header = ["step", "runs", "time"] + [f"{name}_p{p}" for name in SUMMARY_COLUMNS for p in SUMMARY_PERCENTILES]
    with open(path, "w", newline="") as handle:
        _write_header(handle, "summary", runs=len(records))
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for entry in summary:
            writer.writerow([entry["step"], entry["runs"]] + [format_float(entry[key]) for key in header[2:]])
    return path


def write_experiment_csv(folder, name, records):
    """Write the steps, runs and summary files of an experiment; return their paths."""

    os.makedirs(folder, exist_ok=True)
    paths = [
        write_steps_csv(os.path.join(folder, f"{name}-steps.csv"), records),
        write_runs_csv(os.path.join(folder, f"{name}-runs.csv"), records),
        write_summary_csv(os.path.join(folder, f"{name}-summary.csv"), records),
    ]
    log.info(f"Wrote {', '.join(paths)}")
    return paths


def write_rows_csv(path, kind, header, rows):
    """Write a generic table with the versioned header line."""

    with open(path, "w", newline="") as handle:
        _write_header(handle, kind)
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([value if isinstance(value, str) else format_float(value) for value in row])
    return path


def intrinsic_time_gaps(curves):
    """Largest gap between successive curves compared at common intrinsic times.

    `curves` is a list of (times, values) pairs ordered by decreasing step size; each
    curve is interpolated at the times of the coarsest one. Returns one gap per
    consecutive pair.
    """

    if len(curves) < 2:
        return []
    grid = np.asarray(curves[0][0], dtype=float)
    limit = min(float(np.max(times)) for times, _ in curves)
    grid = grid[grid <= limit]
    resampled = [np.interp(grid, np.asarray(times, dtype=float), np.asarray(values, dtype=float)) for times, values in curves]
    return [float(np.max(np.abs(b - a))) for a, b in zip(resampled, resampled[1:])]
