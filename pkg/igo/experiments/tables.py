"""Operator to tabulate critical step sizes and linear-function flow constants."""

import logging
import os

import numpy as np

from ..errors import ConfigError, RejectedInput
from ..flow import critical_dt, gaussian_linear_constants
from ..settings import get_output_folder
from ..utils import parse_floats, parse_params, parse_spec
from .records import write_rows_csv

log = logging.getLogger("igo")


DEFAULT_CRITICAL_GRID = tuple(np.round(np.arange(0.01, 1.0, 0.01), 2))
DEFAULT_QUANTILE_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def critical_dt_table(grid=DEFAULT_CRITICAL_GRID):
    """Rows (q, critical dt for j = 1, for j = 2)."""

    return ["q", "j1", "j2"], [[q, critical_dt(q, 1), critical_dt(q, 2)] for q in grid]


def linear_constants_table(d=1, grid=DEFAULT_QUANTILE_GRID):
    """Rows (q0, alpha, beta) of the isotropic Gaussian flow on a linear function."""

    rows = []
    for q0 in grid:
        constants = gaussian_linear_constants(q0, d)
        rows.append([q0, constants.alpha, constants.beta])
    return ["q0", "alpha", "beta"], rows


def _parse_grid(params, default):
    return tuple(parse_floats(params.pop("q"))) if "q" in params else default


def _critical_dt(params):
    return critical_dt_table(_parse_grid(params, DEFAULT_CRITICAL_GRID))


def _linear_constants(params):
    d = int(params.pop("d", 1))
    return linear_constants_table(d, _parse_grid(params, DEFAULT_QUANTILE_GRID))


TABLE_BUILDERS = {
    "critical_dt": _critical_dt,
    "linear_constants": _linear_constants,
}


def build_table(spec):
    """Build a table from `critical_dt`, `critical_dt:q=0.1,0.25` or `linear_constants:d=2`."""

    name, raw = parse_spec(spec)
    if name not in TABLE_BUILDERS:
        raise ConfigError(f"Unknown table '{name}'; known: {', '.join(sorted(TABLE_BUILDERS))}.")
    try:
        params = parse_params(raw)
        header, rows = TABLE_BUILDERS[name](params)
    except (RejectedInput, ValueError) as error:
        raise ConfigError(f"Invalid table '{spec}': {error}") from error
    if params:
        raise ConfigError(f"Unknown parameters for table '{name}': {', '.join(sorted(params))}.")
    return name, header, rows


def write_table(spec, output_folder=None):
    """Build a table and write it to `<name>.csv` in the output folder."""

    name, header, rows = build_table(spec)
    folder = output_folder or get_output_folder()
    os.makedirs(folder, exist_ok=True)
    path = write_rows_csv(os.path.join(folder, f"{name}.csv"), name, header, rows)
    log.info(f"Wrote {path}")
    return path, header, rows
