"""Operator to integrate the IGO flow of a configuration and write its trajectory."""

import logging
import os

import numpy as np

from ..flow import distribution_quantile, flow_rhs, flow_speed, integrate, surrogate_rhs
from ..objectives import Linear
from ..settings import get_output_folder
from ..utils import STREAM_DIAGNOSTICS, STREAM_INIT, substream
from ..weights import parse_scheme
from .records import write_rows_csv
from .runner import build_family, build_objective

log = logging.getLogger("igo")


def flow_direction(family, objective, scheme, config):
    """Exact right-hand side when the family is enumerable, surrogate otherwise."""

    if family.supports("enumerable"):
        return lambda theta: flow_rhs(family, theta, objective, scheme)
    log.info(f"{family.name} is not enumerable, using a {config.surrogate_samples}-sample surrogate flow.")
    return lambda theta: surrogate_rhs(family, theta, objective, scheme, config.surrogate_samples, seed=config.seed)


def run_flow(config, output_folder=None, write=True):
    """Integrate the flow from the family's initial parameters.

    Returns the rows written at each checkpoint: t, theta, quantile of f, speed and,
    for Bernoulli families on linear functions, the monotone quantity sum alpha_i dtheta_i/dt.
    """

    init_rng = substream(config.seed, 0, 0, STREAM_INIT)
    family = build_family(config)
    objective = build_objective(config, init_rng)
    if objective.noisy:
        log.warning("The flow of a noisy objective is integrated on its noiseless part.")
        objective = objective.base
    scheme = parse_scheme(config.scheme, config.population)
    rhs = flow_direction(family, objective, scheme, config)

    trajectory = integrate(
        rhs, family.initial_theta(init_rng), config.horizon, config.h, method=config.method, project=family.project
    )
    every = max(1, (len(trajectory) - 1) // config.checkpoints)
    checkpoints = trajectory[::every]
    if checkpoints[-1] is not trajectory[-1]:
        checkpoints.append(trajectory[-1])

    sample_rng = substream(config.seed, 0, 0, STREAM_DIAGNOSTICS)
    rows = []
    for state in checkpoints:
        direction = rhs(state.theta)
        samples = None
        if not family.supports("enumerable"):
            samples = family.sample(state.theta, config.surrogate_samples, sample_rng)
        quantile = distribution_quantile(family, state.theta, objective, scheme.quantile, samples=samples)
        speed = flow_speed(family, state.theta, direction) if family.supports("exact_fisher") else None
        lyapunov = None
        if isinstance(objective, Linear) and family.name == "bernoulli":
            lyapunov = float(objective.alpha @ direction)
        rows.append([state.t] + list(state.theta) + [quantile, speed, lyapunov])

    header = ["t"] + [f"theta_{index}" for index in range(family.dim_theta)] + ["quantile_f", "speed", "lyapunov"]
    if write:
        folder = output_folder or get_output_folder()
        os.makedirs(folder, exist_ok=True)
        path = write_rows_csv(os.path.join(folder, f"{config.name}-flow.csv"), "flow", header, rows)
        log.info(f"Wrote {path}")
    return header, np.array(rows, dtype=float)
