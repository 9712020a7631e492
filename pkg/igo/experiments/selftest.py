"""Operator to re-evaluate the worked examples of the toolkit and report each check."""

import logging
import math

import numpy as np

from .. import core
from ..families import BernoulliFamily, GaussianFamily
from ..families.gaussian import GaussianParams, gaussian_step
from ..flow import critical_dt, gaussian_linear_constants
from ..weights import WeightScheme, compute_quantile_weights

log = logging.getLogger("igo")


def _close(actual, expected, tolerance=1e-9):
    return bool(np.allclose(np.asarray(actual, dtype=float), np.asarray(expected, dtype=float), rtol=0.0, atol=tolerance))


def check_distinct_weights():
    weights = compute_quantile_weights([3, 1, 4, 2], WeightScheme.truncation(0.5)).weights
    return _close(weights, [0.0, 0.25, 0.0, 0.25]), weights


def check_tied_weights():
    weights = compute_quantile_weights([5, 5], WeightScheme.truncation(0.5)).weights
    return _close(weights, [0.25, 0.25]), weights


def check_bernoulli_igo_step():
    theta = core.igo_step(BernoulliFamily(1), np.array([0.5]), np.array([[1.0]]), np.array([1.0]), 0.1)
    return _close(theta, [0.55]), theta


def check_gaussian_igo_ml_step():
    family = GaussianFamily(1)
    theta = core.igo_ml_step(family, np.array([0.0, 1.0]), np.array([[1.0]]), np.array([1.0]), 0.5)
    return _close(theta, [0.5, 0.75]), theta


def check_smoothed_cem_step():
    family = GaussianFamily(1)
    samples = np.array([[0.8], [1.2]])
    theta = core.smoothed_cem_step(family, np.array([0.0, 1.0]), samples, np.array([0.5, 0.5]), 0.5, "mean_covariance")
    return _close(theta, [0.5, 0.52]), theta


def check_unified_ladder():
    params = GaussianParams(np.zeros(1), np.eye(1))
    variances = [
        float(gaussian_step("unified", params, np.array([[1.0]]), np.array([1.0]), dt=0.5, j=j).cov[0, 0])
        for j in (0, 1, math.inf)
    ]
    return _close(variances, [1.0, 0.75, 0.5], 1e-15), variances


def check_bernoulli_kl():
    kl, _ = core.kl_divergence(BernoulliFamily(1), np.array([0.55]), np.array([0.5]))
    expected = 0.55 * math.log(1.1) + 0.45 * math.log(0.9)
    return _close(kl, expected, 1e-15), kl


def check_adapt_dt():
    report = core.step_diagnostics(
        BernoulliFamily(1), np.array([0.5]), np.array([0.55]), previous_step=np.array([0.05])
    )
    dt = core.adapt_dt(report, 0.1, beta=0.5)
    return _close(dt, 0.1 * math.exp(0.25), 1e-12), dt


def check_critical_dt():
    value = critical_dt(0.25, 1)
    return abs(value - 0.5307) < 5e-4, value


def check_linear_constants():
    constants = gaussian_linear_constants(0.5, 1)
    return _close(constants.beta, -1.0 / math.sqrt(2.0 * math.pi), 1e-12), constants.beta


CHECKS = {
    "distinct quantile weights": check_distinct_weights,
    "tied quantile weights": check_tied_weights,
    "bernoulli igo step": check_bernoulli_igo_step,
    "gaussian igo-ml step": check_gaussian_igo_ml_step,
    "smoothed cem step": check_smoothed_cem_step,
    "unified covariance ladder": check_unified_ladder,
    "bernoulli kl divergence": check_bernoulli_kl,
    "step size adaptation": check_adapt_dt,
    "critical dt at q=0.25": check_critical_dt,
    "linear flow beta at q0=0.5": check_linear_constants,
}


def run_selftest(out=print):
    """Run every check, print one line each and return the number of failures."""

    failures = 0
    for name, check in CHECKS.items():
        try:
            passed, value = check()
        except Exception as error:
            log.error(f"Self-test '{name}' raised {error!r}")
            passed, value = False, error
        failures += not passed
        out(f"{'ok' if passed else 'FAIL'}  {name}: {value}")
    return failures
