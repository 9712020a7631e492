"""Step engines of the IGO algorithm family and their per-step diagnostics.

All engines are pure functions of (family, theta, samples, weights, dt) and return new
parameters; the samples are the points returned by `family.sample`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapabilityError, DegenerateUpdate, RejectedInput, WeightNormalizationError
from .fisher import FisherMatrix, exact_fisher, invert
from .settings import WEIGHT_SUM_TOLERANCE
from .weights import RankedWeights

log = logging.getLogger("igo")


LOG_RATIO_CLIP = 700.0


def weights_array(weights):
    """Return the per-sample weights of RankedWeights or of a plain vector."""

    return np.asarray(getattr(weights, "weights", weights), dtype=float).ravel()


def _check_batch(samples, weights):
    weights = weights_array(weights)
    samples = np.asarray(samples, dtype=float)
    if len(samples) != weights.size:
        raise RejectedInput(f"{weights.size} weights for {len(samples)} samples.")
    return samples, weights


def _check_dt(dt):
    dt = float(dt)
    if not math.isfinite(dt) or dt < 0.0:
        raise RejectedInput(f"Step size must be a non-negative finite number, got {dt}.")
    return dt


def natural_gradient(family, theta, samples, weights, fisher=None, ridge=None):
    """Estimate I(theta)^-1 sum_i w_i d ln P(x_i) / d theta.

    Uses the exact Fisher matrix unless an estimate is given.
    """

    samples, weights = _check_batch(samples, weights)
    if fisher is None:
        fisher = exact_fisher(family, theta)
    gradient = weights @ family.grad_log_density(theta, samples)
    return invert(fisher, ridge=ridge) @ gradient


def vanilla_gradient(family, theta, samples, weights):
    """Plain gradient sum_i w_i d ln P(x_i) / d theta in the family's own parametrization."""

    samples, weights = _check_batch(samples, weights)
    return weights @ family.grad_log_density(theta, samples)


def igo_step(family, theta, samples, weights, dt, fisher=None, ridge=None):
    """One IGO update theta + dt * I(theta)^-1 sum_i w_i d ln P(x_i) / d theta."""

    theta = family.check_theta(theta)
    dt = _check_dt(dt)
    direction = natural_gradient(family, theta, samples, weights, fisher=fisher, ridge=ridge)
    return family.project(theta + dt * direction)


def vanilla_step(family, theta, samples, weights, dt):
    """The IGO update with the inverse Fisher matrix replaced by the identity."""

    theta = family.check_theta(theta)
    dt = _check_dt(dt)
    return family.project(theta + dt * vanilla_gradient(family, theta, samples, weights))


def normalize_weights(weights, strict=True):
    """Return weights summing to one, rejecting or rescaling other weights."""

    weights = weights_array(weights)
    total = float(np.sum(weights))
    if abs(total - 1.0) <= WEIGHT_SUM_TOLERANCE:
        return weights
    if strict:
        error_message = f"Weights must sum to 1 for a maximum-likelihood update, got {total}."
        log.error(error_message)
        raise WeightNormalizationError(error_message)
    if total == 0.0:
        raise WeightNormalizationError("Cannot rescale weights summing to zero.")
    log.warning(f"Rescaling weights summing to {total} to sum to 1.")
    return weights / total


def igo_ml_step(family, theta, samples, weights, dt, strict=True):
    """IGO-ML update: blend the expectation parameters toward the weighted statistics.

    T' = (1 - dt) T(theta) + dt sum_i w_i T(x_i), returned in the family's parameters.
    """

    if not family.supports("expectation_params"):
        raise CapabilityError(f"{family.name} has no expectation parameters.")
    dt = float(dt)
    if not 0.0 < dt <= 1.0:
        raise RejectedInput(f"IGO-ML step size must be in (0, 1], got {dt}.")
    samples, _ = _check_batch(samples, weights)
    weights = normalize_weights(weights, strict=strict)

    current = family.to_expectation(theta)
    target = weights @ family.sufficient_statistics(samples)
    return family.from_expectation((1.0 - dt) * current + dt * target)


def elite_weights(values, elite_fraction):
    """Weights 1/N_e on the N_e = ceil(q N) best samples, ties broken by index."""

    values = np.asarray(values, dtype=float).ravel()
    if not 0.0 < elite_fraction <= 1.0:
        raise RejectedInput(f"Elite fraction must be in (0, 1], got {elite_fraction}.")
    if not np.all(np.isfinite(values)):
        raise RejectedInput("Objective values must be finite.")

    count = max(1, int(math.ceil(elite_fraction * values.size - 1e-9)))
    order = np.argsort(values, kind="stable")
    weights = np.zeros(values.size)
    weights[order[:count]] = 1.0 / count
    return RankedWeights(weights=weights, order=order)


def cem_step(family, samples, values, elite_fraction):
    """Cross-entropy method: maximum-likelihood fit to the elite samples."""

    samples = np.asarray(samples, dtype=float)
    weights = elite_weights(values, elite_fraction)
    try:
        return family.ml_estimate(samples, weights.weights)
    except DegenerateUpdate:
        log.error(f"{family.name}: degenerate fit to {int(np.count_nonzero(weights.weights))} elite samples.")
        raise


def smoothed_cem_step(family, theta, samples, weights, alpha, parametrization="expectation", strict=True):
    """Blend (1 - alpha) theta + alpha theta_ML in the given coordinates."""

    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise RejectedInput(f"Smoothing factor must be in (0, 1], got {alpha}.")
    to_coordinates, from_coordinates = family.coordinates(parametrization)
    samples, _ = _check_batch(samples, weights)
    weights = normalize_weights(weights, strict=strict)

    estimate = family.ml_estimate(samples, weights)
    if alpha == 1.0:
        return estimate
    blended = (1.0 - alpha) * to_coordinates(theta) + alpha * to_coordinates(estimate)
    return from_coordinates(blended)


@dataclass
class StepReport:
    """Size and direction of one update, measured in the Fisher metric."""

    theta_before: np.ndarray
    theta_after: np.ndarray
    step: np.ndarray
    fisher_step_norm: float
    kl_estimate: Optional[float] = None
    kl_standard_error: Optional[float] = None
    kl_sample_size: Optional[int] = None
    cosine_with_previous: Optional[float] = None


def kl_divergence(family, theta_after, theta_before, samples=None):
    """KL(P_after || P_before) with its standard error.

    With samples of P_before this averages r ln r - r + 1 over r = P_after / P_before,
    otherwise it sums over the enumerated space (standard error zero).
    """

    if samples is None:
        points, probabilities = family.enumerate(theta_after)
        support = probabilities > 0.0
        log_ratio = family.log_density(theta_after, points[support]) - family.log_density(theta_before, points[support])
        return float(probabilities[support] @ log_ratio), 0.0

    log_ratio = family.log_density(theta_after, samples) - family.log_density(theta_before, samples)
    log_ratio = np.minimum(log_ratio, LOG_RATIO_CLIP)
    ratio = np.exp(log_ratio)
    terms = ratio * log_ratio - ratio + 1.0
    error = float(np.std(terms, ddof=1) / math.sqrt(len(terms))) if len(terms) > 1 else None
    return float(np.mean(terms)), error


def step_diagnostics(
    family, theta_before, theta_after, previous_step=None, fisher=None, samples=None, rng=None, sample_count=None
):
    """Measure an update: Fisher norm, KL divergence and cosine with the previous step.

    The KL divergence uses the given samples of P_before, or `sample_count` fresh ones
    drawn from `rng`, or exact enumeration when the family allows it.
    """

    theta_before = family.check_theta(theta_before)
    theta_after = family.check_theta(theta_after)
    if fisher is None:
        fisher = exact_fisher(family, theta_before)
    elif not isinstance(fisher, FisherMatrix):
        fisher = FisherMatrix(fisher)

    step = theta_after - theta_before
    norm = fisher.norm(step)

    # Cosine in the metric at theta_before
    cosine = None
    if previous_step is not None:
        previous_step = np.asarray(previous_step, dtype=float)
        previous_norm = fisher.norm(previous_step)
        if norm > 0.0 and previous_norm > 0.0:
            cosine = float(np.clip((previous_step @ fisher.matrix @ step) / (previous_norm * norm), -1.0, 1.0))

    if samples is None and rng is not None and sample_count:
        samples = family.sample(theta_before, int(sample_count), rng)

    kl, kl_error, kl_count = None, None, None
    try:
        if samples is not None:
            kl, kl_error = kl_divergence(family, theta_after, theta_before, samples)
            kl_count = len(samples)
        elif family.supports("enumerable"):
            kl, kl_error = kl_divergence(family, theta_after, theta_before)
    except CapabilityError as error:
        log.debug(f"No KL estimate for {family.name}: {error}")

    return StepReport(
        theta_before=theta_before,
        theta_after=theta_after,
        step=step,
        fisher_step_norm=norm,
        kl_estimate=kl,
        kl_standard_error=kl_error,
        kl_sample_size=kl_count,
        cosine_with_previous=cosine,
    )


def default_beta(population, dim_theta):
    return min(population / dim_theta, 0.5)


def adapt_dt(report, dt, beta=0.5, sign_only=False):
    """Scale dt by exp(beta cos / 2), or by exp(+-beta / 2) on the sign of the cosine."""

    cosine = report.cosine_with_previous
    if cosine is None:
        return dt
    if sign_only:
        cosine = float(np.sign(cosine))
    return dt * math.exp(beta * cosine / 2.0)


class NoisyLiftedFamily:
    """The product of a family with an independent uniform variable omega on [0, 1].

    Points are the base points with omega appended as a last column. Omega carries no
    parameter, so gradients, Fisher matrices and densities are those of the base.
    """

    def __init__(self, base):
        self.base = base
        self.name = f"{base.name}_noisy"
        self.dim_theta = base.dim_theta
        self.capabilities = frozenset(base.capabilities - {"enumerable"})

    def __repr__(self):
        return f"NoisyLiftedFamily({self.base!r})"

    def __getattr__(self, attribute):
        # Parameter-only operations are the base family's
        return getattr(self.base, attribute)

    def supports(self, capability):
        return capability in self.capabilities

    @staticmethod
    def split(points):
        points = np.asarray(points, dtype=float)
        return points[:, :-1], points[:, -1]

    def sample(self, theta, n, rng):
        points = self.base.sample(theta, n, rng)
        omega = rng.random(n)
        return np.hstack((points, omega[:, np.newaxis]))

    def observed(self, points):
        base_points, omega = self.split(points)
        return np.hstack((self.base.observed(base_points), omega[:, np.newaxis]))

    def grad_log_density(self, theta, points):
        return self.base.grad_log_density(theta, self.split(points)[0])

    def log_density(self, theta, points):
        return self.base.log_density(theta, self.split(points)[0])

    def natural_score(self, theta, points):
        return self.base.natural_score(theta, self.split(points)[0])

    def sufficient_statistics(self, points):
        return self.base.sufficient_statistics(self.split(points)[0])

    def ml_estimate(self, points, weights):
        return self.base.ml_estimate(self.split(points)[0], weights)

    def enumerate(self, theta):
        raise CapabilityError(f"{self.name} has a continuous noise coordinate.")


def lift_noisy(family):
    """Return the family on X x [0, 1] whose last coordinate is the noise seed."""

    return NoisyLiftedFamily(family)
