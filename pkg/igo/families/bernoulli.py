"""Bernoulli families on bitstrings, in probability and logit parametrizations."""

import logging

import numpy as np
from scipy import special

from ..errors import DegenerateUpdate, DomainError, RejectedInput
from ..settings import BERNOULLI_EPSILON
from ..utils import as_points, enumerate_bits, logit, sigmoid, softplus
from .base import Family

log = logging.getLogger("igo")


def _open_interval(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0) or np.any(theta >= 1.0):
        raise DomainError(f"Bernoulli parameters must lie strictly inside (0, 1), got {theta}.")
    return theta


def clamp_probabilities(theta):
    return np.clip(theta, BERNOULLI_EPSILON, 1.0 - BERNOULLI_EPSILON)


def bernoulli_grad_logdensity(theta, x):
    """Gradient of ln P_theta(x): x_i / theta_i - (1 - x_i) / (1 - theta_i)."""

    theta = _open_interval(theta)
    x = np.asarray(x, dtype=float)
    return x / theta - (1.0 - x) / (1.0 - theta)


def bernoulli_fisher(theta):
    """Diagonal Fisher matrix 1 / (theta_i (1 - theta_i))."""

    theta = _open_interval(theta)
    return np.diag(1.0 / (theta * (1.0 - theta)))


def bernoulli_igo_update(theta, ranked_samples, weights, dt):
    """IGO update of Bernoulli probabilities from samples sorted best first.

    theta' = (1 - w̄ dt) theta + dt * sum_j w_j x_(j), with w̄ the sum of the weights.
    With w_1 = 1 and all other weights zero this is the PBIL update toward the best
    sample with learning rate dt.
    """

    theta = np.asarray(theta, dtype=float)
    weights = np.asarray(weights, dtype=float)
    ranked_samples = np.asarray(ranked_samples, dtype=float)[: len(weights)]
    if len(weights) > len(ranked_samples):
        raise RejectedInput(f"{len(weights)} weights for {len(ranked_samples)} samples.")
    total = np.sum(weights)
    updated = (1.0 - total * dt) * theta + dt * (weights @ ranked_samples)
    return clamp_probabilities(updated)


class BernoulliFamily(Family):
    """Independent Bernoulli bits parametrized by their probabilities theta_i."""

    name = "bernoulli"
    capabilities = frozenset({"sample", "grad_log_density", "exact_fisher", "expectation_params", "enumerable"})

    def __init__(self, d, theta0=0.5):
        super().__init__(d)
        self.d = int(d)
        self.theta0 = float(theta0)

    def initial_theta(self, rng=None):
        return np.full(self.d, self.theta0)

    def sample(self, theta, n, rng):
        theta = self.check_theta(theta)
        return (rng.random((n, self.d)) < theta).astype(float)

    def grad_log_density(self, theta, points):
        return bernoulli_grad_logdensity(self.check_theta(theta), as_points(points, self.d))

    def log_density(self, theta, points):
        theta = self.check_theta(theta)
        points = as_points(points, self.d)
        return np.sum(special.xlogy(points, theta) + special.xlogy(1.0 - points, 1.0 - theta), axis=1)

    def exact_fisher(self, theta):
        return bernoulli_fisher(self.check_theta(theta))

    def natural_score(self, theta, points):
        # Finite on the boundary, where the Fisher matrix is not
        return as_points(points, self.d) - self.check_theta(theta)

    def enumerate(self, theta):
        theta = self.check_theta(theta)
        points = enumerate_bits(self.d)
        probabilities = np.prod(np.where(points == 1.0, theta, 1.0 - theta), axis=1)
        return points, probabilities

    def project(self, theta):
        return clamp_probabilities(theta)

    def rank_update(self, theta, samples, weights, dt):
        """Apply bernoulli_igo_update with per-sample RankedWeights."""

        order = weights.order if weights.order is not None else np.argsort(-weights.weights, kind="stable")
        return bernoulli_igo_update(theta, np.asarray(samples)[order], weights.weights[order], dt)

    def sufficient_statistics(self, points):
        return as_points(points, self.d)

    def to_expectation(self, theta):
        return self.check_theta(theta).copy()

    def from_expectation(self, expectation):
        expectation = self.check_theta(expectation)
        if np.any(expectation < 0.0) or np.any(expectation > 1.0):
            raise DegenerateUpdate(f"Bernoulli expectation parameters outside [0, 1]: {expectation}.")
        return clamp_probabilities(expectation)

    def statistics_covariance(self, theta):
        theta = self.check_theta(theta)
        return np.diag(theta * (1.0 - theta))

    def coordinate_maps(self):
        maps = super().coordinate_maps()
        maps["probability"] = maps["native"]
        maps["natural"] = (lambda theta: logit(clamp_probabilities(theta)), sigmoid)
        return maps


class LogitBernoulliFamily(Family):
    """Independent Bernoulli bits parametrized by logits, theta_i = 1 / (1 + exp(-theta~_i))."""

    name = "logit_bernoulli"
    capabilities = frozenset({"sample", "grad_log_density", "exact_fisher", "expectation_params", "enumerable"})

    def __init__(self, d, theta0=0.5):
        super().__init__(d)
        self.d = int(d)
        self.theta0 = float(theta0)

    def initial_theta(self, rng=None):
        return np.full(self.d, logit(self.theta0))

    def probabilities(self, theta):
        return sigmoid(self.check_theta(theta))

    def sample(self, theta, n, rng):
        return (rng.random((n, self.d)) < self.probabilities(theta)).astype(float)

    def grad_log_density(self, theta, points):
        return as_points(points, self.d) - self.probabilities(theta)

    def log_density(self, theta, points):
        theta = self.check_theta(theta)
        return as_points(points, self.d) @ theta - np.sum(softplus(theta))

    def exact_fisher(self, theta):
        p = self.probabilities(theta)
        return np.diag(p * (1.0 - p))

    def natural_score(self, theta, points):
        p = self.probabilities(theta)
        return (as_points(points, self.d) - p) / (p * (1.0 - p))

    def enumerate(self, theta):
        p = self.probabilities(theta)
        points = enumerate_bits(self.d)
        return points, np.prod(np.where(points == 1.0, p, 1.0 - p), axis=1)

    def sufficient_statistics(self, points):
        return as_points(points, self.d)

    def to_expectation(self, theta):
        return self.probabilities(theta)

    def from_expectation(self, expectation):
        expectation = np.asarray(expectation, dtype=float)
        if np.any(expectation < 0.0) or np.any(expectation > 1.0):
            raise DegenerateUpdate(f"Bernoulli expectation parameters outside [0, 1]: {expectation}.")
        return logit(clamp_probabilities(expectation))

    def statistics_covariance(self, theta):
        return self.exact_fisher(theta)

    def coordinate_maps(self):
        maps = super().coordinate_maps()
        maps["natural"] = maps["native"]
        maps["probability"] = (sigmoid, lambda p: logit(clamp_probabilities(p)))
        return maps
