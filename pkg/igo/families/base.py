"""Common contract of parametric distribution families."""

import logging

import numpy as np
from scipy import linalg

from ..errors import CapabilityError, RejectedInput
from ..fisher import FisherMatrix, invert

log = logging.getLogger("igo")


def _identity(vector):
    return np.array(vector, dtype=float)


class Family:
    """Parametric family of distributions P_theta on a search space.

    Parameters are flat float vectors of length dim_theta. Optional operations raise
    CapabilityError unless listed in `capabilities`.
    """

    name = "family"
    capabilities = frozenset({"sample", "grad_log_density"})

    def __init__(self, dim_theta):
        self.dim_theta = int(dim_theta)

    def __repr__(self):
        return f"{type(self).__name__}(dim_theta={self.dim_theta})"

    def supports(self, capability):
        return capability in self.capabilities

    def check_theta(self, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.dim_theta:
            raise RejectedInput(f"{self.name}: expected {self.dim_theta} parameters, got {theta.size}.")
        if not np.all(np.isfinite(theta)):
            raise RejectedInput(f"{self.name}: parameters must be finite.")
        return theta

    def initial_theta(self, rng=None):
        raise CapabilityError(f"{self.name} has no default initial parameters.")

    # Core contract
    def sample(self, theta, n, rng):
        raise CapabilityError(f"{self.name} cannot sample.")

    def grad_log_density(self, theta, points):
        raise CapabilityError(f"{self.name} has no log-density gradient.")

    def log_density(self, theta, points):
        raise CapabilityError(f"{self.name} has no tractable log-density.")

    def exact_fisher(self, theta):
        raise CapabilityError(f"{self.name} has no exact Fisher matrix.")

    def natural_score(self, theta, points):
        """Per-point natural gradient I(theta)^-1 d ln P(x) / d theta, one row per point."""

        inverse = invert(FisherMatrix(self.exact_fisher(theta)))
        return self.grad_log_density(theta, points) @ inverse

    def enumerate(self, theta):
        """Return every point of the space with its probability."""

        raise CapabilityError(f"{self.name} is not enumerable.")

    def observed(self, points):
        """Return the part of the sampled points seen by the objective."""

        return points

    def project(self, theta):
        """Map updated parameters back into the admissible domain."""

        return theta

    # Exponential family coordinates
    def sufficient_statistics(self, points):
        raise CapabilityError(f"{self.name} has no sufficient statistics.")

    def to_expectation(self, theta):
        raise CapabilityError(f"{self.name} has no expectation parameters.")

    def from_expectation(self, expectation):
        raise CapabilityError(f"{self.name} has no expectation parameters.")

    def statistics_covariance(self, theta):
        raise CapabilityError(f"{self.name} has no sufficient statistics.")

    def ml_estimate(self, points, weights):
        """Weighted maximum-likelihood parameters; weights must sum to one.

        For exponential families this is the empirical average of the sufficient
        statistics mapped back from expectation coordinates.
        """

        if not self.supports("expectation_params"):
            raise CapabilityError(f"{self.name} has no closed-form maximum-likelihood estimate.")
        weights = np.asarray(weights, dtype=float)
        return self.from_expectation(weights @ self.sufficient_statistics(points))

    def coordinate_maps(self):
        maps = {"native": (_identity, _identity)}
        if self.supports("expectation_params"):
            maps["expectation"] = (self.to_expectation, self.from_expectation)
        return maps

    def coordinates(self, name):
        """Return the (to, from) maps between native parameters and named coordinates."""

        maps = self.coordinate_maps()
        if name not in maps:
            raise CapabilityError(f"{self.name} has no '{name}' coordinates; known: {', '.join(sorted(maps))}.")
        return maps[name]


class ExpectationFamily(Family):
    """An exponential family parametrized by its expectation parameters T̄ = E[T(x)].

    In these coordinates the log-density gradient is Cov(T)^-1 (T(x) - T̄) and the
    Fisher matrix is Cov(T)^-1, so the natural gradient of a point is T(x) - T̄.
    """

    def __init__(self, base):
        if not base.supports("expectation_params"):
            raise CapabilityError(f"{base.name} has no expectation parameters.")
        super().__init__(base.dim_theta)
        self.base = base
        self.name = f"{base.name}_expectation"
        self.capabilities = frozenset(
            {"sample", "grad_log_density", "exact_fisher", "expectation_params"}
            | (base.capabilities & {"enumerable"})
        )

    def native(self, expectation):
        return self.base.from_expectation(self.check_theta(expectation))

    def initial_theta(self, rng=None):
        return self.base.to_expectation(self.base.initial_theta(rng))

    def sample(self, theta, n, rng):
        return self.base.sample(self.native(theta), n, rng)

    def grad_log_density(self, theta, points):
        theta = self.check_theta(theta)
        covariance = self.base.statistics_covariance(self.native(theta))
        centered = self.base.sufficient_statistics(points) - theta
        return linalg.solve(covariance, centered.T, assume_a="pos").T

    def log_density(self, theta, points):
        return self.base.log_density(self.native(theta), points)

    def exact_fisher(self, theta):
        covariance = self.base.statistics_covariance(self.native(theta))
        inverse = linalg.inv(covariance)
        return 0.5 * (inverse + inverse.T)

    def natural_score(self, theta, points):
        return self.base.sufficient_statistics(points) - self.check_theta(theta)

    def enumerate(self, theta):
        return self.base.enumerate(self.native(theta))

    def observed(self, points):
        return self.base.observed(points)

    def project(self, theta):
        return self.base.to_expectation(self.base.project(self.base.from_expectation(theta)))

    def sufficient_statistics(self, points):
        return self.base.sufficient_statistics(points)

    def to_expectation(self, theta):
        return self.check_theta(theta).copy()

    def from_expectation(self, expectation):
        expectation = self.check_theta(expectation)
        self.base.from_expectation(expectation)
        return expectation.copy()

    def statistics_covariance(self, theta):
        return self.base.statistics_covariance(self.native(theta))
