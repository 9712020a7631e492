"""Gaussian families and the CMA, EMNA, xNES and unified covariance updates.

Flat parameter order of the full-covariance family: mean m, then the row-major upper
triangle of C.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, stats

from ..errors import DegenerateUpdate, DomainError, RejectedInput
from ..settings import WEIGHT_SUM_TOLERANCE
from ..utils import as_points, upper_indices
from .base import Family

log = logging.getLogger("igo")


GAUSSIAN_STEP_KINDS = ("cma", "emna", "xnes", "unified")


@dataclass
class GaussianParams:
    """Mean vector, covariance matrix and, for xNES, the maintained square root A."""

    mean: np.ndarray
    cov: np.ndarray
    sqrt: Optional[np.ndarray] = None

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.cov.shape != (self.d, self.d):
            raise RejectedInput(f"Covariance of shape {self.cov.shape} for a mean of size {self.d}.")

    @property
    def d(self):
        return self.mean.size

    def square_root(self):
        """Return A with C = A A^T."""

        if self.sqrt is not None:
            return self.sqrt
        return _cholesky(self.cov, DomainError)


def _cholesky(matrix, error_class=DegenerateUpdate):
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as error:
        raise error_class(f"Covariance matrix is not positive-definite: {matrix.tolist()}") from error


def _symmetric_from_upper(vector, d):
    matrix = np.zeros((d, d))
    matrix[upper_indices(d)] = vector
    return matrix + np.triu(matrix, 1).T


def _weights_array(weights):
    return np.asarray(getattr(weights, "weights", weights), dtype=float)


def gaussian_expectation_params(params):
    """Return the expectation parameters (m, C + m m^T)."""

    return params.mean.copy(), params.cov + np.outer(params.mean, params.mean)


def gaussian_from_expectation(mean, second_moment):
    """Inverse of gaussian_expectation_params."""

    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(second_moment, dtype=float)) - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    _cholesky(cov)
    return GaussianParams(mean, cov)


def gaussian_ml(samples, weights):
    """Weighted mean and covariance of the samples around that mean; weights sum to one."""

    samples = np.asarray(samples, dtype=float)
    mean = weights @ samples
    centered = samples - mean
    return mean, (weights[:, np.newaxis] * centered).T @ centered


def gaussian_step(kind, params, samples, weights, dt=None, eta_m=None, eta_c=None, j=1):
    """One update of a Gaussian search distribution.

    cma: m' = m + eta_m sum w (x - m), C' = C + eta_c sum w ((x - m)(x - m)^T - C)
    emna: mean and covariance of the weighted elite
    xnes: A' = A expm(eta_c / 2 sum w (z z^T - I)) with z = A^-1 (x - m)
    unified: C' = (1 - dt) C + dt C* + dt (1 - dt)^j (m* - m)(m* - m)^T, j = 0, 1, 2 or inf
    """

    if kind not in GAUSSIAN_STEP_KINDS:
        raise RejectedInput(f"Unknown Gaussian step '{kind}'.")
    samples = as_points(samples, params.d)
    weights = _weights_array(weights)
    eta_m = dt if eta_m is None else eta_m
    eta_c = dt if eta_c is None else eta_c
    if kind != "emna" and (eta_m is None or eta_c is None):
        raise RejectedInput(f"Gaussian step '{kind}' needs dt or both learning rates.")

    mean, cov = params.mean, params.cov
    centered = samples - mean
    total = float(np.sum(weights))
    if kind in ("emna", "unified") and abs(total) <= WEIGHT_SUM_TOLERANCE:
        error_message = f"Gaussian step '{kind}' needs weights with a non-zero sum, got {total}."
        log.error(error_message)
        raise DegenerateUpdate(error_message)

    if kind == "cma":
        new_mean = mean + eta_m * (weights @ centered)
        new_cov = cov + eta_c * ((weights[:, np.newaxis] * centered).T @ centered - total * cov)
        result = GaussianParams(new_mean, 0.5 * (new_cov + new_cov.T))

    elif kind == "emna":
        elite_mean, elite_cov = gaussian_ml(samples, weights / total)
        result = GaussianParams(elite_mean, elite_cov)

    elif kind == "xnes":
        root = params.square_root()
        z = linalg.solve(root, centered.T).T
        gradient = (weights[:, np.newaxis] * z).T @ z - total * np.eye(params.d)
        new_root = root @ linalg.expm(0.5 * eta_c * gradient)
        new_mean = mean + eta_m * (weights @ centered)
        return GaussianParams(new_mean, new_root @ new_root.T, sqrt=new_root)

    else:
        if dt is None or not 0.0 < dt <= 1.0:
            raise RejectedInput(f"Unified update needs dt in (0, 1], got {dt}.")
        elite_mean, elite_cov = gaussian_ml(samples, weights / total)
        shift = elite_mean - mean
        cross = 0.0 if math.isinf(float(j)) else dt * (1.0 - dt) ** float(j)
        new_cov = (1.0 - dt) * cov + dt * elite_cov + cross * np.outer(shift, shift)
        result = GaussianParams((1.0 - dt) * mean + dt * elite_mean, new_cov)

    _cholesky(result.cov)
    return result


class GaussianFamily(Family):
    """Gaussian distributions with full covariance, parametrized by (m, upper triangle of C)."""

    name = "gaussian"
    capabilities = frozenset({"sample", "grad_log_density", "exact_fisher", "expectation_params"})

    def __init__(self, d, mean0=None, sigma0=1.0):
        self.d = int(d)
        self.upper = upper_indices(self.d)
        super().__init__(self.d + len(self.upper[0]))
        self.mean0 = np.zeros(self.d) if mean0 is None else np.asarray(mean0, dtype=float)
        self.sigma0 = float(sigma0)

    def initial_theta(self, rng=None):
        return self.theta_from_params(GaussianParams(self.mean0, self.sigma0 ** 2 * np.eye(self.d)))

    def params_from_theta(self, theta):
        theta = self.check_theta(theta)
        return GaussianParams(theta[: self.d], _symmetric_from_upper(theta[self.d:], self.d))

    def theta_from_params(self, params):
        return np.concatenate((params.mean, params.cov[self.upper]))

    def sample(self, theta, n, rng):
        params = self.params_from_theta(theta)
        root = _cholesky(params.cov, DomainError)
        return params.mean + rng.standard_normal((n, self.d)) @ root.T

    def _basis(self):
        """Symmetric basis matrices E_ij matching the upper triangle coordinates."""

        basis = []
        for i, j in zip(*self.upper):
            matrix = np.zeros((self.d, self.d))
            matrix[i, j] = matrix[j, i] = 1.0
            basis.append(matrix)
        return basis

    def grad_log_density(self, theta, points):
        params = self.params_from_theta(theta)
        points = as_points(points, self.d)
        precision = linalg.inv(params.cov)
        scaled = (points - params.mean) @ precision

        # d/dC of ln P = (P y y^T P - P) / 2, off-diagonal coordinates counted twice
        outer = 0.5 * (scaled[:, :, np.newaxis] * scaled[:, np.newaxis, :] - precision)
        doubling = np.where(self.upper[0] == self.upper[1], 1.0, 2.0)
        return np.hstack((scaled, outer[:, self.upper[0], self.upper[1]] * doubling))

    def log_density(self, theta, points):
        params = self.params_from_theta(theta)
        return np.atleast_1d(stats.multivariate_normal(params.mean, params.cov).logpdf(as_points(points, self.d)))

    def exact_fisher(self, theta):
        params = self.params_from_theta(theta)
        precision = linalg.inv(params.cov)
        basis = self._basis()
        size = len(basis)

        # Block diagonal: P for the mean, tr(P E_a P E_b) / 2 for the covariance
        fisher = np.zeros((self.dim_theta, self.dim_theta))
        fisher[: self.d, : self.d] = precision
        products = [precision @ matrix for matrix in basis]
        for a in range(size):
            for b in range(a, size):
                value = 0.5 * np.trace(products[a] @ products[b])
                fisher[self.d + a, self.d + b] = fisher[self.d + b, self.d + a] = value
        return fisher

    def natural_score(self, theta, points):
        params = self.params_from_theta(theta)
        centered = as_points(points, self.d) - params.mean
        outer = centered[:, :, np.newaxis] * centered[:, np.newaxis, :] - params.cov
        return np.hstack((centered, outer[:, self.upper[0], self.upper[1]]))

    def sufficient_statistics(self, points):
        points = as_points(points, self.d)
        outer = points[:, :, np.newaxis] * points[:, np.newaxis, :]
        return np.hstack((points, outer[:, self.upper[0], self.upper[1]]))

    def ml_estimate(self, points, weights):
        # Centered form; equal to the EMNA update bit for bit
        mean, cov = gaussian_ml(as_points(points, self.d), np.asarray(weights, dtype=float))
        _cholesky(cov)
        return self.theta_from_params(GaussianParams(mean, cov))

    def to_expectation(self, theta):
        mean, second_moment = gaussian_expectation_params(self.params_from_theta(theta))
        return np.concatenate((mean, second_moment[self.upper]))

    def from_expectation(self, expectation):
        expectation = self.check_theta(expectation)
        params = gaussian_from_expectation(
            expectation[: self.d], _symmetric_from_upper(expectation[self.d:], self.d)
        )
        return self.theta_from_params(params)

    def statistics_covariance(self, theta):
        """Cov(T, T) for T = (x, upper(x x^T)), from Gaussian moment identities."""

        params = self.params_from_theta(theta)
        m, c = params.mean, params.cov
        rows, cols = self.upper
        size = len(rows)
        covariance = np.zeros((self.dim_theta, self.dim_theta))
        covariance[: self.d, : self.d] = c

        # Cov(x_i, x_k x_l) = m_k C_il + m_l C_ik
        for a in range(size):
            k, l = rows[a], cols[a]
            column = m[k] * c[:, l] + m[l] * c[:, k]
            covariance[: self.d, self.d + a] = column
            covariance[self.d + a, : self.d] = column

        # Cov(x_i x_j, x_k x_l)
        for a in range(size):
            i, j = rows[a], cols[a]
            for b in range(a, size):
                k, l = rows[b], cols[b]
                value = (
                    c[i, k] * c[j, l] + c[i, l] * c[j, k]
                    + m[i] * m[k] * c[j, l] + m[i] * m[l] * c[j, k]
                    + m[j] * m[k] * c[i, l] + m[j] * m[l] * c[i, k]
                )
                covariance[self.d + a, self.d + b] = covariance[self.d + b, self.d + a] = value
        return covariance

    def natural_parameters(self, theta):
        params = self.params_from_theta(theta)
        precision = linalg.inv(params.cov)
        return np.concatenate((precision @ params.mean, -0.5 * precision[self.upper]))

    def from_natural_parameters(self, natural):
        natural = self.check_theta(natural)
        precision = -2.0 * _symmetric_from_upper(natural[self.d:], self.d)
        _cholesky(precision)
        cov = linalg.inv(precision)
        return self.theta_from_params(GaussianParams(cov @ natural[: self.d], 0.5 * (cov + cov.T)))

    def coordinate_maps(self):
        maps = super().coordinate_maps()
        maps["mean_covariance"] = maps["native"]
        maps["natural"] = (self.natural_parameters, self.from_natural_parameters)
        return maps


class IsotropicGaussianFamily(Family):
    """Gaussian distributions N(m, sigma^2 I) parametrized by (m, ln sigma)."""

    name = "isotropic_gaussian"
    capabilities = frozenset({"sample", "grad_log_density", "exact_fisher", "expectation_params"})

    def __init__(self, d, mean0=None, sigma0=1.0):
        super().__init__(int(d) + 1)
        self.d = int(d)
        self.mean0 = np.zeros(self.d) if mean0 is None else np.asarray(mean0, dtype=float)
        self.sigma0 = float(sigma0)

    def initial_theta(self, rng=None):
        return np.append(self.mean0, math.log(self.sigma0))

    def split(self, theta):
        theta = self.check_theta(theta)
        return theta[: self.d], math.exp(theta[self.d])

    def sample(self, theta, n, rng):
        mean, sigma = self.split(theta)
        return mean + sigma * rng.standard_normal((n, self.d))

    def grad_log_density(self, theta, points):
        mean, sigma = self.split(theta)
        centered = as_points(points, self.d) - mean
        squared = np.sum(centered ** 2, axis=1) / sigma ** 2
        return np.hstack((centered / sigma ** 2, (squared - self.d)[:, np.newaxis]))

    def log_density(self, theta, points):
        mean, sigma = self.split(theta)
        centered = as_points(points, self.d) - mean
        return (
            -0.5 * self.d * math.log(2.0 * math.pi)
            - self.d * math.log(sigma)
            - np.sum(centered ** 2, axis=1) / (2.0 * sigma ** 2)
        )

    def exact_fisher(self, theta):
        _, sigma = self.split(theta)
        return np.diag(np.append(np.full(self.d, 1.0 / sigma ** 2), 2.0 * self.d))

    def natural_score(self, theta, points):
        mean, sigma = self.split(theta)
        centered = as_points(points, self.d) - mean
        spread = 0.5 * (np.sum(centered ** 2, axis=1) / (self.d * sigma ** 2) - 1.0)
        return np.hstack((centered, spread[:, np.newaxis]))

    def sufficient_statistics(self, points):
        points = as_points(points, self.d)
        return np.hstack((points, np.sum(points ** 2, axis=1)[:, np.newaxis]))

    def to_expectation(self, theta):
        mean, sigma = self.split(theta)
        return np.append(mean, self.d * sigma ** 2 + mean @ mean)

    def from_expectation(self, expectation):
        expectation = self.check_theta(expectation)
        mean = expectation[: self.d]
        variance = (expectation[self.d] - mean @ mean) / self.d
        if not variance > 0.0:
            raise DegenerateUpdate(f"Isotropic variance must be positive, got {variance}.")
        return np.append(mean, 0.5 * math.log(variance))

    def statistics_covariance(self, theta):
        mean, sigma = self.split(theta)
        variance = sigma ** 2
        covariance = np.zeros((self.dim_theta, self.dim_theta))
        covariance[: self.d, : self.d] = variance * np.eye(self.d)
        covariance[: self.d, self.d] = covariance[self.d, : self.d] = 2.0 * variance * mean
        covariance[self.d, self.d] = 2.0 * self.d * variance ** 2 + 4.0 * variance * (mean @ mean)
        return covariance
