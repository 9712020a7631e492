"""Restricted Boltzmann machines as search distributions on bitstrings.

Energy E(x, h) = -a.x - b.h - x^T W h and P(x, h) = exp(-E) / Z. Flat parameter order:
visible biases a, hidden biases b, then W row-major. The joint family samples (x, h)
and is an exponential family with statistics T = (x, h, x ⊗ h); the marginal family
samples x only.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import CapabilityError, RejectedInput
from ..settings import ENUMERATION_CUTOFF, GIBBS_BURN_IN
from ..utils import as_points, enumerate_bits, sigmoid, softplus
from .base import Family

log = logging.getLogger("igo")


@dataclass
class RbmParams:
    """Visible biases a, hidden biases b and weights W of shape (n_x, n_h)."""

    a: np.ndarray
    b: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.W = np.asarray(self.W, dtype=float).reshape(self.a.size, self.b.size)
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.W))):
            raise RejectedInput("RBM parameters must be finite.")

    @property
    def n_x(self):
        return self.a.size

    @property
    def n_h(self):
        return self.b.size

    @property
    def dim_theta(self):
        return self.n_x + self.n_h + self.n_x * self.n_h

    def to_vector(self):
        return np.concatenate((self.a, self.b, self.W.ravel()))

    @classmethod
    def from_vector(cls, vector, n_x, n_h):
        vector = np.asarray(vector, dtype=float).ravel()
        if vector.size != n_x + n_h + n_x * n_h:
            raise RejectedInput(f"Expected {n_x + n_h + n_x * n_h} RBM parameters, got {vector.size}.")
        return cls(vector[:n_x], vector[n_x:n_x + n_h], vector[n_x + n_h:].reshape(n_x, n_h))

    @classmethod
    def zeros(cls, n_x, n_h):
        return cls(np.zeros(n_x), np.zeros(n_h), np.zeros((n_x, n_h)))


@dataclass(frozen=True)
class GibbsSettings:
    """Gibbs sampler settings; by default one independent chain per sample."""

    burn_in: int = GIBBS_BURN_IN
    thinning: int = 1
    chains: int = None


def _check_enumerable(params):
    if params.n_x + params.n_h > ENUMERATION_CUTOFF:
        raise CapabilityError(
            f"RBM with {params.n_x} + {params.n_h} units exceeds the enumeration cutoff {ENUMERATION_CUTOFF}."
        )


def rbm_energy(params, x, h):
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    return -(x @ params.a) - (h @ params.b) - np.sum((x @ params.W) * h, axis=-1)


def rbm_conditionals(params, x):
    """P(h_j = 1 | x) for every hidden unit."""

    return sigmoid(params.b + np.asarray(x, dtype=float) @ params.W)


def rbm_visible_conditionals(params, h):
    """P(x_i = 1 | h) for every visible unit."""

    return sigmoid(params.a + np.asarray(h, dtype=float) @ params.W.T)


def rbm_log_partition(params):
    """ln Z by enumerating the smaller layer and summing the other one out."""

    _check_enumerable(params)
    if params.n_h <= params.n_x:
        hidden = enumerate_bits(params.n_h)
        terms = hidden @ params.b + np.sum(softplus(params.a + hidden @ params.W.T), axis=1)
    else:
        visible = enumerate_bits(params.n_x)
        terms = visible @ params.a + np.sum(softplus(params.b + visible @ params.W), axis=1)
    return float(logsumexp(terms))


def rbm_log_density(params, x, h):
    """Exact ln P(x, h)."""

    return -rbm_energy(params, x, h) - rbm_log_partition(params)


def rbm_marginal_log_density(params, x):
    """Exact ln P(x) with the hidden layer summed out."""

    x = np.asarray(x, dtype=float)
    free = x @ params.a + np.sum(softplus(params.b + x @ params.W), axis=-1)
    return free - rbm_log_partition(params)


def rbm_statistics(x, h):
    """Sufficient statistics T(x, h) = (x, h, x ⊗ h), one row per point."""

    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    products = (x[:, :, np.newaxis] * h[:, np.newaxis, :]).reshape(len(x), -1)
    return np.hstack((x, h, products))


def rbm_conditional_statistics(params, x):
    """E[T(x, h) | x] = (x, P(h | x), x ⊗ P(h | x))."""

    x = np.atleast_2d(np.asarray(x, dtype=float))
    return rbm_statistics(x, rbm_conditionals(params, x))


def rbm_joint_moments(params):
    """Exact mean and covariance of T under the joint distribution.

    Enumerates hidden states; given h the visible units are independent Bernoulli
    variables, so T is affine in x and its conditional moments are closed form.
    """

    _check_enumerable(params)
    n_x, n_h = params.n_x, params.n_h
    hidden = enumerate_bits(n_h)
    logits = params.a + hidden @ params.W.T
    p = sigmoid(logits)
    log_weights = hidden @ params.b + np.sum(softplus(logits), axis=1)
    hidden_probabilities = np.exp(log_weights - logsumexp(log_weights))

    # T = L_h x + c_h
    count = len(hidden)
    linear = np.concatenate(
        (
            np.broadcast_to(np.eye(n_x), (count, n_x, n_x)),
            np.zeros((count, n_h, n_x)),
            np.einsum("ik,hj->hijk", np.eye(n_x), hidden).reshape(count, n_x * n_h, n_x),
        ),
        axis=1,
    )
    offset = np.hstack((np.zeros((count, n_x)), hidden, np.zeros((count, n_x * n_h))))
    conditional_means = np.einsum("hpk,hk->hp", linear, p) + offset

    mean = hidden_probabilities @ conditional_means
    variances = p * (1.0 - p)
    second = np.einsum("h,hpk,hk,hqk->pq", hidden_probabilities, linear, variances, linear)
    second += np.einsum("h,hp,hq->pq", hidden_probabilities, conditional_means, conditional_means)
    covariance = second - np.outer(mean, mean)
    return mean, 0.5 * (covariance + covariance.T)


def rbm_marginal_moments(params):
    """Exact mean and covariance of U(x) = E[T | x] under the visible marginal."""

    _check_enumerable(params)
    visible = enumerate_bits(params.n_x)
    log_weights = visible @ params.a + np.sum(softplus(params.b + visible @ params.W), axis=1)
    probabilities = np.exp(log_weights - logsumexp(log_weights))
    statistics = rbm_conditional_statistics(params, visible)
    mean = probabilities @ statistics
    centered = statistics - mean
    covariance = centered.T @ (probabilities[:, np.newaxis] * centered)
    return mean, 0.5 * (covariance + covariance.T)


def rbm_enumerate_joint(params):
    """Every (x, h) configuration with its exact probability."""

    _check_enumerable(params)
    states = enumerate_bits(params.n_x + params.n_h)
    x, h = states[:, :params.n_x], states[:, params.n_x:]
    return states, np.exp(rbm_log_density(params, x, h))


def rbm_gibbs_sample(params, n, rng, burn_in=GIBBS_BURN_IN, thinning=1, chains=None):
    """Draw n (x, h) pairs by alternating conditional sampling.

    Each chain starts from uniform random visible units and runs `burn_in` full sweeps
    (h given x, then x given h). With fewer chains than samples, each chain yields a
    draw every `thinning` sweeps after burn-in.
    """

    chains = n if chains is None else max(1, min(int(chains), n))

    def sweep(x):
        h = (rng.random((chains, params.n_h)) < rbm_conditionals(params, x)).astype(float)
        x = (rng.random((chains, params.n_x)) < rbm_visible_conditionals(params, h)).astype(float)
        return x, h

    x = (rng.random((chains, params.n_x)) < 0.5).astype(float)
    for _ in range(max(int(burn_in), 1)):
        x, h = sweep(x)

    xs, hs = [x], [h]
    drawn = chains
    while drawn < n:
        for _ in range(max(int(thinning), 1)):
            x, h = sweep(x)
        xs.append(x)
        hs.append(h)
        drawn += chains
    return np.vstack(xs)[:n], np.vstack(hs)[:n]


def rbm_init(n_x, n_h, rng):
    """Random initial parameters giving every unit an activation probability close to 1/2.

    W ~ N(0, 1 / (n_x n_h)), b_j = -sum_i w_ij / 2, a_i = -sum_j w_ij / 2 + N(0, 0.01 / n_x^2).
    """

    if n_x < 1 or n_h < 1:
        raise RejectedInput(f"RBM needs at least one unit per layer, got {n_x} and {n_h}.")
    weights = rng.normal(0.0, 1.0 / np.sqrt(n_x * n_h), size=(n_x, n_h))
    hidden_biases = -0.5 * weights.sum(axis=0)
    visible_biases = -0.5 * weights.sum(axis=1) + rng.normal(0.0, 0.1 / n_x, size=n_x)
    return RbmParams(visible_biases, hidden_biases, weights)


def flip_hidden(params, j):
    """Parameters describing the same distribution with hidden unit j replaced by 1 - h_j."""

    a = params.a + params.W[:, j]
    b = params.b.copy()
    W = params.W.copy()
    b[j] = -b[j]
    W[:, j] = -W[:, j]
    return RbmParams(a, b, W)


def flip_hidden_points(points, n_x, j):
    """Joint (x, h) points with hidden unit j replaced by 1 - h_j."""

    flipped = np.array(points, dtype=float)
    flipped[:, n_x + j] = 1.0 - flipped[:, n_x + j]
    return flipped


def centering_matrix(n_x, n_h):
    """Matrix J with standard parameters = J @ centered parameters (A, B, W).

    Centered parameters use the energy of x - 1/2 and h - 1/2: a_i = A_i - sum_j w_ij / 2
    and b_j = B_j - sum_i w_ij / 2.
    """

    dim = n_x + n_h + n_x * n_h
    jacobian = np.eye(dim)
    for i in range(n_x):
        for j in range(n_h):
            column = n_x + n_h + i * n_h + j
            jacobian[i, column] = -0.5
            jacobian[n_x + j, column] = -0.5
    return jacobian


def rbm_grad_logdensity(params, points, joint=True, mean_statistics=None):
    """Gradient of ln P for joint (x, h) points or, with joint=False, visible points.

    Joint: T(x, h) - E[T]. Marginal: E[T | x] - E[T]. Biases are weights to an
    always-on unit. E[T] is exact unless given.
    """

    points = np.atleast_2d(np.asarray(points, dtype=float))
    if mean_statistics is None:
        mean_statistics = rbm_joint_moments(params)[0]
    if joint:
        statistics = rbm_statistics(points[:, :params.n_x], points[:, params.n_x:])
    else:
        statistics = rbm_conditional_statistics(params, points)
    return statistics - mean_statistics


class RbmJointFamily(Family):
    """RBM over visible and hidden units together; samples are (x, h) rows."""

    name = "rbm"
    joint = True

    def __init__(self, n_x, n_h=1, centered=False, gibbs=None):
        self.n_x = int(n_x)
        self.n_h = int(n_h)
        super().__init__(self.n_x + self.n_h + self.n_x * self.n_h)
        self.centered = bool(centered)
        self.jacobian = centering_matrix(self.n_x, self.n_h) if self.centered else None
        self.gibbs = gibbs or GibbsSettings()

        capabilities = {"sample", "grad_log_density", "latent"}
        if self.enumerable:
            capabilities |= {"exact_fisher", "enumerable"}
        self.capabilities = frozenset(capabilities)

    @property
    def enumerable(self):
        return self.n_x + self.n_h <= ENUMERATION_CUTOFF

    def params(self, theta):
        theta = self.check_theta(theta)
        if self.centered:
            theta = self.jacobian @ theta
        return RbmParams.from_vector(theta, self.n_x, self.n_h)

    def theta_from_params(self, params):
        vector = params.to_vector()
        if self.centered:
            vector = np.linalg.solve(self.jacobian, vector)
        return vector

    def initial_theta(self, rng=None):
        return self.theta_from_params(rbm_init(self.n_x, self.n_h, rng))

    def _to_native(self, gradients):
        # Chain rule through the centering map
        return gradients @ self.jacobian if self.centered else gradients

    def sample(self, theta, n, rng):
        x, h = rbm_gibbs_sample(
            self.params(theta), n, rng,
            burn_in=self.gibbs.burn_in, thinning=self.gibbs.thinning, chains=self.gibbs.chains,
        )
        return np.hstack((x, h))

    def observed(self, points):
        return np.asarray(points)[:, :self.n_x]

    def hidden_activation(self, theta, points):
        """Mean hidden unit value over the batch."""

        return float(np.mean(np.asarray(points)[:, self.n_x:]))

    def statistics(self, params, points):
        points = as_points(points, self.n_x + self.n_h)
        return rbm_statistics(points[:, :self.n_x], points[:, self.n_x:])

    def mean_statistics(self, params, points):
        """E[T], exact when enumerable, otherwise the batch average."""

        if self.enumerable:
            return rbm_joint_moments(params)[0]
        log.debug(f"{self.name}: estimating E[T] from {len(points)} samples.")
        return np.mean(self.statistics(params, points), axis=0)

    def grad_log_density(self, theta, points):
        params = self.params(theta)
        statistics = self.statistics(params, points)
        return self._to_native(statistics - self.mean_statistics(params, points))

    def log_density(self, theta, points):
        params = self.params(theta)
        points = as_points(points, self.n_x + self.n_h)
        return rbm_log_density(params, points[:, :self.n_x], points[:, self.n_x:])

    def exact_fisher(self, theta):
        covariance = rbm_joint_moments(self.params(theta))[1]
        if self.centered:
            covariance = self.jacobian.T @ covariance @ self.jacobian
        return covariance

    def enumerate(self, theta):
        return rbm_enumerate_joint(self.params(theta))

    def sufficient_statistics(self, points):
        return rbm_statistics(np.asarray(points)[:, :self.n_x], np.asarray(points)[:, self.n_x:])


class RbmMarginalFamily(RbmJointFamily):
    """RBM seen through its visible marginal; samples are x rows, h is latent."""

    name = "rbm_marginal"
    joint = False

    def sample(self, theta, n, rng):
        return super().sample(theta, n, rng)[:, :self.n_x]

    def observed(self, points):
        return np.asarray(points)

    def hidden_activation(self, theta, points):
        return float(np.mean(rbm_conditionals(self.params(theta), points)))

    def statistics(self, params, points):
        return rbm_conditional_statistics(params, as_points(points, self.n_x))

    def log_density(self, theta, points):
        return rbm_marginal_log_density(self.params(theta), as_points(points, self.n_x))

    def exact_fisher(self, theta):
        covariance = rbm_marginal_moments(self.params(theta))[1]
        if self.centered:
            covariance = self.jacobian.T @ covariance @ self.jacobian
        return covariance

    def enumerate(self, theta):
        params = self.params(theta)
        _check_enumerable(params)
        visible = enumerate_bits(self.n_x)
        return visible, np.exp(rbm_marginal_log_density(params, visible))

    def sufficient_statistics(self, points):
        raise CapabilityError("The visible marginal of an RBM is not an exponential family.")
