"""The continuous-time IGO flow and its closed-form reference constants.

On enumerable families the right-hand side is computed exactly by summing over the
whole search space; elsewhere a large-sample surrogate with common random numbers
stands in for it.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as quadrature
from scipy import stats

from .errors import RejectedInput
from .families import IsotropicGaussianFamily
from .fisher import FisherMatrix
from .objectives import Linear, Sphere
from .utils import normal_pdf, normal_ppf, substream, STREAM_SAMPLES
from .weights import WeightScheme

log = logging.getLogger("igo")


INTEGRATION_METHODS = ("euler", "rk4")


@dataclass
class FlowState:
    """A point of a flow trajectory at intrinsic time t."""

    theta: np.ndarray
    t: float


def _quantile_bounds(values, probabilities):
    """Return P(f < f(x)) and P(f <= f(x)) for every point."""

    unique, inverse = np.unique(values, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=probabilities, minlength=unique.size)
    upper = np.minimum(np.cumsum(mass), 1.0)
    lower = upper - mass
    return lower[inverse], upper[inverse]


def _weight_from_bounds(scheme, lower, upper):
    width = upper - lower
    averaged = (scheme.antiderivative(upper) - scheme.antiderivative(lower)) / np.where(width > 0.0, width, 1.0)
    return np.where(width > 0.0, averaged, scheme(upper))


def _check_scheme(scheme):
    if not isinstance(scheme, WeightScheme):
        raise RejectedInput("The flow needs a selection function, not a rank schedule.")


def exact_weights(family, theta, objective, scheme):
    """Enumerate the space and return (points, probabilities, W(x)) for every point."""

    _check_scheme(scheme)
    points, probabilities = family.enumerate(theta)
    values = objective(family.observed(points))
    lower, upper = _quantile_bounds(values, probabilities)
    return points, probabilities, _weight_from_bounds(scheme, lower, upper)


def exact_weight(family, theta, objective, scheme, x):
    """W(x): the average of w over the range of quantiles of f(x) under P_theta."""

    _check_scheme(scheme)
    points, probabilities = family.enumerate(theta)
    values = objective(family.observed(points))
    value = float(objective(family.observed(np.atleast_2d(np.asarray(x, dtype=float))))[0])
    lower = float(np.sum(probabilities[values < value]))
    upper = min(float(np.sum(probabilities[values <= value])), 1.0)
    return float(_weight_from_bounds(scheme, np.array(lower), np.array(upper)))


def flow_rhs(family, theta, objective, scheme):
    """Exact d theta / dt = sum_x P(x) W(x) I^-1 d ln P(x) / d theta."""

    points, probabilities, weights = exact_weights(family, theta, objective, scheme)
    support = probabilities > 0.0
    return (probabilities[support] * weights[support]) @ family.natural_score(theta, points[support])


def surrogate_rhs(family, theta, objective, scheme, sample_count, seed=0):
    """Large-sample estimate of the flow direction.

    Every call draws from a generator seeded identically so that nearby states are
    compared on the same random numbers.
    """

    rng = substream(seed, STREAM_SAMPLES)
    samples = family.sample(theta, int(sample_count), rng)
    values = objective(family.observed(samples), rng)
    weights = scheme.weigh(values)
    return weights.weights @ family.natural_score(theta, samples)


def integrate(rhs, theta0, horizon, h, method="rk4", project=None, callback=None):
    """Integrate d theta / dt = rhs(theta) with a fixed step; t = k h along the trajectory."""

    if method not in INTEGRATION_METHODS:
        raise RejectedInput(f"Unknown integration method '{method}'.")
    if h <= 0.0 or horizon < 0.0:
        raise RejectedInput(f"Need h > 0 and a non-negative horizon, got h={h}, horizon={horizon}.")

    steps = int(round(horizon / h))
    theta = np.array(theta0, dtype=float)
    trajectory = [FlowState(theta.copy(), 0.0)]
    for k in range(1, steps + 1):
        if method == "euler":
            theta = theta + h * rhs(theta)
        else:
            k1 = rhs(theta)
            k2 = rhs(theta + 0.5 * h * k1)
            k3 = rhs(theta + 0.5 * h * k2)
            k4 = rhs(theta + h * k3)
            theta = theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if project is not None:
            theta = project(theta)
        state = FlowState(theta.copy(), k * h)
        trajectory.append(state)
        if callback is not None:
            callback(state)
    log.debug(f"Integrated {steps} {method} steps of size {h}.")
    return trajectory


@dataclass(frozen=True)
class LinearFlowConstants:
    """Rates of the isotropic Gaussian flow on a linear function.

    log sigma grows at rate alpha and the mean moves along the gradient at speed
    sigma * beta.
    """

    alpha: float
    beta: float
    q0: float
    d: int

    def sigma_path(self, sigma0, t):
        return sigma0 * np.exp(self.alpha * np.asarray(t, dtype=float))

    def mean_path(self, m0, sigma0, t):
        t = np.asarray(t, dtype=float)
        if self.alpha == 0.0:
            return m0 + sigma0 * self.beta * t
        return m0 + (sigma0 * self.beta / self.alpha) * np.expm1(self.alpha * t)


def gaussian_linear_constants(q0, d):
    """Closed-form rates for truncation selection of the q0 best on a linear function."""

    q0 = float(q0)
    if not 0.0 < q0 <= 1.0:
        raise RejectedInput(f"Selection quantile must be in (0, 1], got {q0}.")
    if d < 1:
        raise RejectedInput(f"Dimension must be at least 1, got {d}.")

    bound = normal_ppf(q0)
    beta = -float(normal_pdf(bound)) if math.isfinite(bound) else 0.0
    second_moment, _ = quadrature.quad(
        lambda z: z * z * normal_pdf(z), -np.inf, bound, epsabs=1e-12, epsrel=1e-12
    )
    alpha = (second_moment - q0) / (2.0 * d)
    return LinearFlowConstants(alpha=alpha, beta=beta, q0=q0, d=int(d))


CRITICAL_ORDERS = (0, 1, 2, math.inf)


def critical_dt(q, j=1):
    """Largest step size for which the variance still grows on a linear function.

    j is the order of the cross term (1 - dt)^j of the unified covariance update.
    """

    q = float(q)
    if not 0.0 < q < 1.0:
        raise RejectedInput(f"Selection quantile must be in (0, 1), got {q}.")
    j = math.inf if str(j).lower() in ("inf", "infinity") else float(j)
    if j not in CRITICAL_ORDERS:
        raise RejectedInput(f"Critical step size is known for j in 0, 1, 2 and inf, got {j}.")
    if q >= 0.5:
        return 0.0
    if j == 0:
        return math.inf
    if math.isinf(j):
        return 0.0

    bound = float(normal_ppf(1.0 - q))
    first_order = q * bound / float(normal_pdf(bound))
    if j == 1:
        return first_order
    return math.sqrt(1.0 + first_order) - 1.0


def lyapunov_monitor(family, theta, alpha, c=0.0, scheme=None):
    """sum_i alpha_i d theta_i / dt for the linear function c - alpha . x on bitstrings."""

    alpha = np.asarray(alpha, dtype=float)
    scheme = scheme or WeightScheme.truncation(0.5)
    rhs = flow_rhs(family, theta, Linear(alpha, c=c), scheme)
    return float(alpha @ rhs)


def distribution_quantile(family, theta, objective, q, samples=None):
    """The q-quantile of f(x) for x ~ P_theta.

    Exact on enumerable families (the smallest m with P(f <= m) >= q) and for a sphere
    under an isotropic Gaussian; the empirical lower quantile of samples otherwise.
    """

    if family.supports("enumerable"):
        points, probabilities = family.enumerate(theta)
        values = objective(family.observed(points))
        order = np.argsort(values, kind="stable")
        cumulative = np.cumsum(probabilities[order])
        index = min(int(np.searchsorted(cumulative, q - 1e-12, side="left")), len(order) - 1)
        return float(values[order][index])

    if isinstance(objective, Sphere) and isinstance(family, IsotropicGaussianFamily):
        mean, sigma = family.split(theta)
        noncentrality = float(np.sum((mean - objective.center) ** 2)) / sigma ** 2
        if noncentrality == 0.0:
            return float(sigma ** 2 * stats.chi2.ppf(q, objective.d))
        return float(sigma ** 2 * stats.ncx2.ppf(q, objective.d, noncentrality))

    if samples is None:
        raise RejectedInput(f"Quantile of f under {family.name} needs samples.")
    return float(np.quantile(objective(family.observed(samples)), q, method="lower"))


def expectation_flow(family, theta, objective, scheme):
    """d T / dt = Cov(T, W) for an enumerable exponential family."""

    points, probabilities, weights = exact_weights(family, theta, objective, scheme)
    statistics = family.sufficient_statistics(points)
    mean = probabilities @ statistics
    return (probabilities * weights) @ (statistics - mean)


def flow_speed(family, theta, rhs):
    """Length of the flow direction in the Fisher metric."""

    return FisherMatrix(family.exact_fisher(theta)).norm(rhs)
