"""Fisher information: exact and Monte-Carlo estimates, cross-validation, guarded inversion."""

import csv
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import RejectedInput, SingularFisher
from .settings import CONDITION_THRESHOLD, CSV_VERSION, RELIABILITY_BOUNDS
from .utils import format_float

log = logging.getLogger("igo")


PROVENANCES = ("exact", "monte_carlo")
SYMMETRY_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-8


@dataclass
class FisherMatrix:
    """Symmetric positive-semidefinite Fisher matrix with its provenance."""

    matrix: np.ndarray
    provenance: str = "exact"
    sample_count: Optional[int] = None
    reliability: str = "unchecked"
    mean_eigenvalue: Optional[float] = None
    ridge: Optional[float] = None

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise RejectedInput(f"Fisher matrix must be square, got shape {matrix.shape}.")
        if self.provenance not in PROVENANCES:
            raise RejectedInput(f"Unknown Fisher provenance '{self.provenance}'.")
        if not np.all(np.isfinite(matrix)):
            raise SingularFisher("Fisher matrix has non-finite entries.")

        # Symmetry and positive semi-definiteness
        scale = max(float(np.max(np.abs(matrix))), 1.0) if matrix.size else 1.0
        if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE * scale:
            raise RejectedInput("Fisher matrix is not symmetric.")
        matrix = 0.5 * (matrix + matrix.T)
        if matrix.size and np.min(np.linalg.eigvalsh(matrix)) < -PSD_TOLERANCE * scale:
            raise RejectedInput("Fisher matrix is not positive semi-definite.")
        self.matrix = matrix

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def rank(self):
        return int(np.linalg.matrix_rank(self.matrix))

    @property
    def condition_number(self):
        return float(np.linalg.cond(self.matrix))

    @property
    def regularized(self):
        return self.ridge is not None

    def norm(self, vector):
        """Length of a parameter increment in the Fisher metric."""

        vector = np.asarray(vector, dtype=float)
        return float(np.sqrt(max(vector @ self.matrix @ vector, 0.0)))

    def to_csv(self, path):
        """Write the matrix with a provenance header line."""

        with open(path, "w", newline="") as handle:
            handle.write(
                f"# igo-csv {CSV_VERSION} fisher provenance={self.provenance} "
                f"samples={self.sample_count} reliability={self.reliability} "
                f"condition_threshold={format_float(CONDITION_THRESHOLD)}\n"
            )
            writer = csv.writer(handle, lineterminator="\n")
            for row in self.matrix:
                writer.writerow([format_float(value) for value in row])


@dataclass(frozen=True)
class Reliability:
    """Outcome of comparing two independent Fisher estimates."""

    status: str
    mean_eigenvalue: Optional[float] = None
    singular: bool = False

    @property
    def passed(self):
        return self.status == "pass"


def _as_fisher(fisher):
    return fisher if isinstance(fisher, FisherMatrix) else FisherMatrix(fisher)


def exact_fisher(family, theta):
    """Return the closed-form or enumerated Fisher matrix of a family."""

    return FisherMatrix(family.exact_fisher(theta), provenance="exact")


def mc_fisher(family, theta, sample_count=None, rng=None, samples=None):
    """Estimate the Fisher matrix as the mean of g g^T over samples of P_theta.

    Samples are drawn from `rng` unless given; they should not be the samples of the
    update they are used with.
    """

    dim_theta = family.dim_theta
    if samples is None:
        if sample_count is None or rng is None:
            raise RejectedInput("mc_fisher needs a sample count and a generator, or samples.")
        if sample_count < dim_theta:
            raise RejectedInput(f"Need at least {dim_theta} samples for an invertible estimate, got {sample_count}.")
        samples = family.sample(theta, sample_count, rng)
    samples = np.asarray(samples, dtype=float)
    count = len(samples)
    if count < dim_theta:
        raise RejectedInput(f"Need at least {dim_theta} samples for an invertible estimate, got {count}.")

    distinct = len(np.unique(samples.reshape(count, -1), axis=0))
    if distinct < dim_theta:
        log.warning(f"Only {distinct} distinct samples for {dim_theta} parameters, estimate is rank deficient.")

    # Fixed-order reduction
    gradients = family.grad_log_density(theta, samples)
    matrix = np.einsum("mi,mj->ij", gradients, gradients) / count
    return FisherMatrix(matrix, provenance="monte_carlo", sample_count=count)


def reliability_check(first, second, log_symmetric=False):
    """Compare two estimates through the eigenvalues of first * second^-1.

    Passes when the mean eigenvalue lies in [1/2, 2]; with `log_symmetric` the mean of
    |log eigenvalue| must not exceed log 2 instead.
    """

    first, second = _as_fisher(first), _as_fisher(second)
    if first.dim != second.dim:
        raise RejectedInput(f"Fisher estimates differ in size: {first.dim} and {second.dim}.")

    try:
        eigenvalues = linalg.eigh(first.matrix, second.matrix, eigvals_only=True)
    except (linalg.LinAlgError, ValueError):
        log.warning("Second Fisher estimate is singular, reliability check failed.")
        return Reliability("fail", None, singular=True)

    mean_eigenvalue = float(np.mean(eigenvalues))
    lower, upper = RELIABILITY_BOUNDS
    if log_symmetric:
        if np.min(eigenvalues) <= 0.0:
            return Reliability("fail", mean_eigenvalue)
        passed = float(np.mean(np.abs(np.log(eigenvalues)))) <= np.log(upper)
    else:
        passed = lower <= mean_eigenvalue <= upper
    return Reliability("pass" if passed else "fail", mean_eigenvalue)


def cross_validated_fisher(family, theta, sample_count, rng, log_symmetric=False):
    """Estimate the Fisher matrix twice on independent samples and check agreement.

    Returns the average of both estimates, with its reliability recorded, and the
    check outcome.
    """

    first = mc_fisher(family, theta, sample_count, rng)
    second = mc_fisher(family, theta, sample_count, rng)
    reliability = reliability_check(first, second, log_symmetric=log_symmetric)
    fisher = FisherMatrix(
        0.5 * (first.matrix + second.matrix),
        provenance="monte_carlo",
        sample_count=2 * sample_count,
        reliability=reliability.status,
        mean_eigenvalue=reliability.mean_eigenvalue,
    )
    log.debug(f"Fisher cross-validation: {reliability.status}, mean eigenvalue {reliability.mean_eigenvalue}.")
    return fisher, reliability


def invert(fisher, ridge=None):
    """Invert a Fisher matrix through its Cholesky factorization.

    Raises SingularFisher when the factorization fails or the condition number exceeds
    the threshold. A ridge adds ridge * Identity first and is recorded on the matrix.
    """

    fisher = _as_fisher(fisher)
    matrix = fisher.matrix
    if ridge is not None:
        matrix = matrix + float(ridge) * np.eye(fisher.dim)
        fisher.ridge = float(ridge)
        log.warning(f"Inverting Fisher matrix regularized with ridge {ridge}.")

    try:
        factor = linalg.cho_factor(matrix, lower=True)
    except (linalg.LinAlgError, ValueError) as error:
        error_message = f"Fisher matrix factorization failed: {error}"
        log.error(error_message)
        raise SingularFisher(error_message) from error

    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
        error_message = f"Fisher matrix condition number {condition:.3g} exceeds {CONDITION_THRESHOLD:.0e}."
        log.error(error_message)
        raise SingularFisher(error_message)

    inverse = linalg.cho_solve(factor, np.eye(fisher.dim))
    return 0.5 * (inverse + inverse.T)
