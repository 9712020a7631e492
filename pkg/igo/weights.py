"""Selection schemes and the quantile weights of ranked samples.

Objective values are always minimized: the best sample has the smallest value and
receives the weight of the lowest quantiles.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import RejectedInput, WeightNormalizationError
from .utils import parse_floats, parse_params, parse_spec

log = logging.getLogger("igo")


SCHEME_KINDS = ("truncation", "signed_median", "table")


@dataclass(frozen=True)
class WeightScheme:
    """Non-increasing selection function w on [0, 1]."""

    kind: str
    q0: float = 0.5
    nodes: Tuple[Tuple[float, float], ...] = ()
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise RejectedInput(f"Unknown weight scheme '{self.kind}'.")
        if self.kind == "truncation" and not 0.0 < self.q0 <= 1.0:
            raise RejectedInput(f"Truncation quantile must be in (0, 1], got {self.q0}.")
        if self.scale < 0.0:
            raise RejectedInput(f"Scale must be non-negative, got {self.scale}.")
        if self.kind == "table":
            quantiles = [q for q, _ in self.nodes]
            values = [v for _, v in self.nodes]
            if not quantiles or quantiles[-1] != 1.0:
                raise RejectedInput("Table nodes must end at quantile 1.")
            if any(b <= a for a, b in zip([0.0] + quantiles, quantiles)):
                raise RejectedInput("Table quantiles must be strictly increasing in (0, 1].")
            if any(b > a for a, b in zip(values, values[1:])):
                raise RejectedInput("Table values must be non-increasing.")

    @classmethod
    def truncation(cls, q0=0.5, scale=1.0, shift=0.0):
        return cls("truncation", q0=float(q0), scale=float(scale), shift=float(shift))

    @classmethod
    def signed_median(cls, scale=1.0, shift=0.0):
        return cls("signed_median", scale=float(scale), shift=float(shift))

    @classmethod
    def table(cls, nodes, scale=1.0, shift=0.0):
        nodes = tuple((float(q), float(v)) for q, v in nodes)
        return cls("table", nodes=nodes, scale=float(scale), shift=float(shift))

    # Unscaled shape
    def _base(self, q):
        if self.kind == "truncation":
            return np.where(q <= self.q0, 1.0, 0.0)
        if self.kind == "signed_median":
            return np.sign(0.5 - q)
        quantiles, values = self._table_arrays()
        index = np.minimum(np.searchsorted(quantiles, q, side="left"), len(values) - 1)
        return values[index]

    def _base_antiderivative(self, q):
        if self.kind == "truncation":
            return np.minimum(q, self.q0)
        if self.kind == "signed_median":
            return np.where(q <= 0.5, q, 1.0 - q)
        quantiles, values = self._table_arrays()
        lower = np.concatenate(([0.0], quantiles[:-1]))
        areas = np.concatenate(([0.0], np.cumsum(values * (quantiles - lower))))
        index = np.minimum(np.searchsorted(quantiles, q, side="left"), len(values) - 1)
        return areas[index] + values[index] * (q - lower[index])

    def _table_arrays(self):
        quantiles = np.array([q for q, _ in self.nodes], dtype=float)
        values = np.array([v for _, v in self.nodes], dtype=float)
        return quantiles, values

    def __call__(self, q):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return self.scale * self._base(q) + self.shift

    def antiderivative(self, q):
        """Return the integral of w from 0 to q."""

        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return self.scale * self._base_antiderivative(q) + self.shift * q

    def integral(self, lo=0.0, hi=1.0):
        return float(self.antiderivative(hi) - self.antiderivative(lo))

    def mean(self, population=None):
        return self.integral(0.0, 1.0)

    def variance(self, population=None):
        """Return the variance of w(U) for U uniform on [0, 1]; independent of the shift."""

        if self.kind == "truncation":
            base_variance = self.q0 * (1.0 - self.q0)
        elif self.kind == "signed_median":
            base_variance = 1.0
        else:
            quantiles, values = self._table_arrays()
            widths = np.diff(np.concatenate(([0.0], quantiles)))
            first = float(np.sum(values * widths))
            second = float(np.sum(values ** 2 * widths))
            base_variance = max(second - first ** 2, 0.0)
        return self.scale ** 2 * base_variance

    @property
    def bound(self):
        """Maximum of |w| over [0, 1]."""

        if self.kind == "truncation":
            levels = [1.0] if self.q0 == 1.0 else [1.0, 0.0]
        elif self.kind == "signed_median":
            levels = [1.0, -1.0]
        else:
            levels = [v for _, v in self.nodes]
        return max(abs(self.scale * level + self.shift) for level in levels)

    @property
    def quantile(self):
        """Selection quantile used when reporting quantiles of f."""

        return self.q0 if self.kind == "truncation" else 0.5

    def weigh(self, values):
        return compute_quantile_weights(values, self)


@dataclass(frozen=True)
class RankSchedule:
    """Explicit weights w_1, w_2, ... for the best, second best, ... samples.

    Ties are broken by sample index, the way PBIL picks its best sample, so tied
    samples may receive different weights.
    """

    values: Tuple[float, ...]
    quantile: float = 0.5

    def __post_init__(self):
        if not self.values:
            raise RejectedInput("A rank schedule needs at least one weight.")

    def weigh(self, values):
        values = _check_values(values)
        order = np.argsort(values, kind="stable")
        weights = np.zeros(values.size)
        count = min(len(self.values), values.size)
        weights[order[:count]] = self.values[:count]
        return RankedWeights(weights=weights, tie_groups=_tie_groups(values, order), order=order)

    def mean(self, population=None):
        return float(np.sum(self.values))

    def variance(self, population):
        """Variance of the step function taking value N*w_j on the j-th 1/N cell."""

        weights = np.asarray(self.values[:population], dtype=float)
        return float(population * np.sum(weights ** 2) - np.sum(weights) ** 2)


@dataclass
class RankedWeights:
    """Per-sample weights with the partition of samples into ties."""

    weights: np.ndarray
    tie_groups: List[np.ndarray] = field(default_factory=list)
    order: np.ndarray = None

    @property
    def total(self):
        return float(np.sum(self.weights))

    def normalized(self):
        """Return a copy rescaled to sum to one."""

        total = self.total
        if total == 0.0:
            raise WeightNormalizationError("Cannot normalize weights summing to zero.")
        return RankedWeights(weights=self.weights / total, tie_groups=self.tie_groups, order=self.order)

    def __len__(self):
        return len(self.weights)


def _check_values(values):
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise RejectedInput("At least one objective value is required.")
    if not np.all(np.isfinite(values)):
        raise RejectedInput("Objective values must be finite.")
    return values


def _tie_groups(values, order):
    sorted_values = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_values)) + 1
    return np.split(order, boundaries)


def compute_quantile_weights(values, scheme):
    """Return the weights of samples with the given objective values.

    A sample whose value is preceded by rk- strictly better values and rk+ - rk- equal
    values (itself included) gets the average of w over [rk-/N, rk+/N].
    """

    values = _check_values(values)
    n = values.size

    # Rank samples, grouping equal values
    order = np.argsort(values, kind="stable")
    unique, rank_low, counts = np.unique(values[order], return_index=True, return_counts=True)
    rank_high = rank_low + counts

    # Average of w over each group's quantile range
    group_weights = (scheme.antiderivative(rank_high / n) - scheme.antiderivative(rank_low / n)) / counts
    weights = group_weights[np.searchsorted(unique, values)]

    tie_groups = [order[lo:hi] for lo, hi in zip(rank_low, rank_high)]
    return RankedWeights(weights=weights, tie_groups=tie_groups, order=order)


def pbil_mu_weights(mu, learning_rate):
    """Rank weights (1 - lr)^(j - 1) for the mu best samples."""

    return RankSchedule(tuple((1.0 - learning_rate) ** j for j in range(mu)))


# Parsers
def _parse_truncation(raw, population):
    params = parse_params(raw)
    return WeightScheme.truncation(
        q0=float(params.pop("q0", 0.5)),
        scale=float(params.pop("scale", 1.0)),
        shift=float(params.pop("shift", 0.0)),
    ), params


def _parse_signed_median(raw, population):
    params = parse_params(raw)
    return WeightScheme.signed_median(
        scale=float(params.pop("scale", 1.0)),
        shift=float(params.pop("shift", 0.0)),
    ), params


def _parse_table(raw, population):
    nodes = []
    for item in raw.split(","):
        quantile, separator, value = item.partition("=")
        if not separator:
            raise RejectedInput(f"Table nodes are quantile=value pairs, got '{item}'.")
        nodes.append((float(quantile), float(value)))
    return WeightScheme.table(nodes), {}


def _parse_ranks(raw, population):
    return RankSchedule(tuple(parse_floats(raw))), {}


def _parse_pbil(raw, population):
    params = parse_params(raw)
    mu = int(params.pop("mu", 1))
    learning_rate = float(params.pop("lr", 0.1))
    return pbil_mu_weights(mu, learning_rate), params


SCHEME_PARSERS = {
    "truncation": _parse_truncation,
    "signed_median": _parse_signed_median,
    "table": _parse_table,
    "ranks": _parse_ranks,
    "pbil": _parse_pbil,
}


def parse_scheme(text, population=None):
    """Build a weight scheme from a specification such as `truncation:q0=0.25`."""

    name, raw = parse_spec(text)
    if name not in SCHEME_PARSERS:
        raise RejectedInput(f"Unknown weight scheme '{name}'.")
    try:
        scheme, leftover = SCHEME_PARSERS[name](raw, population)
    except ValueError as error:
        raise RejectedInput(f"Invalid weight scheme '{text}': {error}") from error
    if leftover:
        raise RejectedInput(f"Unknown parameters for scheme '{name}': {', '.join(sorted(leftover))}.")
    return scheme
