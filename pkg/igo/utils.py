"""Shared helpers: random substreams, normal distribution, bit enumeration."""

import math

import numpy as np
from scipy import special

from .errors import CapabilityError, RejectedInput
from .settings import ENUMERATION_CUTOFF


# Random streams
STREAM_SAMPLES = 0
STREAM_NOISE = 1
STREAM_FISHER = 2
STREAM_DIAGNOSTICS = 3
STREAM_INIT = 4


def substream(seed, *keys):
    """Return a generator for the (seed, keys...) counter position.

    The stream only depends on the master seed and the keys, so the same draws are
    obtained regardless of which thread or in which order they are requested.
    """

    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def sample_substream(seed, run_id, step, index):
    """Return the generator dedicated to one sample of one step."""

    return substream(seed, run_id, step, STREAM_SAMPLES, index)


# Normal distribution
def normal_cdf(x):
    return special.ndtr(x)


def normal_ppf(q):
    return special.ndtri(q)


def normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


# Logistic helpers
def sigmoid(x):
    return special.expit(x)


def logit(p):
    return special.logit(p)


def softplus(x):
    """Return log(1 + exp(x)) without overflow."""

    return np.logaddexp(0.0, x)


# Points
def as_points(points, dim=None):
    """Return points as a 2-D float array, one row per point."""

    array = np.asarray(points, dtype=float)
    if array.ndim == 1:
        array = array[np.newaxis, :]
    if array.ndim != 2:
        raise RejectedInput(f"Points must be a vector or a matrix, got shape {array.shape}.")
    if dim is not None and array.shape[1] != dim:
        raise RejectedInput(f"Points have dimension {array.shape[1]}, expected {dim}.")
    return array


def enumerate_bits(d):
    """Return all 2^d bitstrings of length d, in binary counting order."""

    if d > ENUMERATION_CUTOFF:
        raise CapabilityError(f"Cannot enumerate {d} bits, cutoff is {ENUMERATION_CUTOFF}.")
    codes = np.arange(2 ** d)[:, np.newaxis]
    shifts = np.arange(d - 1, -1, -1)[np.newaxis, :]
    return ((codes >> shifts) & 1).astype(float)


def upper_indices(d):
    """Row-major upper triangle indices of a d x d matrix."""

    return np.triu_indices(d)


def format_float(value):
    """Format a number with 17 significant digits."""

    if value is None:
        return ""
    return format(float(value), ".17g")


# Specification strings
def parse_spec(text):
    """Split `name:parameters` into the name and the raw parameter string."""

    text = str(text).strip()
    if not text:
        raise RejectedInput("Empty specification string.")
    name, _, raw = text.partition(":")
    return name.strip().lower(), raw.strip()


def parse_params(raw):
    """Parse `key=value;key=value` into a dict of strings."""

    params = {}
    if not raw:
        return params
    for item in raw.split(";"):
        item = item.strip()
        if not item:
            continue
        key, separator, value = item.partition("=")
        if not separator:
            raise RejectedInput(f"Expected key=value, got '{item}'.")
        key = key.strip().lower()
        if key in params:
            raise RejectedInput(f"Duplicate parameter '{key}'.")
        params[key] = value.strip()
    return params


def parse_floats(value):
    """Parse a comma separated list of numbers."""

    try:
        return [float(item) for item in str(value).split(",") if item.strip()]
    except ValueError as error:
        raise RejectedInput(f"Expected a list of numbers, got '{value}'.") from error


def parse_bool(value):
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise RejectedInput(f"Expected a boolean, got '{value}'.")
