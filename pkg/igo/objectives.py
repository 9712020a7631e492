"""Benchmark objective functions, all minimized, with monotone and noise wrappers."""

import logging

import numpy as np

from .errors import RejectedInput
from .utils import as_points, normal_ppf, parse_floats, parse_params, parse_spec

log = logging.getLogger("igo")


class Objective:
    """Objective function on bitstrings or real vectors, evaluated row by row."""

    name = "objective"
    space = "bits"
    noisy = False

    def __init__(self, d):
        self.d = int(d)
        if self.d < 1:
            raise RejectedInput(f"Objective dimension must be at least 1, got {d}.")

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d})"

    @property
    def minimum(self):
        """Known optimal value, or None."""

        return None

    def __call__(self, points, rng=None):
        return self.evaluate(points, rng)

    def evaluate(self, points, rng=None):
        return self.value(as_points(points, self.d))

    def value(self, points):
        raise NotImplementedError


class OneMax(Objective):
    """Number of zero bits, d - sum x_i."""

    name = "onemax"

    @property
    def minimum(self):
        return 0.0

    def value(self, points):
        return self.d - np.sum(points, axis=1)


class Linear(Objective):
    """c - sum alpha_i x_i on bitstrings or real vectors."""

    name = "linear"

    def __init__(self, alpha, c=0.0, space="bits"):
        self.alpha = np.asarray(alpha, dtype=float).ravel()
        super().__init__(self.alpha.size)
        if space not in ("bits", "reals"):
            raise RejectedInput(f"Unknown space '{space}'.")
        self.c = float(c)
        self.space = space

    @property
    def minimum(self):
        if self.space == "reals":
            return None
        return self.c - float(np.sum(np.maximum(self.alpha, 0.0)))

    def value(self, points):
        return self.c - points @ self.alpha


class Sphere(Objective):
    """Squared distance to a center."""

    name = "sphere"
    space = "reals"

    def __init__(self, d, center=None):
        super().__init__(d)
        self.center = np.zeros(self.d) if center is None else np.asarray(center, dtype=float).ravel()
        if self.center.size != self.d:
            raise RejectedInput(f"Sphere center has {self.center.size} coordinates, expected {self.d}.")

    @property
    def minimum(self):
        return 0.0

    def value(self, points):
        return np.sum((points - self.center) ** 2, axis=1)


class TwoMin(Objective):
    """Hamming distance to the closer of y and its complement."""

    name = "two_min"

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float).ravel()
        super().__init__(self.y.size)
        if not np.all((self.y == 0.0) | (self.y == 1.0)):
            raise RejectedInput("Two-min target must be a bitstring.")

    @property
    def minimum(self):
        return 0.0

    @property
    def optima(self):
        return self.y.copy(), 1.0 - self.y

    def distance_to_optima(self, points):
        """Hamming distances to y and to its complement, one row per point."""

        distance = np.sum(np.abs(as_points(points, self.d) - self.y), axis=1)
        return np.column_stack((distance, self.d - distance))

    def value(self, points):
        return np.min(self.distance_to_optima(points), axis=1)


# Strictly increasing rewritings of objective values
PHI = {
    "cube": lambda values: np.power(values, 3),
    "scaled_shift": lambda values: 2.0 * values + 7.0,
    "signed_power": np.cbrt,
}


class Transformed(Objective):
    """phi(f) for a registered strictly increasing phi."""

    def __init__(self, base, phi):
        if phi not in PHI:
            raise RejectedInput(f"Unknown transform '{phi}'; known: {', '.join(sorted(PHI))}.")
        super().__init__(base.d)
        self.base = base
        self.phi = phi
        self.name = f"{phi}({base.name})"
        self.space = base.space
        self.noisy = base.noisy

    @property
    def minimum(self):
        minimum = self.base.minimum
        return None if minimum is None else float(PHI[self.phi](np.float64(minimum)))

    def evaluate(self, points, rng=None):
        return PHI[self.phi](self.base.evaluate(points, rng))


NOISE_KINDS = ("uniform", "gaussian")


def noise_term(omega, kind):
    """Map a uniform seed omega to a centered noise value."""

    omega = np.asarray(omega, dtype=float)
    if kind == "uniform":
        return omega - 0.5
    tiny = np.finfo(float).tiny
    return normal_ppf(np.clip(omega, tiny, 1.0 - np.finfo(float).eps))


class Noisy(Objective):
    """f(x) + level * g(omega) with omega uniform on [0, 1], drawn at each evaluation."""

    noisy = True

    def __init__(self, base, kind="uniform", level=1.0):
        if kind not in NOISE_KINDS:
            raise RejectedInput(f"Unknown noise '{kind}'; known: {', '.join(NOISE_KINDS)}.")
        super().__init__(base.d)
        self.base = base
        self.kind = kind
        self.level = float(level)
        self.name = f"noisy_{kind}({base.name})"
        self.space = base.space

    @property
    def minimum(self):
        return None

    def evaluate(self, points, rng=None):
        if rng is None:
            raise RejectedInput(f"{self.name} needs a random generator for its noise.")
        points = as_points(points, self.d)
        omega = rng.random(len(points))
        return self.noisy_value(points, omega)

    def noisy_value(self, points, omega):
        return self.base.evaluate(points) + self.level * noise_term(omega, self.kind)

    @property
    def explicit(self):
        """The deterministic objective on (x, omega) points."""

        return ExplicitNoise(self)


class ExplicitNoise(Objective):
    """Deterministic f~(x, omega) whose last coordinate is the noise seed."""

    def __init__(self, noisy):
        super().__init__(noisy.d + 1)
        self.noisy_objective = noisy
        self.name = f"explicit_{noisy.name}"
        self.space = noisy.space

    def value(self, points):
        return self.noisy_objective.noisy_value(points[:, :-1], points[:, -1])


def monotone_transform(objective, phi):
    return Transformed(objective, phi)


# Parsers
def _parse_onemax(params, rng):
    return OneMax(int(params.pop("d")))


def _parse_linear(params, rng):
    alpha = parse_floats(params.pop("alpha"))
    return Linear(alpha, c=float(params.pop("c", 0.0)), space=params.pop("space", "bits"))


def _parse_sphere(params, rng):
    center = parse_floats(params.pop("center")) if "center" in params else None
    d = int(params.pop("d", len(center) if center else 0))
    return Sphere(d, center=center)


def _parse_two_min(params, rng):
    if "y" in params:
        y = parse_floats(params.pop("y"))
        params.pop("d", None)
        return TwoMin(y)
    d = int(params.pop("d"))
    if "seed" in params:
        rng = np.random.default_rng(int(params.pop("seed")))
    elif rng is None:
        raise RejectedInput("two_min needs y, a seed or a random generator.")
    return TwoMin((rng.random(d) < 0.5).astype(float))


# A dictionary that contains all objectives available to experiments, by specification name
OBJECTIVE_CLASS_MAPPINGS = {
    "onemax": OneMax,
    "linear": Linear,
    "sphere": Sphere,
    "two_min": TwoMin
}

OBJECTIVE_PARSERS = {
    "onemax": _parse_onemax,
    "linear": _parse_linear,
    "sphere": _parse_sphere,
    "two_min": _parse_two_min
}


def parse_objective(text, rng=None):
    """Build an objective from a specification such as `two_min:d=16;seed=7`.

    A two-min target without `y` or `seed` is drawn from `rng`.
    """

    name, raw = parse_spec(text)
    if name not in OBJECTIVE_PARSERS:
        raise RejectedInput(f"Unknown objective '{name}'; known: {', '.join(sorted(OBJECTIVE_PARSERS))}.")
    params = parse_params(raw)
    try:
        objective = OBJECTIVE_PARSERS[name](params, rng)
    except KeyError as error:
        raise RejectedInput(f"Objective '{name}' needs parameter {error}.") from error
    except ValueError as error:
        raise RejectedInput(f"Invalid objective '{text}': {error}") from error
    if params:
        raise RejectedInput(f"Unknown parameters for objective '{name}': {', '.join(sorted(params))}.")
    return objective


def parse_noise(text):
    """Parse `uniform:level=0.5` or `gaussian:level=1` into (kind, level)."""

    kind, raw = parse_spec(text)
    params = parse_params(raw)
    level = float(params.pop("level", 1.0))
    if params:
        raise RejectedInput(f"Unknown parameters for noise '{kind}': {', '.join(sorted(params))}.")
    if kind not in NOISE_KINDS:
        raise RejectedInput(f"Unknown noise '{kind}'; known: {', '.join(NOISE_KINDS)}.")
    return kind, level


def wrap_objective(objective, transform=None, noise=None):
    """Apply an optional monotone transform, then optional noise."""

    if transform:
        objective = Transformed(objective, transform)
    if noise:
        kind, level = parse_noise(noise)
        objective = Noisy(objective, kind=kind, level=level)
    return objective
