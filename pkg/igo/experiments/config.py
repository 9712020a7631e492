"""Experiment configuration files: flat `key = value` lines with `#` comments."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ConfigError, RejectedInput
from ..families import parse_family
from ..objectives import PHI, parse_noise, parse_objective
from ..settings import RBM_FISHER_SAMPLES
from ..utils import parse_bool, parse_params, parse_spec
from ..weights import parse_scheme

log = logging.getLogger("igo")


ALGORITHMS = ("igo", "igo_ml", "cem", "smoothed_cem", "cma", "emna", "xnes", "unified", "vanilla_gradient")
GAUSSIAN_ALGORITHMS = ("cma", "emna", "xnes", "unified")
FISHER_ALGORITHMS = ("igo",)
ADAPT_MODES = ("off", "continuous", "sign")
RELIABILITY_MODES = ("on", "off", "log_symmetric")
SHARING_MODES = ("independent", "shared")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings of an experiment; one instance describes every repeat."""

    name: str = "experiment"
    family: str = "bernoulli:d=10"
    objective: str = "onemax:d=10"
    transform: Optional[str] = None
    noise: Optional[str] = None
    scheme: str = "truncation:q0=0.5"
    algorithm: str = "igo"
    population: int = 100
    dt: float = 0.1
    steps: int = 100
    seed: int = 0
    fisher: str = "exact"
    fisher_sharing: str = "independent"
    reliability: str = "on"
    ridge: Optional[float] = None
    repeats: int = 1
    workers: int = 1
    elite_fraction: float = 0.5
    alpha: Optional[float] = None
    parametrization: str = "expectation"
    eta_m: Optional[float] = None
    eta_c: Optional[float] = None
    j: float = 1.0
    adapt_dt: str = "off"
    beta: Optional[float] = None
    strict_weights: bool = True
    stop: str = "auto"
    gibbs_burn_in: Optional[int] = None
    paper_scale: bool = False
    debug: bool = False
    # Flow
    horizon: float = 1.0
    h: float = 0.01
    method: str = "rk4"
    checkpoints: int = 50
    surrogate_samples: int = 20000

    @property
    def fisher_samples(self):
        """Monte-Carlo sample count M, or None for the exact Fisher matrix."""

        name, raw = parse_spec(self.fisher)
        if name == "exact":
            return None
        return int(parse_params(raw).get("m", RBM_FISHER_SAMPLES))

    @property
    def stop_target(self):
        name, _, value = self.stop.partition(":")
        return float(value) if name == "target" else None


def _parse_int(value):
    return int(value)


def _parse_float(value):
    number = float(value)
    if not math.isfinite(number):
        raise ValueError(f"expected a finite number, got '{value}'")
    return number


def _parse_j(value):
    return math.inf if value.strip().lower() in ("inf", "infinity") else float(value)


def _parse_optional(parser):
    def parse(value):
        return None if value.strip().lower() in ("", "none") else parser(value)

    return parse


def _parse_seed(value):
    seed = int(value, 0)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {value}")
    return seed


CONFIG_KEYS = {
    "name": str,
    "family": str,
    "objective": str,
    "transform": _parse_optional(str),
    "noise": _parse_optional(str),
    "scheme": str,
    "algorithm": str,
    "population": _parse_int,
    "dt": _parse_float,
    "steps": _parse_int,
    "seed": _parse_seed,
    "fisher": str,
    "fisher_sharing": str,
    "reliability": str,
    "ridge": _parse_optional(_parse_float),
    "repeats": _parse_int,
    "workers": _parse_int,
    "elite_fraction": _parse_float,
    "alpha": _parse_optional(_parse_float),
    "parametrization": str,
    "eta_m": _parse_optional(_parse_float),
    "eta_c": _parse_optional(_parse_float),
    "j": _parse_j,
    "adapt_dt": str,
    "beta": _parse_optional(_parse_float),
    "strict_weights": parse_bool,
    "stop": str,
    "gibbs_burn_in": _parse_optional(_parse_int),
    "paper_scale": parse_bool,
    "debug": parse_bool,
    "horizon": _parse_float,
    "h": _parse_float,
    "method": str,
    "checkpoints": _parse_int,
    "surrogate_samples": _parse_int,
}


def parse_config_text(text, source="<config>"):
    """Parse configuration text into an ExperimentConfig."""

    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        key = key.strip().lower()
        if not separator:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got '{line}'.")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{number}: unknown key '{key}'.")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}'.")
        try:
            values[key] = CONFIG_KEYS[key](value.strip())
        except (ValueError, RejectedInput) as error:
            raise ConfigError(f"{source}:{number}: invalid value for '{key}': {error}") from error

    config = ExperimentConfig(**values)
    if config.paper_scale:
        config = apply_paper_scale(config)
    validate_config(config)
    return config


def load_config(path):
    """Read and validate a configuration file."""

    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as error:
        raise ConfigError(f"Cannot read configuration file {path}: {error}") from error
    return parse_config_text(text, source=str(path))


def _with_param(spec, key, value):
    name, raw = parse_spec(spec)
    params = parse_params(raw)
    params[key] = str(value)
    return f"{name}:" + ";".join(f"{k}={v}" for k, v in params.items())


def apply_paper_scale(config):
    """Switch an RBM experiment to 40 visible units, 10,000 samples and 100 repeats."""

    name, _ = parse_spec(config.family)
    if not name.startswith("rbm"):
        log.warning(f"paper_scale only changes RBM experiments, not '{name}'.")
        return config
    family = _with_param(config.family, "n_x", 40)
    objective = config.objective
    if parse_spec(objective)[0] == "two_min":
        objective = _with_param(objective, "d", 40)
    return replace(
        config,
        family=family,
        objective=objective,
        population=10000,
        fisher="mc:M=10000",
        fisher_sharing="shared",
        repeats=100,
    )


def validate_config(config):
    """Check every field and that the family, objective and scheme can be built."""

    def check(condition, message):
        if not condition:
            raise ConfigError(message)

    check(config.algorithm in ALGORITHMS, f"Unknown algorithm '{config.algorithm}'; known: {', '.join(ALGORITHMS)}.")
    check(config.population >= 1, f"population must be at least 1, got {config.population}.")
    check(config.dt >= 0.0, f"dt must be non-negative, got {config.dt}.")
    check(config.steps >= 0, f"steps must be non-negative, got {config.steps}.")
    check(config.repeats >= 1, f"repeats must be at least 1, got {config.repeats}.")
    check(config.workers >= 1, f"workers must be at least 1, got {config.workers}.")
    check(0.0 < config.elite_fraction <= 1.0, f"elite_fraction must be in (0, 1], got {config.elite_fraction}.")
    check(config.adapt_dt in ADAPT_MODES, f"adapt_dt must be one of {', '.join(ADAPT_MODES)}.")
    check(config.reliability in RELIABILITY_MODES, f"reliability must be one of {', '.join(RELIABILITY_MODES)}.")
    check(config.fisher_sharing in SHARING_MODES, f"fisher_sharing must be one of {', '.join(SHARING_MODES)}.")
    check(config.method in ("euler", "rk4"), f"method must be euler or rk4, got '{config.method}'.")
    check(config.h > 0.0 and config.horizon >= 0.0, "Flow needs h > 0 and a non-negative horizon.")
    check(config.checkpoints >= 1, "checkpoints must be at least 1.")
    check(config.transform is None or config.transform in PHI, f"Unknown transform '{config.transform}'.")
    check(config.ridge is None or config.ridge > 0.0, "ridge must be positive.")
    check(config.alpha is None or 0.0 < config.alpha <= 1.0, "alpha must be in (0, 1].")
    if config.algorithm in ("igo_ml", "unified"):
        check(0.0 < config.dt <= 1.0, f"{config.algorithm} needs dt in (0, 1], got {config.dt}.")

    stop_name, _, stop_value = config.stop.partition(":")
    check(stop_name in ("auto", "none", "target"), f"stop must be auto, none or target:<value>, got '{config.stop}'.")
    if stop_name == "target":
        try:
            float(stop_value)
        except ValueError as error:
            raise ConfigError(f"Invalid stop target '{stop_value}'.") from error

    try:
        family = parse_family(config.family)
        objective = parse_objective(config.objective, rng=np.random.default_rng(0))
        parse_scheme(config.scheme, config.population)
        if config.noise:
            parse_noise(config.noise)
        fisher_name, _ = parse_spec(config.fisher)
        check(fisher_name in ("exact", "mc"), f"fisher must be exact or mc:M=<count>, got '{config.fisher}'.")
        samples = config.fisher_samples
        check(samples is None or samples >= family.dim_theta, f"Fisher sample count must be at least {family.dim_theta}.")
        check(
            config.algorithm not in FISHER_ALGORITHMS or samples is not None or family.supports("exact_fisher"),
            f"{family.name} has no exact Fisher matrix at this size; use fisher = mc:M=<count>.",
        )
    except RejectedInput as error:
        raise ConfigError(str(error)) from error

    check(
        config.algorithm not in GAUSSIAN_ALGORITHMS or family.name == "gaussian",
        f"Algorithm '{config.algorithm}' needs the gaussian family.",
    )
    log.debug(f"Validated configuration '{config.name}' ({objective.name}, {family.name}).")
    return config

