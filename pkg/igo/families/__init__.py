from .base import *
from .bernoulli import *
from .gaussian import *
from .rbm import *

from ..errors import RejectedInput
from ..utils import parse_bool, parse_floats, parse_params, parse_spec

__all__ = [
    "BernoulliFamily",
    "ExpectationFamily",
    "Family",
    "GaussianFamily",
    "GaussianParams",
    "GibbsSettings",
    "IsotropicGaussianFamily",
    "LogitBernoulliFamily",
    "RbmJointFamily",
    "RbmMarginalFamily",
    "RbmParams",
    "FAMILY_CLASS_MAPPINGS",
    "parse_family"
]


# A dictionary that contains all families available to experiments, by specification name
FAMILY_CLASS_MAPPINGS = {
    "bernoulli": BernoulliFamily,
    "logit_bernoulli": LogitBernoulliFamily,
    "gaussian": GaussianFamily,
    "isotropic_gaussian": IsotropicGaussianFamily,
    "rbm": RbmJointFamily,
    "rbm_marginal": RbmMarginalFamily
}


def _bernoulli_kwargs(params):
    return {"d": int(params.pop("d")), "theta0": float(params.pop("theta0", 0.5))}


def _gaussian_kwargs(params):
    d = int(params.pop("d"))
    mean = parse_floats(params.pop("mean")) if "mean" in params else None
    if mean is not None and len(mean) == 1 and d > 1:
        mean = mean * d
    return {"d": d, "mean0": mean, "sigma0": float(params.pop("sigma", 1.0))}


def _rbm_kwargs(params):
    chains = params.pop("chains", None)
    gibbs = GibbsSettings(
        burn_in=int(params.pop("burn_in", GibbsSettings.burn_in)),
        thinning=int(params.pop("thinning", 1)),
        chains=int(chains) if chains else None,
    )
    return {
        "n_x": int(params.pop("n_x", params.pop("d", 16))),
        "n_h": int(params.pop("n_h", 1)),
        "centered": parse_bool(params.pop("centered", "false")),
        "gibbs": gibbs,
    }


FAMILY_ARGUMENT_PARSERS = {
    "bernoulli": _bernoulli_kwargs,
    "logit_bernoulli": _bernoulli_kwargs,
    "gaussian": _gaussian_kwargs,
    "isotropic_gaussian": _gaussian_kwargs,
    "rbm": _rbm_kwargs,
    "rbm_marginal": _rbm_kwargs
}


def parse_family(text):
    """Build a family from a specification such as `bernoulli:d=10;theta0=0.5`.

    `expectation=true` re-parametrizes an exponential family by its expectation parameters.
    """

    name, raw = parse_spec(text)
    if name not in FAMILY_CLASS_MAPPINGS:
        raise RejectedInput(f"Unknown family '{name}'; known: {', '.join(sorted(FAMILY_CLASS_MAPPINGS))}.")
    params = parse_params(raw)
    expectation = parse_bool(params.pop("expectation", "false"))
    try:
        kwargs = FAMILY_ARGUMENT_PARSERS[name](params)
    except KeyError as error:
        raise RejectedInput(f"Family '{name}' needs parameter {error}.") from error
    except ValueError as error:
        raise RejectedInput(f"Invalid family '{text}': {error}") from error
    if params:
        raise RejectedInput(f"Unknown parameters for family '{name}': {', '.join(sorted(params))}.")

    family = FAMILY_CLASS_MAPPINGS[name](**kwargs)
    return ExpectationFamily(family) if expectation else family
