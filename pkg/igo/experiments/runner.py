"""Operator to run the repeats of an experiment and write their CSV files."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .. import core
from ..errors import DegenerateUpdate, SingularFisher, UnreliableFisher
from ..families import BernoulliFamily, RbmJointFamily, parse_family
from ..families.gaussian import gaussian_step
from ..fisher import cross_validated_fisher, exact_fisher, mc_fisher
from ..objectives import TwoMin, parse_objective, wrap_objective
from ..settings import get_output_folder
from ..utils import STREAM_FISHER, STREAM_INIT, STREAM_NOISE, STREAM_SAMPLES, substream
from ..weights import RankSchedule, parse_scheme
from .config import FISHER_ALGORITHMS
from .records import RunRecord, StepRow, write_experiment_csv

log = logging.getLogger("igo")


@dataclass
class ExperimentResult:
    """Records of every repeat, sorted by run_id, and the files written."""

    records: List[RunRecord]
    paths: List[str] = field(default_factory=list)

    def status_counts(self):
        counts = {}
        for record in self.records:
            counts[record.status] = counts.get(record.status, 0) + 1
        return counts

    @property
    def failures(self):
        return {status: count for status, count in self.status_counts().items() if status.startswith("failed")}


def build_family(config):
    family = parse_family(config.family)
    if isinstance(family, RbmJointFamily) and config.gibbs_burn_in is not None:
        family.gibbs = type(family.gibbs)(
            burn_in=config.gibbs_burn_in, thinning=family.gibbs.thinning, chains=family.gibbs.chains
        )
    return family


def build_objective(config, rng):
    return wrap_objective(parse_objective(config.objective, rng=rng), config.transform, config.noise)


def _batch_statistics(values, quantile):
    return float(np.min(values)), float(np.mean(values)), float(np.quantile(values, quantile, method="lower"))


def _second_optimum_distance(objective, observed):
    """Distance from the batch to the optimum it is farthest from."""

    base = objective
    while not isinstance(base, TwoMin) and hasattr(base, "base"):
        base = base.base
    if not isinstance(base, TwoMin):
        return None
    return float(np.max(np.min(base.distance_to_optima(observed), axis=0)))


class ExperimentRunner:
    """Runs the update loop of one configuration, one repeat at a time."""

    def __init__(self, config):
        self.config = config
        self.scheme = parse_scheme(config.scheme, config.population)

    def fisher_for_step(self, family, theta, samples, run_id, step):
        """Return (FisherMatrix, reliability, mean eigenvalue) for the configured estimate."""

        config = self.config
        sample_count = config.fisher_samples
        if sample_count is None:
            return exact_fisher(family, theta), "exact", None
        if config.fisher_sharing == "shared":
            return mc_fisher(family, theta, samples=samples), "unchecked", None

        rng = substream(config.seed, run_id, step, STREAM_FISHER)
        if config.reliability == "off":
            return mc_fisher(family, theta, sample_count, rng), "unchecked", None
        fisher, reliability = cross_validated_fisher(
            family, theta, sample_count, rng, log_symmetric=config.reliability == "log_symmetric"
        )
        if not reliability.passed:
            raise UnreliableFisher(
                f"Fisher estimates disagree, mean eigenvalue {reliability.mean_eigenvalue}.",
                mean_eigenvalue=reliability.mean_eigenvalue,
            )
        return fisher, reliability.status, reliability.mean_eigenvalue

    def take_step(self, family, theta, samples, values, weights, dt, fisher, state):
        """Apply the configured algorithm and return the new parameters."""

        config = self.config
        algorithm = config.algorithm

        if algorithm == "igo":
            if self.uses_rank_update(family):
                return family.rank_update(theta, samples, weights, dt)
            return core.igo_step(family, theta, samples, weights, dt, fisher=fisher, ridge=config.ridge)
        if algorithm == "vanilla_gradient":
            return core.vanilla_step(family, theta, samples, weights, dt)
        if algorithm == "igo_ml":
            return core.igo_ml_step(family, theta, samples, weights, dt, strict=config.strict_weights)
        if algorithm == "cem":
            return core.cem_step(family, samples, values, config.elite_fraction)
        if algorithm == "smoothed_cem":
            alpha = config.alpha if config.alpha is not None else dt
            return core.smoothed_cem_step(
                family, theta, samples, weights, alpha, config.parametrization, strict=config.strict_weights
            )

        # Gaussian updates keep the xNES square root between steps
        params = family.params_from_theta(theta)
        params.sqrt = state.get("sqrt")
        result = gaussian_step(
            algorithm, params, samples, weights, dt=dt, eta_m=config.eta_m, eta_c=config.eta_c, j=config.j
        )
        state["sqrt"] = result.sqrt
        return family.theta_from_params(result)

    def uses_rank_update(self, family):
        return isinstance(self.scheme, RankSchedule) and isinstance(family, BernoulliFamily)

    def diagnostics_fisher(self, family, theta, fisher):
        if fisher is not None:
            return fisher
        if family.supports("exact_fisher"):
            return exact_fisher(family, theta)
        return None

    def run(self, run_id):
        """Run one repeat and return its RunRecord."""

        config = self.config
        init_rng = substream(config.seed, run_id, 0, STREAM_INIT)
        family = build_family(config)
        objective = build_objective(config, init_rng)
        theta = family.initial_theta(init_rng)
        record = RunRecord(run_id)
        record.thetas.append(theta.copy())

        dt = config.dt
        beta = config.beta if config.beta is not None else core.default_beta(config.population, family.dim_theta)
        previous_step = None
        time = 0.0
        state = {}

        for step in range(config.steps):
            rng = substream(config.seed, run_id, step, STREAM_SAMPLES)
            samples = family.sample(theta, config.population, rng)
            observed = family.observed(samples)
            noise_rng = substream(config.seed, run_id, step, STREAM_NOISE) if objective.noisy else None
            values = objective(observed, noise_rng)
            weights = self.scheme.weigh(values)

            fisher, reliability, mean_eigenvalue = None, "none", None
            try:
                if config.algorithm in FISHER_ALGORITHMS and not self.uses_rank_update(family):
                    fisher, reliability, mean_eigenvalue = self.fisher_for_step(family, theta, samples, run_id, step)
                new_theta = self.take_step(family, theta, samples, values, weights, dt, fisher, state)
            except UnreliableFisher as error:
                record.finish("failed_unreliable", str(error))
                break
            except SingularFisher as error:
                record.finish("failed_singular", str(error))
                break
            except DegenerateUpdate as error:
                record.finish("failed_degenerate", str(error))
                break

            metric = self.diagnostics_fisher(family, theta, fisher)
            report = None
            if metric is not None:
                report = core.step_diagnostics(
                    family, theta, new_theta, previous_step=previous_step, fisher=metric, samples=samples
                )

            best_f, mean_f, quantile_f = _batch_statistics(values, self.scheme.quantile)
            distance = _second_optimum_distance(objective, observed)
            row = StepRow(
                run_id=run_id,
                step=step,
                time=time,
                dt=dt,
                best_f=best_f,
                mean_f=mean_f,
                quantile_f=quantile_f,
                second_optimum_distance=distance,
                hidden_mean=family.hidden_activation(theta, samples) if isinstance(family, RbmJointFamily) else None,
                kl=report.kl_estimate if report else None,
                kl_standard_error=report.kl_standard_error if report else None,
                speed=report.fisher_step_norm / dt if report and dt > 0.0 else None,
                reliability=reliability,
                mean_eigenvalue=mean_eigenvalue,
            )
            record.append(row)

            theta = new_theta
            record.thetas.append(theta.copy())
            time += dt
            if report is not None:
                previous_step = report.step
                if config.adapt_dt != "off":
                    dt = core.adapt_dt(report, dt, beta=beta, sign_only=config.adapt_dt == "sign")

            # Stop rules
            if config.stop == "none":
                continue
            if distance == 0.0 and config.stop == "auto":
                record.finish("both_optima_reached")
                break
            target = config.stop_target
            if target is None and distance is None and config.stop == "auto":
                target = objective.minimum
            if target is not None and best_f <= target:
                record.finish("converged")
                break

        if record.status is None:
            record.finish("step_limit")
        log.info(f"Run {run_id}: {record.status} after {len(record.rows)} steps.")
        return record


def run_experiment(config, output_folder=None, write=True):
    """Run every repeat of a configuration, in parallel when workers > 1."""

    runner = ExperimentRunner(config)
    run_ids = range(config.repeats)
    log.info(f"Running '{config.name}': {config.repeats} repeat(s) of {config.algorithm} on {config.objective}.")
    if config.workers > 1 and config.repeats > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            records = list(executor.map(runner.run, run_ids))
    else:
        records = [runner.run(run_id) for run_id in run_ids]
    records.sort(key=lambda record: record.run_id)

    result = ExperimentResult(records)
    if write:
        folder = output_folder or get_output_folder()
        result.paths = write_experiment_csv(folder, config.name, records)
    return result
