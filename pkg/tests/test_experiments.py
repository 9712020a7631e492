import os
import unittest

import numpy as np

from igo.experiments import intrinsic_time_gaps, parse_config_text, run_experiment, run_flow, summarize
from igo.flow import critical_dt, gaussian_linear_constants

SLOW = os.environ.get("IGO_SLOW_TESTS", "").lower() in ("1", "true", "yes")


def _flow(text):
    header, rows = run_flow(parse_config_text(text), write=False)
    return dict(zip(header, rows.T))


class FlowExperimentTest(unittest.TestCase):
    def test_onemax_flow(self):
        columns = _flow("family = bernoulli:d=8;theta0=0.3\nobjective = onemax:d=8\nhorizon = 5\nh = 0.05\n")
        self.assertEqual(columns["t"][0], 0.0)
        self.assertAlmostEqual(columns["t"][-1], 5.0)
        self.assertTrue(np.all(np.diff(columns["quantile_f"]) <= 0.0))
        self.assertTrue(np.all(np.isnan(columns["lyapunov"])))
        self.assertTrue(np.all(np.diff(columns["theta_0"]) >= 0.0))
        self.assertGreater(columns["theta_0"][-1], 0.8)

    def test_linear_flow_monitor(self):
        columns = _flow("family = bernoulli:d=4;theta0=0.2\nobjective = linear:alpha=1,2,3,4\nhorizon = 2\nh = 0.1\n")
        self.assertTrue(np.all(columns["lyapunov"] > 0.0))
        self.assertTrue(np.all(np.isfinite(columns["speed"])))

    def test_sphere_surrogate_flow(self):
        columns = _flow(
            "family = isotropic_gaussian:d=2;mean=1;sigma=1\nobjective = sphere:d=2\n"
            "horizon = 0.5\nh = 0.05\nmethod = euler\nsurrogate_samples = 5000\n"
        )
        self.assertEqual(len(columns["t"]), 11)
        self.assertLess(columns["quantile_f"][-1], columns["quantile_f"][0])
        self.assertTrue(np.all(columns["speed"] > 0.0))

    def test_noisy_objective_uses_its_base(self):
        columns = _flow("family = bernoulli:d=3\nobjective = onemax:d=3\nnoise = uniform:level=0.1\nhorizon = 0.2\nh = 0.1\n")
        self.assertEqual(len(columns["t"]), 3)


class CriticalStepExperimentTest(unittest.TestCase):
    CONFIG = (
        "family = gaussian:d=1\nobjective = linear:alpha=1;space=reals\nscheme = truncation:q0=0.25\n"
        "algorithm = unified\nj = 1\npopulation = 10000\nsteps = 20\nrepeats = 20\nstop = none\n"
    )

    def growing_runs(self, dt):
        result = run_experiment(parse_config_text(self.CONFIG + f"dt = {dt!r}\n"), write=False)
        return sum(float(record.thetas[-1][1]) > 1.0 for record in result.records)

    def test_variance_grows_below_critical_step(self):
        self.assertGreater(self.growing_runs(0.9 * critical_dt(0.25, 1)), 10)

    def test_variance_shrinks_above_critical_step(self):
        self.assertLess(self.growing_runs(1.1 * critical_dt(0.25, 1)), 10)


class LinearFlowRateTest(unittest.TestCase):
    def test_rates_match_closed_form(self):
        config = parse_config_text(
            "family = isotropic_gaussian:d=2\nobjective = linear:alpha=1,1;space=reals\n"
            "scheme = truncation:q0=0.25\nalgorithm = igo\npopulation = 100000\ndt = 0.01\n"
            "steps = 200\nstop = none\n"
        )
        record = run_experiment(config, write=False).records[0]
        thetas = np.array(record.thetas)
        times = config.dt * np.arange(len(thetas))
        constants = gaussian_linear_constants(0.25, 2)

        slope = np.polyfit(times, thetas[:, 2], 1)[0]
        self.assertAlmostEqual(slope / constants.alpha, 1.0, delta=0.05)

        drift = thetas[-1, :2] @ np.ones(2) / np.sqrt(2.0)
        expected = abs(float(constants.mean_path(0.0, 1.0, times[-1])))
        self.assertAlmostEqual(drift / expected, 1.0, delta=0.05)


@unittest.skipUnless(SLOW, "set IGO_SLOW_TESTS=1 to run")
class DiversityExperimentTest(unittest.TestCase):
    CONFIG = (
        "family = rbm:n_x=16;n_h=1\nobjective = two_min:d=16\nscheme = truncation:q0=0.5\n"
        "population = 1000\ndt = 1\nsteps = 100\nrepeats = 20\nworkers = 4\nseed = 2012\n"
    )

    @classmethod
    def setUpClass(cls):
        cls.records = {}
        for algorithm in ("igo", "vanilla_gradient"):
            result = run_experiment(parse_config_text(cls.CONFIG + f"algorithm = {algorithm}\n"), write=False)
            cls.records[algorithm] = [record for record in result.records if not record.failed]

    def both_optima_share(self, algorithm):
        records = self.records[algorithm]
        self.assertTrue(records, algorithm)
        return sum(record.status == "both_optima_reached" for record in records) / len(records)

    def test_natural_gradient_reaches_both_optima(self):
        self.assertGreaterEqual(self.both_optima_share("igo"), 0.7)

    def test_vanilla_gradient_settles_on_one_optimum(self):
        self.assertLessEqual(self.both_optima_share("vanilla_gradient"), 0.1)

    def test_natural_gradient_keeps_hidden_units_balanced(self):
        for record in self.records["igo"]:
            hidden = record.column("hidden_mean")
            self.assertTrue(np.all((hidden >= 0.25) & (hidden <= 0.75)), record.run_id)


@unittest.skipUnless(SLOW, "set IGO_SLOW_TESTS=1 to run")
class IntrinsicTimeTest(unittest.TestCase):
    CONFIG = (
        "family = bernoulli:d=12\nobjective = onemax:d=12\nscheme = truncation:q0=0.25\n"
        "algorithm = igo\npopulation = 500\nrepeats = 20\nworkers = 4\nstop = none\n"
    )

    def median_curve(self, dt):
        steps = int(round(3.0 / dt))
        result = run_experiment(parse_config_text(self.CONFIG + f"dt = {dt}\nsteps = {steps}\n"), write=False)
        summary = summarize(result.records, columns=("mean_f",), percentiles=(50,))
        return np.array([entry["time"] for entry in summary]), np.array([entry["mean_f_p50"] for entry in summary])

    def test_curves_collapse_as_dt_shrinks(self):
        gaps = intrinsic_time_gaps([self.median_curve(dt) for dt in (0.5, 0.25, 0.125)])
        self.assertEqual(len(gaps), 2)
        self.assertLess(gaps[1], gaps[0])


if __name__ == "__main__":
    unittest.main()
