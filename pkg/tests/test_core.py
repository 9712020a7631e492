import math
import unittest

import numpy as np

from igo import core
from igo.errors import DegenerateUpdate, RejectedInput, SingularFisher, WeightNormalizationError
from igo.families import BernoulliFamily, ExpectationFamily, GaussianFamily
from igo.families.bernoulli import bernoulli_igo_update
from igo.fisher import FisherMatrix
from igo.objectives import Linear, Noisy, OneMax
from igo.utils import substream
from igo.weights import WeightScheme, compute_quantile_weights


class IgoStepTest(unittest.TestCase):
    def test_bernoulli_single_sample(self):
        theta = core.igo_step(BernoulliFamily(1), [0.5], [[1.0]], [1.0], 0.1)
        np.testing.assert_allclose(theta, [0.55])

    def test_zero_weights_leave_parameters_unchanged(self):
        family = GaussianFamily(2)
        theta = family.initial_theta()
        samples = family.sample(theta, 5, np.random.default_rng(0))
        np.testing.assert_array_equal(core.igo_step(family, theta, samples, np.zeros(5), 0.3), theta)

    def test_bernoulli_matches_closed_form_update(self):
        family = BernoulliFamily(3)
        theta = np.full(3, 0.5)
        samples = np.array([[1, 0, 1], [0, 0, 1], [1, 1, 1], [0, 1, 0]], dtype=float)
        values = OneMax(3)(samples)
        weights = compute_quantile_weights(values, WeightScheme.truncation(0.5))
        expected = bernoulli_igo_update(theta, samples[weights.order], weights.weights[weights.order], 0.2)
        np.testing.assert_allclose(core.igo_step(family, theta, samples, weights, 0.2), expected, rtol=0, atol=1e-15)

    def test_batch_size_mismatch(self):
        with self.assertRaises(RejectedInput):
            core.igo_step(BernoulliFamily(1), [0.5], [[1.0], [0.0]], [1.0], 0.1)

    def test_negative_dt(self):
        with self.assertRaises(RejectedInput):
            core.igo_step(BernoulliFamily(1), [0.5], [[1.0]], [1.0], -0.1)

    def test_singular_fisher_propagates(self):
        with self.assertRaises(SingularFisher):
            core.igo_step(BernoulliFamily(2), [0.5, 0.5], [[1.0, 0.0]], [1.0], 0.1, fisher=np.zeros((2, 2)))

    def test_ridge_makes_a_singular_estimate_usable(self):
        theta = core.igo_step(BernoulliFamily(1), [0.5], [[1.0]], [1.0], 0.1, fisher=FisherMatrix(np.zeros((1, 1))), ridge=4.0)
        np.testing.assert_allclose(theta, [0.55])

    def test_vanilla_step_uses_the_plain_gradient(self):
        theta = core.vanilla_step(BernoulliFamily(1), [0.5], [[1.0]], [1.0], 0.1)
        np.testing.assert_allclose(theta, [0.7])

    def test_weight_shift_vanishes_with_population(self):
        family = BernoulliFamily(5)
        theta = np.full(5, 0.4)
        plain = WeightScheme.truncation(0.25)
        shifted = WeightScheme.truncation(0.25, shift=2.0)
        gaps = []
        for population in (100, 1600, 25600):
            norms = []
            for seed in range(20):
                samples = family.sample(theta, population, np.random.default_rng(seed))
                values = OneMax(5)(samples)
                first = core.igo_step(family, theta, samples, compute_quantile_weights(values, plain), 0.1)
                second = core.igo_step(family, theta, samples, compute_quantile_weights(values, shifted), 0.1)
                norms.append(np.linalg.norm(second - first))
            gaps.append(float(np.mean(norms)))
        self.assertLess(gaps[1], gaps[0])
        self.assertLess(gaps[2], gaps[1])
        self.assertTrue(8.0 < gaps[0] / gaps[2] < 32.0, gaps)


class MaximumLikelihoodStepTest(unittest.TestCase):
    def test_gaussian_igo_ml_step(self):
        theta = core.igo_ml_step(GaussianFamily(1), [0.0, 1.0], [[1.0]], [1.0], 0.5)
        np.testing.assert_allclose(theta, [0.5, 0.75])

    def test_igo_ml_requires_normalized_weights(self):
        with self.assertRaises(WeightNormalizationError):
            core.igo_ml_step(BernoulliFamily(1), [0.5], [[1.0], [0.0]], [0.5, 0.25], 0.5)
        theta = core.igo_ml_step(BernoulliFamily(1), [0.5], [[1.0], [0.0]], [0.5, 0.25], 0.5, strict=False)
        np.testing.assert_allclose(theta, [0.5 * 0.5 + 0.5 * 2.0 / 3.0])

    def test_igo_ml_step_size_range(self):
        with self.assertRaises(RejectedInput):
            core.igo_ml_step(BernoulliFamily(1), [0.5], [[1.0]], [1.0], 1.5)

    def test_igo_ml_at_dt_one_is_cem(self):
        family = GaussianFamily(2)
        rng = np.random.default_rng(11)
        theta = family.initial_theta()
        samples = family.sample(theta, 40, rng)
        values = np.sum(samples ** 2, axis=1)
        weights = core.elite_weights(values, 0.25)
        np.testing.assert_allclose(
            core.igo_ml_step(family, theta, samples, weights, 1.0),
            core.cem_step(family, samples, values, 0.25),
            rtol=1e-12,
        )

    def test_three_updates_coincide_on_bernoulli(self):
        family = BernoulliFamily(5)
        rng = np.random.default_rng(2)
        for _ in range(100):
            theta = rng.uniform(0.3, 0.7, size=5)
            samples = family.sample(theta, 40, rng)
            weights = rng.random(40)
            weights /= weights.sum()
            dt = rng.uniform(0.01, 1.0)
            natural = core.igo_step(family, theta, samples, weights, dt)
            maximum_likelihood = core.igo_ml_step(family, theta, samples, weights, dt)
            smoothed = core.smoothed_cem_step(family, theta, samples, weights, dt, "expectation")
            np.testing.assert_allclose(natural, maximum_likelihood, rtol=1e-12)
            np.testing.assert_allclose(smoothed, maximum_likelihood, rtol=1e-12)

    def test_three_updates_coincide_on_gaussian_expectation(self):
        base = GaussianFamily(1)
        family = ExpectationFamily(base)
        rng = np.random.default_rng(4)
        for _ in range(100):
            theta_native = np.array([rng.normal(), rng.uniform(0.5, 2.0)])
            theta = base.to_expectation(theta_native)
            samples = base.sample(theta_native, 8, rng)
            weights = rng.random(8)
            weights /= weights.sum()
            dt = rng.uniform(0.01, 0.5)
            natural = core.igo_step(family, theta, samples, weights, dt)
            maximum_likelihood = core.igo_ml_step(base, theta_native, samples, weights, dt)
            smoothed = core.smoothed_cem_step(base, theta_native, samples, weights, dt, "expectation")
            np.testing.assert_allclose(family.native(natural), maximum_likelihood, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(smoothed, maximum_likelihood, rtol=1e-12, atol=1e-14)

    def test_smoothed_cem_in_mean_covariance(self):
        theta = core.smoothed_cem_step(GaussianFamily(1), [0.0, 1.0], [[0.8], [1.2]], [0.5, 0.5], 0.5, "mean_covariance")
        np.testing.assert_allclose(theta, [0.5, 0.52])

    def test_smoothed_cem_alpha_one_is_cem(self):
        family = GaussianFamily(1)
        samples = np.array([[0.8], [1.2], [3.0], [4.0]])
        values = np.array([0.0, 1.0, 2.0, 3.0])
        weights = core.elite_weights(values, 0.5)
        for parametrization in ("native", "expectation", "natural"):
            np.testing.assert_allclose(
                core.smoothed_cem_step(family, [0.0, 1.0], samples, weights, 1.0, parametrization),
                core.cem_step(family, samples, values, 0.5),
            )

    def test_elite_weights(self):
        weights = core.elite_weights([4.0, 1.0, 3.0, 2.0, 5.0], 0.5)
        np.testing.assert_allclose(weights.weights, [0.0, 1 / 3, 1 / 3, 1 / 3, 0.0])

    def test_cem_degenerate_elite(self):
        with self.assertRaises(DegenerateUpdate):
            core.cem_step(GaussianFamily(1), [[1.0], [2.0]], [0.0, 1.0], 0.5)


class DiagnosticsTest(unittest.TestCase):
    def test_kl_by_enumeration(self):
        report = core.step_diagnostics(BernoulliFamily(1), [0.5], [0.55])
        self.assertAlmostEqual(report.kl_estimate, 0.55 * math.log(1.1) + 0.45 * math.log(0.9), places=14)
        self.assertEqual(report.kl_standard_error, 0.0)
        self.assertAlmostEqual(report.fisher_step_norm, 0.1)

    def test_kl_by_sampling(self):
        family = BernoulliFamily(1)
        rng = np.random.default_rng(0)
        report = core.step_diagnostics(family, [0.5], [0.55], rng=rng, sample_count=20000)
        expected = 0.55 * math.log(1.1) + 0.45 * math.log(0.9)
        self.assertEqual(report.kl_sample_size, 20000)
        self.assertLess(abs(report.kl_estimate - expected), 4 * report.kl_standard_error + 1e-12)

    def test_cosine_and_adapt_dt(self):
        family = BernoulliFamily(2)
        step = np.array([0.05, -0.02])
        same = core.step_diagnostics(family, [0.5, 0.5], [0.55, 0.48], previous_step=step)
        back = core.step_diagnostics(family, [0.5, 0.5], [0.45, 0.52], previous_step=step)
        self.assertAlmostEqual(same.cosine_with_previous, 1.0)
        self.assertAlmostEqual(back.cosine_with_previous, -1.0)
        self.assertAlmostEqual(core.adapt_dt(same, 0.2, beta=0.5), 0.2 * math.exp(0.25))
        self.assertAlmostEqual(core.adapt_dt(back, 0.2, beta=0.5), 0.2 * math.exp(-0.25))

    def test_zero_step_has_no_cosine(self):
        report = core.step_diagnostics(BernoulliFamily(1), [0.5], [0.5], previous_step=np.array([0.1]))
        self.assertIsNone(report.cosine_with_previous)
        self.assertEqual(core.adapt_dt(report, 0.3), 0.3)

    def test_sign_only_adaptation(self):
        report = core.step_diagnostics(BernoulliFamily(2), [0.5, 0.5], [0.55, 0.5], previous_step=np.array([0.05, 0.05]))
        self.assertAlmostEqual(core.adapt_dt(report, 1.0, beta=0.4, sign_only=True), math.exp(0.2))

    def test_default_beta(self):
        self.assertEqual(core.default_beta(100, 10), 0.5)
        self.assertEqual(core.default_beta(2, 10), 0.2)

    def test_speed_bound_on_samples(self):
        family = BernoulliFamily(4)
        scheme = WeightScheme.truncation(0.5)
        rng = np.random.default_rng(8)
        theta = np.full(4, 0.5)
        dt = 0.05
        for _ in range(50):
            samples = family.sample(theta, 2000, rng)
            weights = compute_quantile_weights(OneMax(4)(samples), scheme)
            new_theta = core.igo_step(family, theta, samples, weights, dt)
            report = core.step_diagnostics(family, theta, new_theta)
            self.assertLessEqual(report.fisher_step_norm / dt, math.sqrt(scheme.variance()) * 1.05)
            self.assertLessEqual(report.kl_estimate, 0.5 * dt ** 2 * scheme.variance() * 1.1)
            theta = new_theta


class NoisyLiftTest(unittest.TestCase):
    def test_lifted_family_ignores_the_noise_coordinate(self):
        base = BernoulliFamily(3)
        family = core.lift_noisy(base)
        theta = np.array([0.2, 0.5, 0.7])
        points = family.sample(theta, 6, np.random.default_rng(1))
        self.assertEqual(points.shape, (6, 4))
        np.testing.assert_array_equal(family.grad_log_density(theta, points), base.grad_log_density(theta, points[:, :3]))
        np.testing.assert_array_equal(family.exact_fisher(theta), base.exact_fisher(theta))
        self.assertFalse(family.supports("enumerable"))

    def test_coupled_runs_are_identical(self):
        base = BernoulliFamily(6)
        lifted = core.lift_noisy(base)
        noisy = Noisy(Linear(np.arange(1.0, 7.0)), kind="uniform", level=2.0)
        explicit = noisy.explicit
        scheme = WeightScheme.truncation(0.3)
        theta_noisy = theta_lifted = base.initial_theta()
        for step in range(50):
            rng = substream(9, 0, step)
            samples = base.sample(theta_noisy, 30, rng)
            weights = compute_quantile_weights(noisy(samples, rng), scheme)
            theta_noisy = core.igo_step(base, theta_noisy, samples, weights, 0.1)

            rng = substream(9, 0, step)
            points = lifted.sample(theta_lifted, 30, rng)
            weights = compute_quantile_weights(explicit(lifted.observed(points)), scheme)
            theta_lifted = core.igo_step(lifted, theta_lifted, points, weights, 0.1)
            np.testing.assert_array_equal(theta_noisy, theta_lifted)


if __name__ == "__main__":
    unittest.main()
