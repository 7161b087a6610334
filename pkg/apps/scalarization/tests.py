"""
Tests for the scalarization app.

This test suite covers:
- Values and partials of each family
- Theory constants
- Building families from config blocks
- Concavity and gradient smoothness
"""
import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError, ScalarizationDomainError
from apps.scalarization.domain import AlphaFair, KinkedQuadratic, WeightedSum
from apps.scalarization.serializers import ScalarizationSerializer
from apps.scalarization.services import ScalarizationService


class ValueTestCase(SimpleTestCase):
    """Test cases for value."""

    def test_weighted_sum(self):
        """Test w = (1,1), J = (2,3) gives 5."""
        f = WeightedSum((1.0, 1.0))

        self.assertAlmostEqual(ScalarizationService.value(f, [2.0, 3.0]), 5.0)

    def test_alpha_fair(self):
        """Test alpha = 2, J = (1,2) gives -1.5."""
        f = AlphaFair(alpha=2.0, delta=0.1, n_objectives=2)

        self.assertAlmostEqual(ScalarizationService.value(f, [1.0, 2.0]), -1.5)

    def test_kinked_quadratic(self):
        """Test c = (1,1), kappa = 1, J = (0.5, 2) gives -0.5."""
        f = KinkedQuadratic(kinks=(1.0, 1.0))

        self.assertAlmostEqual(ScalarizationService.value(f, [0.5, 2.0]), -0.5)

    def test_batched_values(self):
        """Test value accepts a stack of return vectors."""
        f = AlphaFair(alpha=2.0, delta=0.1, n_objectives=2)
        J = np.array([[1.0, 2.0], [2.0, 4.0], [0.5, 0.5]])

        np.testing.assert_allclose(f.value(J), [-1.5, -0.75, -4.0])

    def test_dimension_mismatch(self):
        """Test a return vector of the wrong length is a domain error."""
        with self.assertRaises(ScalarizationDomainError):
            WeightedSum((1.0, 1.0)).value([1.0, 2.0, 3.0])

    def test_alpha_fair_domain(self):
        """Test clamping versus the unclamped domain error."""
        clamped = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2)
        strict = AlphaFair(alpha=2.0, delta=0.5, n_objectives=2, clamp=False)

        self.assertAlmostEqual(clamped.value([0.0, 1.0]), -3.0)
        with self.assertRaises(ScalarizationDomainError):
            strict.value([0.0, 1.0])
        with self.assertRaises(ScalarizationDomainError):
            clamped.value([-0.1, 1.0])


class GradTestCase(SimpleTestCase):
    """Test cases for grad."""

    def test_weighted_sum(self):
        """Test w = (1,1) has gradient (1,1) everywhere."""
        f = WeightedSum((1.0, 1.0))
        grad = ScalarizationService.grad(f, [7.0, 3.0])

        np.testing.assert_allclose(grad, [1.0, 1.0])

    def test_alpha_fair(self):
        """Test alpha = 2 at J = (1,2) gives (1, 0.25)."""
        f = AlphaFair(alpha=2.0, delta=0.1, n_objectives=2)

        np.testing.assert_allclose(f.grad([1.0, 2.0]), [1.0, 0.25])

    def test_finite_differences(self):
        """Test partials match central differences at interior points."""
        rng = np.random.default_rng(0)
        families = [
            WeightedSum((0.3, 0.7)),
            AlphaFair(alpha=2.0, delta=0.05, n_objectives=2),
            AlphaFair(alpha=0.5, delta=0.05, n_objectives=2),
            KinkedQuadratic(kinks=(1.0, 2.0), kappa=2.0),
        ]
        step = 1e-6
        for f in families:
            for _ in range(10):
                J = rng.uniform(0.5, 5.0, size=2)
                numeric = np.array([
                    (f.value(J + step * e) - f.value(J - step * e))
                    / (2 * step)
                    for e in np.eye(2)
                ])
                np.testing.assert_allclose(f.grad(J), numeric, atol=1e-6)


class ConstantsTestCase(SimpleTestCase):
    """Test cases for constants."""

    def test_weighted_sum(self):
        """Test w = (0.3, 0.7) gives C = 0.7 and zero smoothness."""
        constants = ScalarizationService.constants(
            WeightedSum((0.3, 0.7)), 0.9
        )

        self.assertAlmostEqual(constants.C, 0.7)
        self.assertEqual(constants.L_f, 0.0)
        self.assertEqual(constants.L_2f, 0.0)

    def test_alpha_fair(self):
        """Test alpha = 2, delta = 0.5 gives C = 4."""
        constants = ScalarizationService.constants(
            AlphaFair(alpha=2.0, delta=0.5, n_objectives=2), 0.9
        )

        self.assertAlmostEqual(constants.C, 4.0)
        self.assertAlmostEqual(constants.L_f, 16.0)

    def test_kinked_quadratic(self):
        """Test kappa = 1 gives L_f = 1 and no second-order constant."""
        constants = ScalarizationService.constants(
            KinkedQuadratic(kinks=(1.0, 1.0)), 0.9
        )

        self.assertEqual(constants.L_f, 1.0)
        self.assertIsNone(constants.L_2f)
        self.assertAlmostEqual(constants.C, 9.0)

    def test_derived_constants(self):
        """Test G_1, G_2, L_J and mu are filled in."""
        constants = ScalarizationService.constants(
            WeightedSum((1.0, 1.0)), 0.5, mu=0.25
        )

        self.assertAlmostEqual(constants.G_1, np.sqrt(2.0))
        self.assertEqual(constants.G_2, 2.0)
        self.assertAlmostEqual(constants.L_J, 2 * 1.0 * 2.0 / 0.25)
        self.assertEqual(constants.mu, 0.25)

    def test_gamma_checked(self):
        """Test gamma outside (0,1) is rejected."""
        with self.assertRaises(ConfigurationError):
            ScalarizationService.constants(WeightedSum((1.0,)), 1.0)


class BuildTestCase(SimpleTestCase):
    """Test cases for building scalarizations from config blocks."""

    def test_alpha_fair_default_floor(self):
        """Test delta defaults to 0.05 / (1 - gamma)."""
        f = ScalarizationService.build(
            {'family': 'alpha_fair', 'alpha': 2.0}, 0.9, 2
        )

        self.assertIsInstance(f, AlphaFair)
        self.assertAlmostEqual(f.delta, 0.5)
        self.assertEqual(f.n_objectives, 2)

    def test_kinked_quadratic(self):
        """Test a kinked block round-trips through as_dict."""
        block = {'family': 'kinked_quadratic', 'kinks': [1.0, 2.0],
                 'kappa': 3.0}
        f = ScalarizationService.build(block, 0.9, 2)

        self.assertEqual(f.as_dict(), block)

    def test_weights_length(self):
        """Test weighted_sum needs one weight per objective."""
        serializer = ScalarizationSerializer(
            data={'family': 'weighted_sum', 'weights': [1.0]},
            context={'gamma': 0.9, 'n_objectives': 2},
        )

        self.assertFalse(serializer.is_valid())
        self.assertIn('weights', serializer.errors)

    def test_alpha_of_one_rejected(self):
        """Test alpha = 1 is refused."""
        with self.assertRaises(ConfigurationError):
            ScalarizationService.build(
                {'family': 'alpha_fair', 'alpha': 1.0}, 0.9, 2
            )

    def test_unknown_family(self):
        """Test an unknown family is refused."""
        with self.assertRaises(ConfigurationError):
            ScalarizationService.build({'family': 'max_min'}, 0.9, 2)


class ShapeTestCase(SimpleTestCase):
    """Test cases for concavity and gradient smoothness on the box."""

    def setUp(self):
        """Set up each family with a sampler over [low, 1/(1-gamma)]^2."""
        self.gamma = 0.9
        self.rng = np.random.default_rng(7)
        self.cases = [
            (WeightedSum((0.3, 0.7)), 0.0),
            (AlphaFair(alpha=2.0, delta=0.5, n_objectives=2), 0.5),
            (AlphaFair(alpha=0.5, delta=0.5, n_objectives=2), 0.5),
            (KinkedQuadratic(kinks=(1.0, 4.0), kappa=2.0), 0.0),
        ]

    def pairs(self, low):
        high = 1.0 / (1.0 - self.gamma)
        return (
            self.rng.uniform(low, high, size=(1000, 2)),
            self.rng.uniform(low, high, size=(1000, 2)),
        )

    def test_midpoint_concavity(self):
        """Test f((x+y)/2) >= (f(x)+f(y))/2 over 1000 random pairs."""
        for f, low in self.cases:
            x, y = self.pairs(low)
            gap = f.value((x + y) / 2) - (f.value(x) + f.value(y)) / 2

            self.assertGreaterEqual(gap.min(), -1e-10, f.family)

    def test_gradient_lipschitz(self):
        """Test |grad f(x) - grad f(y)| <= L_f |x - y| on the box."""
        for f, low in self.cases:
            L_f = ScalarizationService.constants(f, self.gamma).L_f
            x, y = self.pairs(low)
            lhs = np.linalg.norm(f.grad(x) - f.grad(y), axis=-1)
            rhs = L_f * np.linalg.norm(x - y, axis=-1)

            self.assertTrue(np.all(lhs <= rhs + 1e-10), f.family)
