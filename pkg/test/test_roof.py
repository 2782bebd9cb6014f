import unittest

import numpy as np

from models.roof.trig_polynomial import RoofFunction, TrigPolynomial
from models.spectral.automorphism import companion


class TestTrigPolynomial(unittest.TestCase):

    def setUp(self):
        self.poly = (TrigPolynomial.constant(2, 1.0) + TrigPolynomial.cosine(2, (1, 0), 0.3)
                     + TrigPolynomial.sine(2, (1, 2), 0.1))

    def test_non_hermitian_rejected(self):
        with self.assertRaises(ValueError):
            TrigPolynomial(2, (((1, 0), 1.0),))

    def test_evaluate_matches_closed_form(self):
        x = np.array([0.13, 0.71])
        expected = 1.0 + 0.3 * np.cos(2 * np.pi * x[0]) + 0.1 * np.sin(2 * np.pi * (x[0] + 2 * x[1]))
        self.assertAlmostEqual(self.poly.evaluate(x), expected, places=12)

    def test_gradient_matches_finite_differences(self):
        x = np.array([0.37, 0.29])
        h = 1e-6
        fd = [(self.poly.evaluate(x + h * e) - self.poly.evaluate(x - h * e)) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(self.poly.gradient(x), fd, atol=1e-7)

    def test_shifted_and_composed(self):
        x = np.array([0.2, 0.9])
        v = np.array([0.25, 0.5])
        self.assertAlmostEqual(self.poly.shifted(v).evaluate(x), self.poly.evaluate(x - v), places=12)
        matrix = companion([1, -3, 1])
        self.assertAlmostEqual(self.poly.compose(matrix).evaluate(x),
                               self.poly.evaluate((matrix.array @ x) % 1.0), places=11)

    def test_duplicate_terms_merge(self):
        poly = TrigPolynomial.cosine(2, (1, 1), 0.2) + TrigPolynomial.cosine(2, (1, 1), -0.2)
        self.assertEqual(poly.terms, ())
        self.assertTrue(poly.is_constant)

    def test_json_dict(self):
        again = TrigPolynomial.from_json_dict(self.poly.to_json_dict())
        self.assertEqual(again.terms, self.poly.terms)


class TestRoofFunction(unittest.TestCase):

    def test_certified_margin(self):
        roof = RoofFunction.certify(TrigPolynomial.constant(3, 1.0) + TrigPolynomial.cosine(3, (1, 0, 0), 0.5))
        self.assertGreater(roof.positivity_margin, 0.0)
        self.assertLessEqual(roof.positivity_margin, 0.5)
        self.assertAlmostEqual(roof.mean, 1.0)

    def test_negative_roof_rejected(self):
        with self.assertRaises(ValueError):
            RoofFunction.certify(TrigPolynomial.constant(2, -1.0))

    def test_roof_touching_zero_rejected(self):
        with self.assertRaises(ValueError):
            RoofFunction.certify(TrigPolynomial.constant(2, 1.0) + TrigPolynomial.cosine(2, (0, 1), 1.0))


if __name__ == '__main__':
    unittest.main()
