import unittest

import numpy as np

from models.spectral.automorphism import IntegerMatrix, characteristic_polynomial, companion
from models.spectral.catalog import catalog_frame, enumerate_catalog
from models.spectral.conditions import invariant_unstable_subspaces, spectral_gap_condition
from models.spectral.spectrum import spectral_data
from utils.errors import NotHyperbolic

CAT = IntegerMatrix.from_rows([[2, 1], [1, 1]])


class TestSpectralData(unittest.TestCase):

    def test_cat_map_moduli(self):
        spectral = spectral_data(CAT)
        np.testing.assert_allclose(spectral.moduli, [0.3819660112501051, 2.618033988749895], atol=1e-12)
        self.assertTrue(spectral.hyperbolic)
        self.assertTrue(spectral.codimension_one)
        self.assertFalse(spectral.complex_unstable_pair)

    def test_leaf_bases_are_invariant(self):
        spectral = spectral_data(companion([1, 1, 0, -1]))
        m = spectral.matrix.array
        for basis in (spectral.stable_basis, spectral.unstable_basis):
            projected = basis @ (basis.T @ (m @ basis))
            np.testing.assert_allclose(projected, m @ basis, atol=1e-10)

    def test_rotation_is_not_hyperbolic(self):
        with self.assertRaises(NotHyperbolic):
            spectral_data(IntegerMatrix.from_rows([[0, -1], [1, 0]]))

    def test_determinant_must_be_unit(self):
        with self.assertRaises(ValueError):
            IntegerMatrix.from_rows([[2, 0], [0, 1]])

    def test_companion_reproduces_polynomial(self):
        for coeffs in ([1, 1, 0, -1], [1, -2, -2, 3, 1], [1, -3, 1]):
            self.assertEqual(characteristic_polynomial(companion(coeffs)), coeffs)


class TestConditions(unittest.TestCase):

    def test_gap_condition_holds_for_plastic_companion(self):
        report = spectral_gap_condition(spectral_data(companion([1, 1, 0, -1])))
        self.assertAlmostEqual(report.mu, 1.324717957244746, places=9)
        self.assertAlmostEqual(report.xi_l, 1.150963925257758, places=9)
        self.assertAlmostEqual(report.lhs, 0.0593, delta=1e-3)
        self.assertEqual(report.rhs, 0.0)
        self.assertTrue(report.satisfied)

    def test_gap_condition_counterexample(self):
        report = spectral_gap_condition(spectral_data(companion([1, -2, -3, 1])))
        self.assertFalse(report.satisfied)

    def test_gap_condition_ignores_base_change(self):
        change = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
        change_inverse = np.array([[1, -1, 0], [0, 1, 0], [0, 0, 1]])
        for coeffs in ([1, 1, 0, -1], [1, -2, -3, 1]):
            matrix = companion(coeffs)
            conjugate = IntegerMatrix.from_rows((change @ matrix.array.astype(int) @ change_inverse).tolist())
            self.assertNotEqual(conjugate.entries, matrix.entries)
            report = spectral_gap_condition(spectral_data(matrix))
            moved = spectral_gap_condition(spectral_data(conjugate))
            self.assertEqual(moved.satisfied, report.satisfied)
            for name in ('mu', 'xi_1', 'xi_l', 'lhs', 'rhs'):
                self.assertAlmostEqual(getattr(moved, name), getattr(report, name), places=9)

    def test_complex_pair_has_no_invariant_subspaces(self):
        catalog = invariant_unstable_subspaces(spectral_data(companion([1, 1, 0, -1])))
        self.assertTrue(catalog.finite)
        self.assertEqual(len(catalog), 0)

    def test_totally_real_quartic_has_six_subspaces(self):
        spectral = spectral_data(companion([1, -2, -2, 3, 1]))
        catalog = invariant_unstable_subspaces(spectral)
        self.assertTrue(catalog.finite)
        self.assertEqual(len(catalog), 6)
        self.assertLessEqual(max(catalog.residuals), 1e-10)

    def test_repeated_block_gives_infinitely_many(self):
        diag = IntegerMatrix.from_rows([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]])
        catalog = invariant_unstable_subspaces(spectral_data(diag))
        self.assertFalse(catalog.finite)
        self.assertIsNotNone(catalog.cause_of_infinitude)


class TestCatalog(unittest.TestCase):

    def test_cubic_catalog_contains_plastic_companion(self):
        frame = catalog_frame(enumerate_catalog(3, 1))
        row = frame[frame['poly_coeffs'] == '1 1 0 -1']
        self.assertEqual(len(row), 1)
        self.assertTrue(bool(row['satisfied'].iloc[0]))
        self.assertTrue(bool(row['complex_pair'].iloc[0]))

    def test_quadratic_catalog_contains_cat_map_spectrum(self):
        entries = enumerate_catalog(2, 3)
        self.assertIn(characteristic_polynomial(CAT), [entry.coeffs for entry in entries])

    def test_zero_bound_catalog_is_empty(self):
        self.assertEqual(enumerate_catalog(2, 0), [])
        self.assertEqual(enumerate_catalog(3, 0), [])

    def test_bad_degree(self):
        with self.assertRaises(ValueError):
            enumerate_catalog(6, 1)


if __name__ == '__main__':
    unittest.main()
