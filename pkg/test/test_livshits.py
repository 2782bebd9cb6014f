import unittest
from fractions import Fraction

import numpy as np

from models.roof.livshits import (
    birkhoff_sum,
    is_constant_roof_equivalent,
    obstruction_frame,
    periodic_obstructions,
    periodic_points,
    solve_coboundary,
)
from models.roof.trig_polynomial import RoofFunction, TrigPolynomial
from models.spectral.automorphism import IntegerMatrix, companion
from utils.errors import NonHyperbolicPeriod, ObstructionNonzero

CAT = IntegerMatrix.from_rows([[2, 1], [1, 1]])
PLASTIC = companion([1, 1, 0, -1])


def planted_roof() -> RoofFunction:
    # 1 + g o L - g with g = 0.1 cos(2 pi x1); first row of L is (0, 0, 1)
    g = TrigPolynomial.cosine(3, (1, 0, 0), 0.1)
    return RoofFunction.certify(TrigPolynomial.constant(3, 1.0) + g.compose(PLASTIC) - g)


class TestPeriodicPoints(unittest.TestCase):

    def test_cat_map_counts(self):
        self.assertEqual(sum(r.period_n for r in periodic_points(CAT, 1)), 1)
        records = periodic_points(CAT, 2)
        self.assertEqual(sum(r.period_n for r in records), 5)
        for record in records:
            for point in record.base_points:
                image = point
                for _ in range(2):
                    image = ((2 * image[0] + image[1]) % 1, (image[0] + image[1]) % 1)
                self.assertEqual(image, point)

    def test_counts_match_determinant_law(self):
        for matrix in (CAT, PLASTIC):
            rows = matrix.entries
            for n in range(1, 7):
                expected = round(abs(np.linalg.det(np.linalg.matrix_power(matrix.array, n) - np.eye(matrix.dim))))
                records = periodic_points(matrix, n)
                points = [p for r in records for p in r.base_points]
                self.assertEqual(len(points), expected, msg=f"{matrix.to_list()} n={n}")
                self.assertEqual(len(set(points)), expected)
                for point in points:
                    image = point
                    for _ in range(n):
                        image = tuple(sum(m * c for m, c in zip(row, image)) % 1 for row in rows)
                    self.assertEqual(image, point)

    def test_rotation_period_raises(self):
        with self.assertRaises(NonHyperbolicPeriod):
            periodic_points(IntegerMatrix.from_rows([[0, -1], [1, 0]]), 4)

    def test_flow_period_is_birkhoff_sum(self):
        roof = RoofFunction.certify(TrigPolynomial.constant(2, 2.0))
        for record in periodic_points(CAT, 3, roof):
            self.assertAlmostEqual(record.flow_period, 2.0 * record.period_n, places=12)

    def test_birkhoff_sum_constant(self):
        poly = TrigPolynomial.constant(2, 2.0)
        self.assertAlmostEqual(birkhoff_sum(poly, CAT, (Fraction(1, 3), Fraction(1, 7)), 5), 10.0, places=12)


class TestCoboundary(unittest.TestCase):

    def test_planted_coboundary_recovered(self):
        roof = planted_roof()
        self.assertLessEqual(periodic_obstructions(roof, PLASTIC, 6).spread, 1e-12)
        solution = solve_coboundary(roof, PLASTIC, trunc=8)
        self.assertAlmostEqual(solution.constant_c, 1.0, places=12)
        self.assertLessEqual(solution.residual_sup, 1e-9)
        self.assertTrue(is_constant_roof_equivalent(roof, PLASTIC))

    def test_cosine_roof_rejected(self):
        roof = RoofFunction.certify(TrigPolynomial.constant(3, 1.0) + TrigPolynomial.cosine(3, (1, 0, 0), 0.1))
        report = periodic_obstructions(roof, PLASTIC, 6)
        self.assertGreater(report.spread, 1e-3)
        with self.assertRaises(ObstructionNonzero):
            solve_coboundary(roof, PLASTIC, trunc=8)

    def test_trunc_below_roof_frequency(self):
        roof = RoofFunction.certify(TrigPolynomial.constant(3, 1.0) + TrigPolynomial.cosine(3, (2, 0, 0), 0.1))
        with self.assertRaises(ValueError):
            solve_coboundary(roof, PLASTIC, trunc=1)

    def test_obstruction_frame_columns(self):
        frame = obstruction_frame(periodic_obstructions(TrigPolynomial.constant(2, 1.0), CAT, 3))
        self.assertEqual(list(frame.columns), ['period_n', 'orbit_repr', 'average'])
        self.assertTrue((abs(frame['average'] - 1.0) < 1e-12).all())


if __name__ == '__main__':
    unittest.main()
