import unittest

import numpy as np

from models.regularity.bunching import (
    BUNCHING_COLUMNS,
    bunching_frame,
    bunching_report,
    default_nu_grid,
    sampled_bunching_sup,
    volume_identity_defect,
)
from models.spectral.automorphism import IntegerMatrix, companion
from models.spectral.spectrum import spectral_data
from utils.errors import NotCodimensionOne

PLASTIC = spectral_data(companion([1, 1, 0, -1]))
CAT = spectral_data(IntegerMatrix.from_rows([[2, 1], [1, 1]]))


class TestBunchingReport(unittest.TestCase):

    def test_default_grid(self):
        grid = default_nu_grid()
        self.assertEqual(len(grid), 41)
        self.assertEqual(grid[0], 0.0)
        self.assertEqual(grid[-1], 4.0)
        self.assertEqual(grid[19], 1.9)

    def test_complex_pair_companion(self):
        report = bunching_report(PLASTIC, 1.0, 1.0)
        self.assertAlmostEqual(report.stable_sup, 0.86885, places=4)
        self.assertEqual(report.nu_max_stable, 1.9)
        self.assertEqual(report.nu_max_weak, 2.9)
        self.assertLessEqual(report.weak_stable_sup, report.stable_sup + 1e-12)
        self.assertLessEqual(report.volume_defect, 1e-12)

    def test_longer_times_scale_geometrically(self):
        one = bunching_report(PLASTIC, 1.0, 1.0)
        four = bunching_report(PLASTIC, 0.5, 2.0)
        self.assertAlmostEqual(four.stable_sup, one.stable_sup ** 4, places=12)
        self.assertEqual(four.nu_max_stable, one.nu_max_stable)

    def test_cat_map_is_borderline(self):
        report = bunching_report(CAT, 1.0, 1.0)
        self.assertAlmostEqual(report.stable_sup, 1.0, places=10)
        self.assertEqual(report.nu_max_stable, 0.9)

    def test_time_below_one_return(self):
        with self.assertRaises(ValueError):
            bunching_report(PLASTIC, 1.0, 0.5)
        with self.assertRaises(ValueError):
            bunching_report(PLASTIC, 0.0, 1.0)

    def test_volume_identity_needs_codimension_one(self):
        inverse = spectral_data(companion([1, 1, 0, -1]).inverse)
        with self.assertRaises(NotCodimensionOne):
            volume_identity_defect(inverse)
        self.assertIsNone(bunching_report(inverse, 1.0, 1.0).volume_defect)

    def test_frame(self):
        reports = [bunching_report(PLASTIC, 1.0, t, nu_grid=[0.5, 1.0]) for t in (1.0, 2.0)]
        frame = bunching_frame(reports)
        self.assertEqual(list(frame.columns), BUNCHING_COLUMNS)
        self.assertEqual(len(frame), 4)


class TestSampledSup(unittest.TestCase):

    def test_cat_map_single_step(self):
        sampled = sampled_bunching_sup(CAT, 1, 1.0)
        self.assertAlmostEqual(sampled.sampled, 1.0, places=9)
        self.assertAlmostEqual(sampled.rate_ratio, 1.0, places=9)

    def test_growth_rate_matches_closed_form(self):
        for weak in (False, True):
            sampled = sampled_bunching_sup(PLASTIC, 40, 1.0, weak=weak)
            self.assertLess(abs(sampled.rate_ratio - 1.0), 0.05)

    def test_seeded(self):
        first = sampled_bunching_sup(PLASTIC, 10, 1.5, samples=256, seed=4)
        second = sampled_bunching_sup(PLASTIC, 10, 1.5, samples=256, seed=4)
        self.assertEqual(first.sampled, second.sampled)

    def test_steps_positive(self):
        with self.assertRaises(ValueError):
            sampled_bunching_sup(PLASTIC, 0, 1.0)


if __name__ == '__main__':
    unittest.main()
