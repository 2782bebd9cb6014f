import unittest
from fractions import Fraction

import numpy as np

from models.flow.leaves import (
    leaf_coordinates,
    precise_leaves,
    stable_adjustment,
    stable_adjustment_gradient,
    strong_manifold_point,
    time_adjustment,
    unstable_adjustment,
    unstable_adjustment_gradient,
)
from models.flow.suspension import (
    FlowPoint,
    SuspensionFlow,
    evolve,
    evolve_with_crossings,
    flow_distance,
    hitting_time,
    trajectory_frame,
)
from models.roof.livshits import birkhoff_sum
from models.roof.trig_polynomial import RoofFunction, TrigPolynomial
from models.spectral.automorphism import IntegerMatrix, companion
from utils.errors import NotBunched, OffLeaf
from utils.torus import to_float, wrap

PLASTIC = companion([1, 1, 0, -1])
CAT = IntegerMatrix.from_rows([[2, 1], [1, 1]])
START = (Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))


def cosine_flow(matrix=PLASTIC, amplitude=0.1) -> SuspensionFlow:
    roof = TrigPolynomial.constant(matrix.dim, 1.0) + TrigPolynomial.cosine(
        matrix.dim, (1,) + (0,) * (matrix.dim - 1), amplitude)
    return SuspensionFlow.build(matrix, RoofFunction.certify(roof))


def constant_flow(matrix=PLASTIC) -> SuspensionFlow:
    return SuspensionFlow.build(matrix, RoofFunction.certify(TrigPolynomial.constant(matrix.dim, 1.0)))


class TestSuspension(unittest.TestCase):

    def setUp(self):
        self.flow = cosine_flow()
        self.p = FlowPoint.make(START, 0.25)

    def test_evolve_composes(self):
        two_steps = evolve(self.flow, evolve(self.flow, self.p, 0.7), 1.3)
        one_step = evolve(self.flow, self.p, 2.0)
        self.assertLess(flow_distance(self.flow, two_steps, one_step), 1e-9)

    def test_evolve_backward_inverts(self):
        back = evolve(self.flow, evolve(self.flow, self.p, -3.2), 3.2)
        self.assertLess(flow_distance(self.flow, back, self.p), 1e-9)

    def test_evolve_stays_in_fundamental_domain(self):
        for t in (0.1, 1.9, 5.5, -2.4):
            q = evolve(self.flow, self.p, t)
            self.assertGreaterEqual(q.s, 0.0)
            self.assertLess(q.s, self.flow.roof_at(q.x))

    def test_evolve_time_limit(self):
        with self.assertRaises(ValueError):
            evolve(self.flow, self.p, 2e6)

    def test_hitting_time(self):
        self.assertAlmostEqual(hitting_time(self.flow, self.p, 1), self.flow.roof_at(self.p.x) - 0.25, places=12)
        self.assertAlmostEqual(hitting_time(self.flow, self.p, -1), -0.25, places=12)
        with self.assertRaises(ValueError):
            hitting_time(self.flow, self.p, 0)

    def test_trajectory_frame_columns(self):
        frame = trajectory_frame(self.flow, self.p, [0.0, 0.5])
        self.assertEqual(list(frame.columns), ['t', 'x1', 'x2', 'x3', 's'])
        self.assertEqual(len(frame), 2)

    def test_roof_crossings_follow_birkhoff_sums(self):
        start = FlowPoint(START, 0.0)
        margin = 0.5 * self.flow.roof.positivity_margin
        for n in range(1, 21):
            forward = self.flow.orbit(START, n + 1)[-1]
            total = birkhoff_sum(self.flow.roof, PLASTIC, START, n)
            landed = evolve(self.flow, start, total)
            self.assertLess(flow_distance(self.flow, landed, FlowPoint(forward, 0.0)), 1e-8)
            q, crossings = evolve_with_crossings(self.flow, start, total + margin)
            self.assertEqual((q.x, crossings), (forward, n))

            backward = self.flow.orbit(START, -n)[-1]
            q, crossings = evolve_with_crossings(self.flow, start, margin - birkhoff_sum(self.flow.roof, PLASTIC, backward, n))
            self.assertEqual((q.x, crossings), (backward, -n))

    def test_translation_dimension_checked(self):
        roof = RoofFunction.certify(TrigPolynomial.constant(3, 1.0))
        with self.assertRaises(ValueError):
            SuspensionFlow.build(PLASTIC, roof, translation=(Fraction(1, 2),))


class TestLeaves(unittest.TestCase):

    def setUp(self):
        self.flow = cosine_flow()

    def test_constant_roof_has_no_adjustment(self):
        flow = constant_flow()
        self.assertEqual(stable_adjustment(flow, START, np.array([0.01])).value, 0.0)
        self.assertEqual(unstable_adjustment(flow, START, np.array([0.01, -0.02])).value, 0.0)

    def test_stable_adjustment_matches_direct_sum(self):
        cs = 0.01
        lam = float(self.flow.spectral.stable_matrix[0, 0])
        direction = self.flow.spectral.stable_basis[:, 0]
        total = 0.0
        for n, x in enumerate(self.flow.orbit(START, 80)):
            base = to_float(x)
            total += float(self.flow.roof.evaluate(base + direction * cs * lam ** n) - self.flow.roof.evaluate(base))
        self.assertAlmostEqual(stable_adjustment(self.flow, START, np.array([cs])).value, total, delta=1e-9)

    def test_time_adjustment_rejects_transverse_displacement(self):
        x = to_float(START)
        off_leaf = x + 0.01 * self.flow.spectral.unstable_basis[:, 0] + 0.01 * self.flow.spectral.stable_basis[:, 0]
        with self.assertRaises(OffLeaf):
            time_adjustment(self.flow, x, off_leaf, 'stable')

    def test_leaf_coordinates(self):
        v = 0.02 * self.flow.spectral.stable_basis[:, 0]
        np.testing.assert_allclose(leaf_coordinates(self.flow, v, 'stable'), [0.02], atol=1e-12)
        with self.assertRaises(ValueError):
            leaf_coordinates(self.flow, v, 'sideways')

    def test_strong_manifold_point_zero_displacement(self):
        p = FlowPoint.make(START, 0.3)
        self.assertIs(strong_manifold_point(self.flow, p, np.zeros(3)), p)

    def test_unstable_gradient_matches_finite_differences(self):
        gradient = unstable_adjustment_gradient(self.flow, START)
        h = 1e-5
        for i in range(self.flow.spectral.unstable_dim):
            e = np.zeros(self.flow.spectral.unstable_dim)
            e[i] = h
            fd = (unstable_adjustment(self.flow, START, e).value - unstable_adjustment(self.flow, START, -e).value) / (2 * h)
            self.assertAlmostEqual(gradient[i], fd, delta=1e-6)

    def test_stable_gradient_needs_bunching(self):
        cat = cosine_flow(CAT)
        with self.assertRaises(NotBunched):
            stable_adjustment_gradient(cat, (Fraction(1, 3), Fraction(1, 5)), np.array([0.01]))

    def test_stable_gradient_vanishes_for_constant_roof(self):
        gradient = stable_adjustment_gradient(constant_flow(), START, np.array([0.01]))
        np.testing.assert_array_equal(gradient, np.zeros(2))


class TestLeafAsymptotics(unittest.TestCase):

    def setUp(self):
        self.flow = cosine_flow(CAT, amplitude=0.5)
        self.x = (Fraction(1, 4), Fraction(1, 10))
        v = 0.04 * self.flow.spectral.stable_basis[:, 0]
        self.v = v if v[0] > 0 else -v
        self.y = precise_leaves(CAT).leaf_point(self.x, self.v, 'stable')

    def distances(self, q):
        p = FlowPoint(self.x, 0.0)
        return [flow_distance(self.flow, evolve(self.flow, p, t), evolve(self.flow, q, t)) for t in (10.0, 20.0, 30.0)]

    def test_leaf_point_sits_on_the_leaf(self):
        np.testing.assert_allclose(wrap(to_float(self.y) - to_float(self.x)), self.v, atol=1e-15)
        with self.assertRaises(OffLeaf):
            precise_leaves(CAT).leaf_point(self.x, [0.01, 0.01], 'stable')

    def test_time_adjustment_makes_leaf_points_asymptotic(self):
        delta = time_adjustment(self.flow, self.x, self.y, 'stable')
        self.assertGreater(abs(delta), 1e-2)
        adjusted = self.distances(self.flow.point(self.y, delta))
        self.assertGreater(adjusted[0], adjusted[1])
        self.assertGreater(adjusted[1], adjusted[2])
        self.assertLess(adjusted[2], 1e-6)
        self.assertGreater(self.distances(FlowPoint(self.y, 0.0))[2], 1e-2)

    def test_strong_manifold_point_is_asymptotic(self):
        q = strong_manifold_point(self.flow, FlowPoint(self.x, 0.0), self.v)
        self.assertLess(self.distances(q)[2], 1e-6)


if __name__ == '__main__':
    unittest.main()
