import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.optimize

from models.flow.leaves import (
    CHART_RADIUS,
    leaf_coordinates,
    precise_leaves,
    stable_adjustment,
    stable_adjustment_gradient,
    unstable_adjustment,
    unstable_adjustment_gradient,
)
from models.flow.suspension import FlowPoint, SuspensionFlow, evolve, flow_distance, hitting_time
from scripts.logging_config import logger
from utils.errors import LeafClosureFailed, NoIntersection
from utils.torus import ExactPoint, shift, to_float, wrap

CLOSURE_TOL = 1e-7
SAMPLE_TOL = 1e-6
_MAX_HORIZON = 5000


@dataclass(frozen=True, eq=False)
class Quadrilateral:
    """
    Data (a, b, x) of a temporal distance: b lies over a + s_disp on W^s(a) and x over
    a + u_disp on W^u_loc(a).
    """
    a: FlowPoint
    s_disp: np.ndarray
    u_disp: np.ndarray

    @classmethod
    def make(cls, a: FlowPoint, s_disp, u_disp) -> "Quadrilateral":
        return cls(a, np.asarray(s_disp, dtype=float), np.asarray(u_disp, dtype=float))

    def swapped(self) -> "Quadrilateral":
        """The quadrilateral based at b with the stable displacement reversed."""
        return Quadrilateral(FlowPoint(shift(self.a.x, self.s_disp), 0.0), -self.s_disp, self.u_disp)


@dataclass(frozen=True, eq=False)
class TemporalDistanceSample:
    quad: Quadrilateral
    value_series: float
    value_geometric: float

    @property
    def discrepancy(self) -> float:
        return abs(self.value_series - self.value_geometric)


def temporal_distance_series(flow: SuspensionFlow, quad: Quadrilateral) -> float:
    """
    Temporal distance from the four time adjustments around the quadrilateral.

    With z = a + s_disp + u_disp, the flow time from y (on W^u(b) over z) to Hol(x)
    (on W^s(x) over z) is Du(a, x) + Ds(x, z) - Ds(a, b) - Du(b, z); it is positive
    when Hol(x) lies forward in time from y.

    Args:
        flow (SuspensionFlow): The suspension flow.
        quad (Quadrilateral): Base point and leaf displacements.

    Returns:
        float: The temporal distance.
    """
    cs = leaf_coordinates(flow, quad.s_disp, 'stable')
    cu = leaf_coordinates(flow, quad.u_disp, 'unstable')
    a = quad.a.x
    b = shift(a, quad.s_disp)
    x = shift(a, quad.u_disp)
    return (unstable_adjustment(flow, a, cu).value
            + stable_adjustment(flow, x, cs).value
            - stable_adjustment(flow, a, cs).value
            - unstable_adjustment(flow, b, cu).value)


def pcf_gradient(flow: SuspensionFlow, a: FlowPoint, s_disp, u_disp) -> np.ndarray:
    """
    Derivative of the temporal distance in the unstable parameter at u_disp.

    Args:
        flow (SuspensionFlow): A bunched suspension flow.
        a (FlowPoint): Corner of the quadrilateral.
        s_disp: Stable displacement fixing b.
        u_disp: Unstable displacement where the derivative is taken.

    Returns:
        np.ndarray: Covector in the coordinates of the orthonormal unstable basis.

    Raises:
        NotBunched: Stable modulus times largest unstable modulus is at least 1.
    """
    cs = leaf_coordinates(flow, s_disp, 'stable')
    leaf_coordinates(flow, u_disp, 'unstable')
    b = shift(a.x, s_disp)
    x = shift(a.x, u_disp)
    z = shift(b, u_disp)
    return (unstable_adjustment_gradient(flow, x)
            + stable_adjustment_gradient(flow, x, cs)
            - unstable_adjustment_gradient(flow, z))


def _horizon(size: float, rate: float, lipschitz: float, target: float) -> int:
    """Section crossings after which a leaf displacement of `size` contributes below target."""
    if size == 0:
        return 1
    scale = 10.0 * max(1.0, lipschitz) * size
    n = math.ceil(math.log(target / scale) / math.log(rate)) + 20
    return max(1, min(n, _MAX_HORIZON))


def _stable_height(flow: SuspensionFlow, base: ExactPoint, point: ExactPoint, crossings: int) -> float:
    """Height over `point` of the strong stable leaf through (base, 0): its section crossings align with base's."""
    return hitting_time(flow, FlowPoint(point, 0.0), crossings) - hitting_time(flow, FlowPoint(base, 0.0), crossings)


def _unstable_height(flow: SuspensionFlow, base: ExactPoint, point: ExactPoint, crossings: int) -> float:
    """Height over `point` of the strong unstable leaf through (base, 0), from backward crossings."""
    n = -crossings - 1
    return hitting_time(flow, FlowPoint(point, 0.0), n) - hitting_time(flow, FlowPoint(base, 0.0), n)


def _leaf_closure(flow: SuspensionFlow, p: FlowPoint, q: FlowPoint, crossings: int, forward: bool) -> float:
    """Flow distance between p and q after p has crossed the section `crossings` times."""
    margin = 0.5 * flow.roof.positivity_margin
    if forward:
        t = hitting_time(flow, p, crossings) + margin
    else:
        t = hitting_time(flow, p, -crossings - 1) - margin
    return flow_distance(flow, evolve(flow, p, t), evolve(flow, q, t))


def temporal_distance_geometric(flow: SuspensionFlow, quad: Quadrilateral, tol: float = 1e-10,
                                radius: float = CHART_RADIUS) -> float:
    """
    Temporal distance from an explicit construction of Hol_{a,b}(x) and y.

    The corners b, x and z are exact points placed on the high-precision leaves, with z
    located by root-solving x + E^s alpha = b + E^u beta on the torus. Each corner gets
    the flow height that lines up its section crossings with those of its neighbour on
    the same strong leaf, measured by hitting_time along exact orbits. Every constructed
    point is then flowed with evolve next to its neighbour to confirm that the pair
    really converges, forward on stable leaves and backward on unstable ones.

    Args:
        flow (SuspensionFlow): The suspension flow.
        quad (Quadrilateral): Base point and leaf displacements.
        tol (float): Target accuracy, at least 1e-10.
        radius (float): Chart radius for the intersection parameters.

    Returns:
        float: Flow time from y to Hol(x).

    Raises:
        NoIntersection: The intersection was not found inside the chart.
        LeafClosureFailed: A constructed point drifts away from its leaf neighbour.
    """
    if tol < 1e-10:
        raise ValueError(f"tol must be at least 1e-10, got {tol}")
    if max(np.linalg.norm(quad.s_disp), np.linalg.norm(quad.u_disp)) > radius:
        raise NoIntersection(f"Quadrilateral sides exceed chart radius {radius}")

    leaves = precise_leaves(flow.base)
    es, eu = leaves.float_basis('stable'), leaves.float_basis('unstable')
    a = quad.a.x
    b = leaves.leaf_point(a, quad.s_disp, 'stable')
    x = leaves.leaf_point(a, quad.u_disp, 'unstable')
    b_f, x_f = to_float(b), to_float(x)
    ks = es.shape[1]

    def mismatch(params):
        return wrap(x_f + es @ params[:ks] - b_f - eu @ params[ks:])

    solution = scipy.optimize.root(mismatch, np.zeros(flow.dim), tol=1e-15)
    alpha, beta = solution.x[:ks], solution.x[ks:]
    if np.max(np.abs(mismatch(solution.x))) > 1e-12:
        raise NoIntersection(f"Leaf intersection did not converge: {solution.message}")
    if max(np.linalg.norm(es @ alpha), np.linalg.norm(eu @ beta)) > radius:
        raise NoIntersection("Leaf intersection lies outside the chart")
    z_s = leaves.along(x, alpha, 'stable')
    z_u = leaves.along(b, beta, 'unstable')

    lipschitz = flow.roof.poly.lipschitz_bound
    target = tol * 1e-3
    sizes = {
        'b': float(np.linalg.norm(quad.s_disp)), 'x': float(np.linalg.norm(quad.u_disp)),
        'hol': float(np.linalg.norm(es @ alpha)), 'y': float(np.linalg.norm(eu @ beta)),
    }
    n_s = _horizon(max(sizes['b'], sizes['hol']), leaves.stable_rate, lipschitz, target)
    n_u = _horizon(max(sizes['x'], sizes['y']), 1.0 / leaves.unstable_rate, lipschitz, target)

    height_b = _stable_height(flow, a, b, n_s)
    height_x = _unstable_height(flow, a, x, n_u)
    height_hol = height_x + _stable_height(flow, x, z_s, n_s)
    height_y = height_b + _unstable_height(flow, b, z_u, n_u)
    value = height_hol - height_y

    s_a = quad.a.s
    a_pt = quad.a
    b_pt = flow.point(b, s_a + height_b)
    x_pt = flow.point(x, s_a + height_x)
    hol = flow.point(z_s, s_a + height_hol)
    y = flow.point(z_u, s_a + height_y)
    m_s = _horizon(max(sizes['b'], sizes['hol']), leaves.stable_rate, lipschitz, CLOSURE_TOL)
    m_u = _horizon(max(sizes['x'], sizes['y']), 1.0 / leaves.unstable_rate, lipschitz, CLOSURE_TOL)
    closures = {
        'b': _leaf_closure(flow, a_pt, b_pt, m_s, forward=True),
        'x': _leaf_closure(flow, a_pt, x_pt, m_u, forward=False),
        'hol': _leaf_closure(flow, x_pt, hol, m_s, forward=True),
        'y': _leaf_closure(flow, b_pt, y, m_u, forward=False),
    }
    worst = max(closures, key=closures.get)
    if closures[worst] > CLOSURE_TOL:
        logger.error(f"Corner {worst} separates from its leaf neighbour by {closures[worst]:.3e}")
        raise LeafClosureFailed(f"Corner {worst} is {closures[worst]:.3e} from its leaf neighbour after flowing")
    logger.debug(f"Geometric temporal distance {value:.6g}, worst closure {closures[worst]:.1e} at {worst}")
    return value


def antisymmetry_defect(flow: SuspensionFlow, quads: Sequence[Quadrilateral]) -> float:
    """Largest |rho(q) + rho(q.swapped())|: exchanging a and b reverses the temporal distance."""
    worst = 0.0
    for q in quads:
        worst = max(worst, abs(temporal_distance_series(flow, q) + temporal_distance_series(flow, q.swapped())))
    return worst


def sample_quadrilaterals(flow: SuspensionFlow, count: int, seed: int, radius: float = CHART_RADIUS) -> List[Quadrilateral]:
    """
    Draws seeded random quadrilaterals with sides of length in [0.2, 1] * radius.

    Args:
        flow (SuspensionFlow): The suspension flow.
        count (int): Number of quadrilaterals.
        seed (int): Seed of the numpy generator.
        radius (float): Chart radius.

    Returns:
        List[Quadrilateral]: The samples, in draw order.
    """
    rng = np.random.default_rng(seed)
    spectral = flow.spectral
    quads = []
    for _ in range(count):
        x = rng.random(flow.dim)
        a = FlowPoint.make(x, rng.random() * float(flow.roof.evaluate(x)))
        sides = []
        for basis in (spectral.stable_basis, spectral.unstable_basis):
            direction = rng.standard_normal(basis.shape[1])
            direction /= np.linalg.norm(direction)
            sides.append(basis @ (direction * radius * rng.uniform(0.2, 1.0)))
        quads.append(Quadrilateral.make(a, sides[0], sides[1]))
    return quads


def sample_temporal_distances(flow: SuspensionFlow, quads: Sequence[Quadrilateral],
                              tol: float = 1e-10) -> List[TemporalDistanceSample]:
    samples = [TemporalDistanceSample(q, temporal_distance_series(flow, q), temporal_distance_geometric(flow, q, tol))
               for q in quads]
    worst = max((s.discrepancy for s in samples), default=0.0)
    if worst > SAMPLE_TOL:
        logger.warning(f"Series and geometric temporal distances differ by up to {worst:.3e}")
    logger.info(f"Computed {len(samples)} temporal distance samples, max discrepancy {worst:.3e}")
    return samples


def sample_columns(dim: int) -> List[str]:
    return ([f"ax{i + 1}" for i in range(dim)] + ['as']
            + [f"sdisp{i + 1}" for i in range(dim)] + [f"udisp{i + 1}" for i in range(dim)]
            + ['value_series', 'value_geometric', 'discrepancy'])


def sample_frame(samples: Sequence[TemporalDistanceSample], dim: int) -> pd.DataFrame:
    rows = []
    for s in samples:
        values: Tuple[float, ...] = (*s.quad.a.coords, s.quad.a.s, *s.quad.s_disp, *s.quad.u_disp,
                                     s.value_series, s.value_geometric, s.discrepancy)
        rows.append(dict(zip(sample_columns(dim), values)))
    return pd.DataFrame(rows, columns=sample_columns(dim))
