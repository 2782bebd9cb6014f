import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from models.roof.trig_polynomial import Frequency, RoofFunction, TrigPolynomial
from models.spectral.automorphism import IntegerMatrix
from scripts.logging_config import logger
from utils.errors import NonHyperbolicPeriod, ObstructionNonzero, TruncationInsufficient
from utils.torus import ExactPoint, affine_step, to_exact, to_float

OBSTRUCTION_TOL = 1e-8
RESIDUAL_TOL = 1e-9
OBSTRUCTION_COLUMNS = ['period_n', 'orbit_repr', 'average']
_MAX_ORBIT_WALK = 10_000
_GRID_SHIFT = math.sqrt(2.0) - 1.0

Evaluable = Union[RoofFunction, TrigPolynomial]


@dataclass(frozen=True)
class PeriodicOrbitRecord:
    """One periodic orbit of the base map, listed in dynamical order."""
    base_points: Tuple[ExactPoint, ...]
    period_n: int
    flow_period: Optional[float] = None

    @property
    def representative(self) -> str:
        first = min(self.base_points)
        return ' '.join(str(c) for c in first)


@dataclass(frozen=True)
class ObstructionReport:
    entries: Tuple[Tuple[PeriodicOrbitRecord, float], ...]
    spread: float
    n_max: int

    @property
    def averages(self) -> List[float]:
        return [avg for _, avg in self.entries]


@dataclass(frozen=True, eq=False)
class CoboundarySolution:
    constant_c: float
    transfer_u: TrigPolynomial
    residual_sup: float
    obstruction_spread: float
    trunc: int


def _iterate(matrix: IntegerMatrix, x: ExactPoint, n: int) -> List[ExactPoint]:
    zero = (Fraction(0),) * matrix.dim
    points = [x]
    for _ in range(n - 1):
        points.append(affine_step(matrix.entries, zero, points[-1]))
    return points


def birkhoff_sum(roof: Evaluable, matrix: IntegerMatrix, x, n: int) -> float:
    """
    Computes sum_{k=0}^{n-1} r(M^k x).

    The orbit is iterated in exact rational arithmetic and the values are added with
    compensated summation.

    Args:
        roof: RoofFunction or TrigPolynomial to sum.
        matrix (IntegerMatrix): The base automorphism.
        x: Starting point (floats or Fractions).
        n (int): Number of terms, at least 1.

    Returns:
        float: The Birkhoff sum.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    points = _iterate(matrix, to_exact(x), n)
    values = roof.evaluate(np.array([to_float(p) for p in points]))
    return math.fsum(float(v) for v in values)


def periodic_points(matrix: IntegerMatrix, n: int, roof: Optional[Evaluable] = None) -> List[PeriodicOrbitRecord]:
    """
    Enumerates every point of period n, grouped into orbits.

    With A = M^n - I and D = |det A|, the solutions of Ax in Z^d are the points v/D where v
    runs over the subgroup of (Z/D)^d generated by the columns of adj(A).

    Args:
        matrix (IntegerMatrix): The base automorphism.
        n (int): Period, at least 1.
        roof: Optional roof; when given each record carries its flow period.

    Returns:
        List[PeriodicOrbitRecord]: Orbits whose minimal period divides n.

    Raises:
        NonHyperbolicPeriod: det(M^n - I) = 0.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    a = matrix.power_minus_identity(n)
    det = int(a.det())
    if det == 0:
        raise NonHyperbolicPeriod(f"det(M^{n} - I) = 0 for {matrix.to_list()}")
    big_d = abs(det)
    d = matrix.dim
    adj = a.adjugate()
    generators = {tuple(int(adj[i, j]) % big_d for i in range(d)) for j in range(d)}
    generators.discard((0,) * d)

    group = {(0,) * d}
    queue = deque(group)
    while queue:
        v = queue.popleft()
        for g in generators:
            w = tuple((a_ + b_) % big_d for a_, b_ in zip(v, g))
            if w not in group:
                group.add(w)
                queue.append(w)
    if len(group) != big_d:
        raise RuntimeError(f"Found {len(group)} period-{n} points, expected {big_d}")

    rows = matrix.entries
    remaining = set(group)
    records = []
    for start in sorted(group):
        if start not in remaining:
            continue
        orbit = [start]
        remaining.discard(start)
        while True:
            nxt = tuple(sum(m * c for m, c in zip(row, orbit[-1])) % big_d for row in rows)
            if nxt == start:
                break
            orbit.append(nxt)
            remaining.discard(nxt)
        points = tuple(tuple(Fraction(c, big_d) for c in v) for v in orbit)
        flow_period = birkhoff_sum(roof, matrix, points[0], len(points)) if roof is not None else None
        records.append(PeriodicOrbitRecord(base_points=points, period_n=len(points), flow_period=flow_period))

    logger.debug(f"Period {n}: {big_d} points in {len(records)} orbits")
    return records


def periodic_obstructions(roof: Evaluable, matrix: IntegerMatrix, n_max: int) -> ObstructionReport:
    """
    Collects the roof average over every periodic orbit of period up to n_max.

    Orbits found again at a multiple of their period are listed once.

    Args:
        roof: Roof to average.
        matrix (IntegerMatrix): The base automorphism.
        n_max (int): Largest period examined.

    Returns:
        ObstructionReport: (orbit, average) pairs and the spread max - min.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}")
    seen = set()
    entries = []
    for n in range(1, n_max + 1):
        for record in periodic_points(matrix, n, roof):
            key = frozenset(record.base_points)
            if key in seen:
                continue
            seen.add(key)
            entries.append((record, record.flow_period / record.period_n))
    averages = [avg for _, avg in entries]
    spread = max(averages) - min(averages)
    logger.info(f"Periodic obstructions up to n={n_max}: {len(entries)} orbits, spread {spread:.3e}")
    return ObstructionReport(entries=tuple(entries), spread=spread, n_max=n_max)


def obstruction_frame(report: ObstructionReport) -> pd.DataFrame:
    rows = [{'period_n': rec.period_n, 'orbit_repr': rec.representative, 'average': avg}
            for rec, avg in report.entries]
    return pd.DataFrame(rows, columns=OBSTRUCTION_COLUMNS)


def is_constant_roof_equivalent(roof: Evaluable, matrix: IntegerMatrix, n_max: int = 6,
                                tol: float = OBSTRUCTION_TOL) -> bool:
    return periodic_obstructions(roof, matrix, n_max).spread <= tol


def _frequency_orbit(start: Frequency, forward: np.ndarray, backward: np.ndarray, trunc: int) -> List[Frequency]:
    """Orbit segment of `start` under N = M^T, cut where the sup norm exceeds trunc."""
    before, after = [], []
    k = np.array(start, dtype=np.int64)
    for _ in range(_MAX_ORBIT_WALK):
        k = backward @ k
        if np.max(np.abs(k)) > trunc:
            break
        before.append(tuple(int(v) for v in k))
    k = np.array(start, dtype=np.int64)
    for _ in range(_MAX_ORBIT_WALK):
        k = forward @ k
        if np.max(np.abs(k)) > trunc:
            break
        after.append(tuple(int(v) for v in k))
    return before[::-1] + [tuple(start)] + after


def _transfer_function(roof_poly: TrigPolynomial, matrix: IntegerMatrix, trunc: int) -> TrigPolynomial:
    forward = np.array(matrix.transpose.entries, dtype=np.int64)
    backward = np.array(matrix.inverse.transpose.entries, dtype=np.int64)
    coeffs: Dict[Frequency, complex] = dict(roof_poly.terms)
    visited = set()
    transfer: Dict[Frequency, complex] = {}
    for k, _ in roof_poly.terms:
        if not any(k) or k in visited:
            continue
        orbit = _frequency_orbit(k, forward, backward, trunc)
        visited.update(orbit)
        # u_{k_j} = sum_{i > j} r_{k_i}
        tail = 0j
        for freq in reversed(orbit):
            if tail != 0:
                transfer[freq] = tail
            tail += coeffs.get(freq, 0j)
    return TrigPolynomial.from_terms(roof_poly.dim, transfer)


def _residual_grid(dim: int) -> np.ndarray:
    per_axis = 64 if dim <= 2 else 12
    axis = (np.arange(per_axis) + _GRID_SHIFT) / per_axis
    return np.stack([g.ravel() for g in np.meshgrid(*([axis] * dim), indexing='ij')], axis=1)


def coboundary_residual(roof_poly: TrigPolynomial, transfer: TrigPolynomial, constant: float,
                        matrix: IntegerMatrix, grid: Optional[np.ndarray] = None) -> float:
    """sup over the grid of |u(Mx) - u(x) - (r(x) - c)|."""
    grid = _residual_grid(roof_poly.dim) if grid is None else grid
    image = (grid @ matrix.array.T) % 1.0
    diff = transfer.evaluate(image) - transfer.evaluate(grid) - (roof_poly.evaluate(grid) - constant)
    return float(np.max(np.abs(diff)))


def solve_coboundary(roof: Evaluable, matrix: IntegerMatrix, trunc: int, tol: float = OBSTRUCTION_TOL,
                     n_max: int = 6, residual_tol: float = RESIDUAL_TOL) -> CoboundarySolution:
    """
    Solves r - c = u o L - u for a trigonometric transfer function u.

    Along each frequency orbit k_i = N^i k_0 of N = M^T the equation reads
    u_{k_{i-1}} - u_{k_i} = r_{k_i}, solved by the forward one-sided sum. Orbit walks stop
    where the frequency sup norm exceeds trunc; if the residual then misses `residual_tol`,
    the solve is repeated once with 2 * trunc.

    Args:
        roof: Roof function r.
        matrix (IntegerMatrix): The base automorphism L.
        trunc (int): Frequency bound, at least the largest frequency of r.
        tol (float): Admissible spread of periodic averages.
        n_max (int): Largest period used for the obstruction check.
        residual_tol (float): Required sup residual.

    Returns:
        CoboundarySolution: Constant, transfer function and independently measured residual.

    Raises:
        ObstructionNonzero: Periodic averages disagree by more than tol.
        TruncationInsufficient: The residual did not improve with doubled truncation.
    """
    poly = roof.poly if isinstance(roof, RoofFunction) else roof
    if trunc < poly.max_frequency:
        raise ValueError(f"trunc {trunc} is below the roof's largest frequency {poly.max_frequency}")

    report = periodic_obstructions(poly, matrix, n_max)
    if report.spread > tol:
        raise ObstructionNonzero(f"Periodic averages spread {report.spread:.3e} exceeds {tol:.1e}")

    constant = poly.mean
    transfer = _transfer_function(poly, matrix, trunc)
    residual = coboundary_residual(poly, transfer, constant, matrix)
    if residual > residual_tol:
        logger.warning(f"Coboundary residual {residual:.3e} at trunc={trunc}; retrying with {2 * trunc}")
        retry = _transfer_function(poly, matrix, 2 * trunc)
        retry_residual = coboundary_residual(poly, retry, constant, matrix)
        if retry_residual >= residual:
            raise TruncationInsufficient(
                f"Residual {retry_residual:.3e} at trunc={2 * trunc} did not improve on {residual:.3e}")
        transfer, residual, trunc = retry, retry_residual, 2 * trunc

    logger.info(f"Coboundary solved: c={constant:.12g}, {len(transfer.terms)} terms, residual {residual:.3e}")
    return CoboundarySolution(constant_c=constant, transfer_u=transfer, residual_sup=residual,
                              obstruction_spread=report.spread, trunc=trunc)
