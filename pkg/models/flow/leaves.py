from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from mpmath import mp

from models.flow.suspension import FlowPoint, SuspensionFlow, evolve
from models.spectral.automorphism import IntegerMatrix
from scripts.logging_config import logger
from utils.errors import NotBunched, OffLeaf
from utils.torus import ExactPoint, to_exact, to_float, wrap

CHART_RADIUS = 0.05
SERIES_TOL = 1e-14
LEAF_TOL = 1e-10
LEAF_DPS = 50
_EXACT_BITS = 200
_MAX_TERMS = 20_000


def _mp_to_fraction(value) -> Fraction:
    return Fraction(int(mp.nint(mp.ldexp(value, _EXACT_BITS))), 1 << _EXACT_BITS)


class PreciseLeaves:
    """
    Stable and unstable foliations of a toral automorphism at LEAF_DPS digits.

    Leaf directions are mpmath eigenvectors (real and imaginary parts for complex pairs).
    Points placed on a leaf through `along` or `leaf_point` are exact rationals within
    2^-200 of the true leaf, so exact orbits started from them do not drift off it on any
    horizon that double-precision roof sums can resolve.

    Attributes:
        stable (List[list]): Stable directions as mpf columns.
        unstable (List[list]): Unstable directions as mpf columns.
        stable_rate (float): Weakest contraction, the largest stable modulus.
        unstable_rate (float): Weakest expansion, the smallest unstable modulus.
    """

    def __init__(self, base: IntegerMatrix):
        d = base.dim
        stable, unstable = [], []
        stable_rate, unstable_rate = 0.0, float('inf')
        with mp.workdps(LEAF_DPS):
            eigenvalues, vectors = mp.eig(mp.matrix([[mp.mpf(v) for v in row] for row in base.entries]))
            for i, lam in enumerate(eigenvalues):
                column = [vectors[j, i] for j in range(d)]
                pivot = max(column, key=abs)
                column = [c / pivot for c in column]
                modulus = float(abs(lam))
                target = stable if modulus < 1 else unstable
                if abs(mp.im(lam)) < mp.mpf(10) ** (-30):
                    target.append([mp.re(c) for c in column])
                elif mp.im(lam) > 0:
                    target.append([mp.re(c) for c in column])
                    target.append([mp.im(c) for c in column])
                if modulus < 1:
                    stable_rate = max(stable_rate, modulus)
                else:
                    unstable_rate = min(unstable_rate, modulus)
        self.dim = d
        self.stable = stable
        self.unstable = unstable
        self.stable_rate = stable_rate
        self.unstable_rate = unstable_rate

    def _basis(self, direction: str) -> List[list]:
        if direction not in ('stable', 'unstable'):
            raise ValueError(f"direction must be 'stable' or 'unstable', got {direction!r}")
        return self.stable if direction == 'stable' else self.unstable

    def float_basis(self, direction: str) -> np.ndarray:
        """Leaf directions rounded to double precision, one per column."""
        return np.array([[float(c) for c in col] for col in self._basis(direction)]).T

    def along(self, x: ExactPoint, coeffs: Sequence[float], direction: str) -> ExactPoint:
        """Exact point x + sum_i coeffs[i] e_i for the high-precision leaf directions e_i."""
        basis = self._basis(direction)
        with mp.workdps(LEAF_DPS):
            point = []
            for j, c in enumerate(x):
                value = mp.mpf(c.numerator) / c.denominator
                value += mp.fsum(mp.mpf(float(k)) * col[j] for k, col in zip(coeffs, basis))
                point.append(_mp_to_fraction(value))
        return to_exact(point)

    def leaf_point(self, x: ExactPoint, displacement, direction: str) -> ExactPoint:
        """
        The point of the stable or unstable leaf of x closest to x + displacement.

        Args:
            x (ExactPoint): Base point.
            displacement: Base displacement, on the leaf to about double precision.
            direction (str): 'stable' or 'unstable'.

        Returns:
            ExactPoint: Exact rational point on the leaf through x.

        Raises:
            OffLeaf: The displacement is at least 1e-10 away from the leaf direction.
        """
        coeffs, defect = self.coefficients(displacement, direction)
        if defect >= LEAF_TOL:
            raise OffLeaf(f"Displacement is off the {direction} leaf by {defect:.3e}")
        return self.along(x, coeffs, direction)

    def coefficients(self, displacement, direction: str) -> Tuple[np.ndarray, float]:
        """Least-squares coordinates along the leaf directions and the transverse defect."""
        basis = self._basis(direction)
        d, k = self.dim, len(basis)
        with mp.workdps(LEAF_DPS):
            frame = mp.matrix(d, k)
            for i, col in enumerate(basis):
                for j in range(d):
                    frame[j, i] = col[j]
            target = mp.matrix([mp.mpf(float(c)) for c in displacement])
            coeffs = mp.lu_solve(frame.T * frame, frame.T * target)
            defect = float(mp.norm(frame * coeffs - target))
            return np.array([float(coeffs[i]) for i in range(k)]), defect


@lru_cache(maxsize=64)
def precise_leaves(base: IntegerMatrix) -> PreciseLeaves:
    return PreciseLeaves(base)


@dataclass(frozen=True)
class AdjustmentSeries:
    value: float
    terms: int
    tail_bound: float


def _tail_factor(matrix: np.ndarray) -> float:
    """sum_{j>=1} ||A^j||_2 for a matrix with spectral radius below 1."""
    total, power = 0.0, np.eye(matrix.shape[0])
    for _ in range(_MAX_TERMS):
        power = matrix @ power
        norm = float(np.linalg.norm(power, 2))
        total += norm
        if norm < 1e-17:
            break
    return total


def _contracting_orbit(matrix: np.ndarray, coords: np.ndarray, scale: float, tol: float) -> Tuple[List[np.ndarray], float]:
    """
    Iterates coords under a contracting matrix until the certified remainder
    scale * ||A^n c|| * (1 + sum_j ||A^j||) drops below tol.
    """
    factor = 1.0 + _tail_factor(matrix)
    iterates = []
    current = np.asarray(coords, dtype=float)
    for _ in range(_MAX_TERMS):
        bound = scale * float(np.linalg.norm(current)) * factor
        if bound < tol:
            return iterates, bound
        iterates.append(current)
        current = matrix @ current
    raise RuntimeError("Time-adjustment series did not reach its tolerance")


def _evaluate_along(points: List[ExactPoint], offsets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Float orbit points and the same points moved by the leaf offsets."""
    base = np.array([to_float(p) for p in points])
    return base, base + offsets


def stable_adjustment(flow: SuspensionFlow, x: ExactPoint, cs: np.ndarray, tol: float = SERIES_TOL) -> AdjustmentSeries:
    """
    Delta^s(x, x + B_s cs) = sum_{n>=0} [r(L^n y) - r(L^n x)].

    Args:
        flow (SuspensionFlow): The suspension flow.
        x (ExactPoint): Base point.
        cs (np.ndarray): Stable coordinates of the displacement.
        tol (float): Bound on the neglected tail.

    Returns:
        AdjustmentSeries: Sum, number of terms and certified tail bound.
    """
    spectral = flow.spectral
    iterates, tail = _contracting_orbit(spectral.stable_matrix, cs, flow.roof.poly.lipschitz_bound, tol)
    if not iterates:
        return AdjustmentSeries(0.0, 0, tail)
    offsets = np.array(iterates) @ spectral.stable_basis.T
    base, moved = _evaluate_along(flow.orbit(x, len(iterates)), offsets)
    value = float(np.sum(flow.roof.evaluate(moved) - flow.roof.evaluate(base)))
    return AdjustmentSeries(value, len(iterates), tail)


def unstable_adjustment(flow: SuspensionFlow, x: ExactPoint, cu: np.ndarray, tol: float = SERIES_TOL) -> AdjustmentSeries:
    """Delta^u(x, x + B_u cu) = sum_{n>=1} [r(L^{-n} x) - r(L^{-n} y)]."""
    spectral = flow.spectral
    inverse = np.linalg.inv(spectral.unstable_matrix)
    first = inverse @ np.asarray(cu, dtype=float)
    iterates, tail = _contracting_orbit(inverse, first, flow.roof.poly.lipschitz_bound, tol)
    if not iterates:
        return AdjustmentSeries(0.0, 0, tail)
    offsets = np.array(iterates) @ spectral.unstable_basis.T
    base, moved = _evaluate_along(flow.orbit(x, -len(iterates)), offsets)
    value = float(np.sum(flow.roof.evaluate(base) - flow.roof.evaluate(moved)))
    return AdjustmentSeries(value, len(iterates), tail)


def leaf_coordinates(flow: SuspensionFlow, displacement, direction: str) -> np.ndarray:
    """
    Coordinates of a base displacement along E^s or E^u.

    Raises:
        OffLeaf: The component transverse to the requested subspace is at least 1e-10.
    """
    if direction not in ('stable', 'unstable'):
        raise ValueError(f"direction must be 'stable' or 'unstable', got {direction!r}")
    spectral = flow.spectral
    cs, cu = spectral.split(np.asarray(displacement, dtype=float))
    if direction == 'stable':
        transverse = float(np.linalg.norm(spectral.unstable_basis @ cu))
        coords = cs
    else:
        transverse = float(np.linalg.norm(spectral.stable_basis @ cs))
        coords = cu
    if transverse >= LEAF_TOL:
        raise OffLeaf(f"Displacement has transverse component {transverse:.3e} to E^{direction[0]}")
    return coords


def time_adjustment(flow: SuspensionFlow, x, y, direction: str, radius: float = CHART_RADIUS) -> float:
    """
    Flow-time offset that places (y, Delta) on the strong leaf of (x, 0).

    Args:
        flow (SuspensionFlow): The suspension flow.
        x: Base point.
        y: Base point on the stable or unstable leaf of x.
        direction (str): 'stable' or 'unstable'.
        radius (float): Largest admissible |y - x|.

    Returns:
        float: Delta^s(x, y) or Delta^u(x, y).

    Raises:
        OffLeaf: y - x is not along the requested leaf.
    """
    x_exact = to_exact(x)
    displacement = wrap(to_float(to_exact(y)) - to_float(x_exact))
    if np.linalg.norm(displacement) > radius:
        raise ValueError(f"|y - x| = {np.linalg.norm(displacement):.3g} exceeds chart radius {radius}")
    coords = leaf_coordinates(flow, displacement, direction)
    series = stable_adjustment(flow, x_exact, coords) if direction == 'stable' else unstable_adjustment(flow, x_exact, coords)
    logger.debug(f"{direction} adjustment {series.value:.6g} from {series.terms} terms, tail {series.tail_bound:.1e}")
    return series.value


def strong_manifold_point(flow: SuspensionFlow, p: FlowPoint, v, radius: float = CHART_RADIUS) -> FlowPoint:
    """
    The point of W^s(p) or W^u(p) lying over x + v.

    Args:
        flow (SuspensionFlow): The suspension flow.
        p (FlowPoint): Point on the flow.
        v: Base displacement in E^s or E^u.
        radius (float): Chart radius bounding |v|.

    Returns:
        FlowPoint: (x + v, s + Delta) reduced into the fundamental domain. The base point is
        placed on the leaf with precise_leaves, so it stays asymptotic to p under evolve.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return p
    if np.linalg.norm(v) > radius:
        raise ValueError(f"|v| = {np.linalg.norm(v):.3g} exceeds chart radius {radius}")
    spectral = flow.spectral
    cs, cu = spectral.split(v)
    if np.linalg.norm(spectral.unstable_basis @ cu) < LEAF_TOL:
        direction, delta = 'stable', stable_adjustment(flow, p.x, cs).value
    elif np.linalg.norm(spectral.stable_basis @ cs) < LEAF_TOL:
        direction, delta = 'unstable', unstable_adjustment(flow, p.x, cu).value
    else:
        raise OffLeaf("Displacement is neither stable nor unstable")
    moved = precise_leaves(flow.base).leaf_point(p.x, v, direction)
    return evolve(flow, FlowPoint(moved, 0.0), p.s + delta)


def bunching_rate(flow: SuspensionFlow) -> float:
    spectral = flow.spectral
    return spectral.stable_modulus * spectral.max_unstable_modulus


def unstable_adjustment_gradient(flow: SuspensionFlow, y: ExactPoint, tol: float = SERIES_TOL) -> np.ndarray:
    """
    Derivative of w -> Delta^u(x, y + B_u w) at w = 0, in unstable coordinates.

    Equals -sum_{n>=1} grad r(L^{-n} y) B_u U^{-n}; independent of the anchor x.
    """
    spectral = flow.spectral
    inverse = np.linalg.inv(spectral.unstable_matrix)
    lipschitz = flow.roof.poly.lipschitz_bound
    factor = 1.0 + _tail_factor(inverse)
    maps, power = [], inverse.copy()
    for _ in range(_MAX_TERMS):
        if lipschitz * float(np.linalg.norm(power, 2)) * factor < tol:
            break
        maps.append(spectral.unstable_basis @ power)
        power = inverse @ power
    if not maps:
        return np.zeros(spectral.unstable_dim)
    points = np.array([to_float(p) for p in flow.orbit(y, -len(maps))])
    grads = flow.roof.gradient(points)
    return -np.einsum('nd,ndk->k', grads, np.array(maps))


def stable_adjustment_gradient(flow: SuspensionFlow, x: ExactPoint, cs: np.ndarray, tol: float = SERIES_TOL) -> np.ndarray:
    """
    Derivative of w -> Delta^s(x + B_u w, x + B_u w + B_s cs) at w = 0.

    The n-th term is bounded by H ||S^n cs|| ||U^n||, so the series needs
    stable modulus * largest unstable modulus < 1.

    Raises:
        NotBunched: The bunching rate is at least 1.
    """
    rate = bunching_rate(flow)
    if rate >= 1.0 - 1e-12:
        raise NotBunched(f"Stable x unstable modulus {rate:.6g} >= 1; adjustment gradient diverges")
    spectral = flow.spectral
    hessian = flow.roof.poly.hessian_bound
    stable, unstable = spectral.stable_matrix, spectral.unstable_matrix
    current = np.asarray(cs, dtype=float)
    power = np.eye(spectral.unstable_dim)
    offsets, maps = [], []
    for _ in range(_MAX_TERMS):
        bound = hessian * float(np.linalg.norm(current)) * float(np.linalg.norm(power, 2)) / (1.0 - rate)
        if bound < tol:
            break
        offsets.append(spectral.stable_basis @ current)
        maps.append(spectral.unstable_basis @ power)
        current = stable @ current
        power = unstable @ power
    else:
        raise RuntimeError("Stable adjustment gradient did not converge")
    if not maps:
        return np.zeros(spectral.unstable_dim)
    base = np.array([to_float(p) for p in flow.orbit(x, len(maps))])
    diff = flow.roof.gradient(base + np.array(offsets)) - flow.roof.gradient(base)
    return np.einsum('nd,ndk->k', diff, np.array(maps))
