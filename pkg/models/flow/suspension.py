from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.roof.trig_polynomial import RoofFunction
from models.spectral.automorphism import IntegerMatrix
from models.spectral.spectrum import SpectralData, spectral_data
from scripts.logging_config import logger
from utils.torus import ExactPoint, affine_step, exact_scalar, to_exact, to_float, torus_distance

MAX_EVOLVE_TIME = 1e6


@dataclass(frozen=True, eq=False)
class FlowPoint:
    """
    Point (x, s) of the mapping torus in its fundamental domain 0 <= s < r(x).

    The base point is kept as exact rationals so that the base map can be inverted
    without loss; `coords` gives the double-precision view.
    """
    x: ExactPoint
    s: float

    @classmethod
    def make(cls, x, s: float = 0.0) -> "FlowPoint":
        return cls(to_exact(x), float(s))

    @property
    def coords(self) -> np.ndarray:
        return to_float(self.x)

    def __repr__(self) -> str:
        return f"FlowPoint(x={np.array2string(self.coords, precision=6)}, s={self.s:.6g})"


@dataclass(frozen=True, eq=False)
class SuspensionFlow:
    """
    Suspension of the affine toral map x -> Mx + v under a positive roof.

    Attributes:
        base (IntegerMatrix): Linear part M of the base map.
        spectral (SpectralData): Certified spectral data of M.
        roof (RoofFunction): Certified positive roof.
        translation (ExactPoint): Rational translation part v (zero by default).
    """
    base: IntegerMatrix
    spectral: SpectralData
    roof: RoofFunction
    translation: ExactPoint = field(default=())

    def __post_init__(self):
        if self.spectral.matrix.entries != self.base.entries:
            raise ValueError("Spectral data does not belong to the base matrix")
        if self.roof.dim != self.base.dim:
            raise ValueError(f"Roof dimension {self.roof.dim} does not match base dimension {self.base.dim}")
        if self.roof.positivity_margin <= 0:
            raise ValueError("Roof positivity margin must be positive")
        translation = self.translation or (0,) * self.base.dim
        if len(translation) != self.base.dim:
            raise ValueError("Translation length does not match base dimension")
        object.__setattr__(self, 'translation', tuple(exact_scalar(c) % 1 for c in translation))

    @classmethod
    def build(cls, base: IntegerMatrix, roof: RoofFunction, translation: Optional[Sequence] = None,
              tol: float = 1e-9) -> "SuspensionFlow":
        return cls(base=base, spectral=spectral_data(base, tol), roof=roof, translation=tuple(translation or ()))

    @property
    def dim(self) -> int:
        return self.base.dim

    @cached_property
    def _inverse_rows(self) -> Tuple[Tuple[int, ...], ...]:
        return self.base.inverse.entries

    @cached_property
    def inverse_translation(self) -> ExactPoint:
        # x = M^{-1}(y - v) = M^{-1} y - M^{-1} v
        zero = (Fraction(0),) * self.dim
        image = affine_step(self._inverse_rows, zero, self.translation)
        return tuple((-c) % 1 for c in image)

    def step(self, x: ExactPoint) -> ExactPoint:
        return affine_step(self.base.entries, self.translation, x)

    def step_back(self, x: ExactPoint) -> ExactPoint:
        return affine_step(self._inverse_rows, self.inverse_translation, x)

    def orbit(self, x: ExactPoint, n: int) -> list:
        """Exact points L^k x for k = 0..n-1 (n > 0) or L^{-k} x for k = 1..|n| (n < 0)."""
        points = []
        current = x
        if n >= 0:
            for _ in range(n):
                points.append(current)
                current = self.step(current)
        else:
            for _ in range(-n):
                current = self.step_back(current)
                points.append(current)
        return points

    def roof_at(self, x: ExactPoint) -> float:
        return float(self.roof.evaluate(to_float(x)))

    def point(self, x, s: float = 0.0) -> FlowPoint:
        """FlowPoint for (x, s) reduced into the fundamental domain."""
        return evolve(self, FlowPoint.make(x, 0.0), s) if s else FlowPoint.make(x, 0.0)


def evolve_with_crossings(flow: SuspensionFlow, p: FlowPoint, t: float) -> Tuple[FlowPoint, int]:
    """Like evolve, also returning the signed number of roof crossings."""
    x, s = p.x, p.s + t
    crossings = 0
    r = flow.roof_at(x)
    while s >= r:
        s -= r
        x = flow.step(x)
        r = flow.roof_at(x)
        crossings += 1
    while s < 0:
        x = flow.step_back(x)
        s += flow.roof_at(x)
        crossings -= 1
    return FlowPoint(x, s), crossings


def evolve(flow: SuspensionFlow, p: FlowPoint, t: float) -> FlowPoint:
    """
    Flows the point p for time t, crossing the roof as often as needed.

    Args:
        flow (SuspensionFlow): The suspension flow.
        p (FlowPoint): Starting point.
        t (float): Flow time, |t| <= 1e6.

    Returns:
        FlowPoint: The image point in the fundamental domain.
    """
    if abs(t) > MAX_EVOLVE_TIME:
        raise ValueError(f"|t| must be at most {MAX_EVOLVE_TIME:g}, got {t}")
    if t == 0:
        return p
    return evolve_with_crossings(flow, p, t)[0]


def hitting_time(flow: SuspensionFlow, p: FlowPoint, n: int) -> float:
    """
    Time until the n-th crossing of the section s = 0.

    For n > 0 the crossings are counted forward, so the result is positive. For n < 0 the
    time is negative and n = -1 is the time back to (x, 0) itself.
    """
    if n == 0:
        raise ValueError("n must be nonzero")
    if n > 0:
        values = flow.roof.evaluate(np.array([to_float(x) for x in flow.orbit(p.x, n)]))
        return float(np.sum(values)) - p.s
    if n == -1:
        return -p.s
    values = flow.roof.evaluate(np.array([to_float(x) for x in flow.orbit(p.x, n + 1)]))
    return -p.s - float(np.sum(values))


def flow_distance(flow: SuspensionFlow, p: FlowPoint, q: FlowPoint) -> float:
    """
    Fundamental-domain distance max(|x - y|_torus, |s - s'|), minimized over the
    representatives of q that differ by one application of the identification.
    """
    candidates = [(q.coords, q.s)]
    prev = flow.step_back(q.x)
    candidates.append((to_float(prev), q.s + flow.roof_at(prev)))
    candidates.append((to_float(flow.step(q.x)), q.s - flow.roof_at(q.x)))
    px = p.coords
    return min(max(torus_distance(px, x), abs(p.s - s)) for x, s in candidates)


def trajectory_frame(flow: SuspensionFlow, p: FlowPoint, times: Sequence[float]) -> pd.DataFrame:
    """Samples evolve(p, t) for each t; columns t, x1..xd, s."""
    rows = []
    for t in times:
        q = evolve(flow, p, float(t))
        row = {'t': float(t)}
        row.update({f"x{i + 1}": c for i, c in enumerate(q.coords)})
        row['s'] = q.s
        rows.append(row)
    columns = ['t'] + [f"x{i + 1}" for i in range(flow.dim)] + ['s']
    logger.debug(f"Sampled trajectory at {len(rows)} times")
    return pd.DataFrame(rows, columns=columns)
