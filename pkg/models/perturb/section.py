import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from models.flow.suspension import SuspensionFlow
from models.roof.livshits import PeriodicOrbitRecord, periodic_points
from scripts.logging_config import logger
from utils.errors import NotCodimensionOne, OffLeaf
from utils.torus import to_exact, to_float, torus_distance, wrap

SECTION_RADIUS = 0.25
HETEROCLINIC_Y_RANGE = (0.1, 0.25)
ENLARGEMENT = 1.25
WEAK_LEAF_TOL = 1e-8
_PROFILE_GRADIENT_MAX = 1.91


@dataclass(frozen=True, eq=False)
class SectionChart:
    """
    Chart (x, t, y) around the fixed point p = 0 of a codimension-one linear suspension.

    A base point z near p has unstable coordinate x and stable coordinate y with
    z = B_u x + B_s y. The time coordinate is measured from the transversal through
    W^s_loc(p) and W^u_loc(p), so the return map is f(x, y) = (U x, lam y).
    """
    flow: SuspensionFlow
    radius: float = SECTION_RADIUS

    def __post_init__(self):
        if any(self.flow.translation):
            raise ValueError("Section chart needs a linear base map fixing the origin")
        if self.flow.spectral.stable_dim != 1:
            raise NotCodimensionOne(f"Stable dimension is {self.flow.spectral.stable_dim}, expected 1")

    @property
    def stable_basis(self) -> np.ndarray:
        return self.flow.spectral.stable_basis

    @property
    def unstable_basis(self) -> np.ndarray:
        return self.flow.spectral.unstable_basis

    @property
    def unstable_dim(self) -> int:
        return self.flow.spectral.unstable_dim

    @property
    def lam(self) -> float:
        """Signed stable eigenvalue."""
        return float(self.flow.spectral.stable_matrix[0, 0])

    @property
    def unstable_matrix(self) -> np.ndarray:
        return self.flow.spectral.unstable_matrix

    def to_chart(self, displacement) -> Tuple[np.ndarray, float]:
        """(x, y) of a displacement, which is wrapped onto the torus first."""
        frame = np.hstack([self.unstable_basis, self.stable_basis])
        coords = np.linalg.solve(frame, wrap(displacement))
        return coords[:-1], float(coords[-1])

    def to_torus(self, x, y: float) -> np.ndarray:
        return self.unstable_basis @ np.asarray(x, dtype=float) + self.stable_basis[:, 0] * y

    def return_map(self, x, y: float) -> Tuple[np.ndarray, float]:
        return self.unstable_matrix @ np.asarray(x, dtype=float), self.lam * y


@dataclass(frozen=True, eq=False)
class HeteroclinicDatum:
    """
    Heteroclinic point r = (0, y_r) on W^s_loc(p) that also lies on W^{0u}(q).

    Attributes:
        q (PeriodicOrbitRecord): Periodic orbit other than p.
        r (np.ndarray): Base point of r.
        y_r (float): Stable coordinate of r.
        leaf_offset (np.ndarray): Unstable coordinates c with r = q + B_u c (mod 1).
        transverse_defect (float): Distance of r from the unstable leaf of q.
        approach_gaps (Tuple[float, ...]): Distances between L^{-n} r and L^{-n} q.
    """
    q: PeriodicOrbitRecord
    r: np.ndarray
    y_r: float
    leaf_offset: np.ndarray
    transverse_defect: float
    approach_gaps: Tuple[float, ...]

    @classmethod
    def find(cls, chart: SectionChart, max_period: int = 12, box: int = 3,
             y_range: Tuple[float, float] = HETEROCLINIC_Y_RANGE) -> "HeteroclinicDatum":
        """
        Locates a heteroclinic point by solving B_s y - B_u c = q + m over integer shifts m.

        The first periodic orbit other than p is used; among admissible shifts the one with
        the largest |y| is kept, ties going to the smallest |c|.

        Raises:
            OffLeaf: No admissible shift was found.
        """
        flow = chart.flow
        q = _first_nontrivial_orbit(flow, max_period)
        q_point = to_float(q.base_points[0])
        frame = np.hstack([chart.stable_basis, -chart.unstable_basis])
        lo, hi = y_range
        best = None
        for m in itertools.product(range(-box, box + 1), repeat=flow.dim):
            solution = np.linalg.solve(frame, q_point + np.array(m, dtype=float))
            y, c = float(solution[0]), solution[1:]
            if not lo <= abs(y) <= hi:
                continue
            key = (-round(abs(y), 12), float(np.linalg.norm(c)))
            if best is None or key < best[0]:
                best = (key, y, c)
        if best is None:
            raise OffLeaf(f"No heteroclinic point with |y_r| in {y_range} for shifts up to {box}")
        _, y_r, c = best
        datum = cls.from_solution(chart, q, y_r, c)
        logger.info(f"Heteroclinic point y_r={y_r:.6g} on the unstable leaf of a period-{q.period_n} orbit, "
                    f"transverse defect {datum.transverse_defect:.2e}")
        return datum

    @classmethod
    def from_solution(cls, chart: SectionChart, q: PeriodicOrbitRecord, y_r: float, c: np.ndarray,
                      horizon: Optional[int] = None) -> "HeteroclinicDatum":
        flow = chart.flow
        r = chart.to_torus(np.zeros(chart.unstable_dim), y_r)
        inverse = np.linalg.inv(chart.unstable_matrix)
        if horizon is None:
            # backward iterates until the linear prediction is well inside the injectivity radius
            horizon, offset = 0, np.asarray(c, dtype=float)
            while np.linalg.norm(chart.unstable_basis @ offset) > 0.05 and horizon < 400:
                offset = inverse @ offset
                horizon += 1
        r_orbit = flow.orbit(to_exact(r), -horizon)
        q_orbit = flow.orbit(q.base_points[0], -horizon)
        gaps = tuple(torus_distance(to_float(a), to_float(b)) for a, b in zip(r_orbit, q_orbit))
        predicted = float(np.linalg.norm(chart.unstable_basis @ np.linalg.matrix_power(inverse, horizon) @ c))
        defect = abs(gaps[-1] - predicted) if gaps else float(
            torus_distance(r, to_float(q.base_points[0]) + chart.unstable_basis @ c))
        datum = cls(q=q, r=r, y_r=float(y_r), leaf_offset=np.asarray(c, dtype=float),
                    transverse_defect=float(defect), approach_gaps=gaps)
        datum.check(chart)
        return datum

    def check(self, chart: SectionChart) -> None:
        """
        Raises:
            OffLeaf: r is off the stable line of p or off the weak-unstable leaf of q.
        """
        x, y = chart.to_chart(self.r)
        if np.linalg.norm(x) > 1e-10 or abs(y - self.y_r) > 1e-10:
            raise OffLeaf("Heteroclinic point is not on the stable line of p")
        if self.transverse_defect > WEAK_LEAF_TOL:
            raise OffLeaf(f"Heteroclinic point is {self.transverse_defect:.2e} off the weak-unstable leaf of q")


def _first_nontrivial_orbit(flow: SuspensionFlow, max_period: int) -> PeriodicOrbitRecord:
    for n in range(1, max_period + 1):
        for record in periodic_points(flow.base, n):
            if any(any(c != 0 for c in point) for point in record.base_points):
                return record
    raise OffLeaf(f"No periodic orbit other than the origin up to period {max_period}")


@dataclass(frozen=True, eq=False)
class Bump:
    """
    Roof perturbation rho(x, y) = A (g.x) (1 - |(x, y) - c|^2 / R^2)^4_+ in chart coordinates.

    The factor g.x makes rho vanish on W^s_loc(p) = {x = 0}; at a centre with x = 0 the
    x-gradient of rho is A g.
    """
    chart: SectionChart
    center_x: np.ndarray
    center_y: float
    radius: float
    amplitude: float
    direction: np.ndarray

    @classmethod
    def standard(cls, chart: SectionChart, datum: HeteroclinicDatum, direction: Optional[Sequence[float]] = None,
                 amplitude: float = 0.05, radius: Optional[float] = None,
                 center: Optional[Tuple[Sequence[float], float]] = None) -> "Bump":
        """
        Bump centred at f(r) unless `center` is given.

        The default radius 1/2 |lam| (1 - |lam|) |y_r| keeps the enlarged ball clear of r
        and f^2(r).
        """
        lam = chart.lam
        k = chart.unstable_dim
        g = np.zeros(k) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            g[0] = 1.0
        norm = np.linalg.norm(g)
        if norm == 0:
            raise ValueError("Bump direction must be nonzero")
        if radius is None:
            radius = 0.5 * abs(lam) * (1.0 - abs(lam)) * abs(datum.y_r)
        cx, cy = (np.zeros(k), lam * datum.y_r) if center is None else (np.asarray(center[0], dtype=float), float(center[1]))
        bump = cls(chart=chart, center_x=cx, center_y=cy, radius=float(radius), amplitude=float(amplitude),
                   direction=g / norm)
        bump.validate(datum)
        return bump

    @property
    def center_point(self) -> np.ndarray:
        return self.chart.to_torus(self.center_x, self.center_y)

    @property
    def enlarged_radius(self) -> float:
        return ENLARGEMENT * self.radius

    @property
    def c1_bound(self) -> float:
        """Bound on |grad rho| in chart coordinates."""
        reach = float(np.linalg.norm(self.center_x)) + self.radius
        return abs(self.amplitude) * (1.0 + reach * _PROFILE_GRADIENT_MAX / self.radius)

    @property
    def sup_bound(self) -> float:
        return abs(self.amplitude) * (float(np.linalg.norm(self.center_x)) + self.radius)

    def validate(self, datum: HeteroclinicDatum) -> None:
        """
        Raises:
            ValueError: The support meets r or f^2(r), or the perturbed roof may vanish.
        """
        lam = self.chart.lam
        for label, y in (('r', datum.y_r), ('f^2(r)', lam * lam * datum.y_r)):
            gap = float(np.hypot(np.linalg.norm(self.center_x), y - self.center_y))
            if gap <= self.enlarged_radius:
                raise ValueError(f"Bump support reaches {label}")
        if self.sup_bound >= self.chart.flow.roof.positivity_margin:
            raise ValueError(f"Bump size {self.sup_bound:.3g} would make the roof nonpositive")

    def offsets(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Chart offsets (dx, dy) of torus points from the centre, shape (N, k) and (N,)."""
        frame = np.hstack([self.chart.unstable_basis, self.chart.stable_basis])
        rel = wrap(np.atleast_2d(points) - self.center_point)
        coords = np.linalg.solve(frame, rel.T).T
        return coords[:, :-1], coords[:, -1]

    def in_enlarged_ball(self, points: np.ndarray) -> np.ndarray:
        dx, dy = self.offsets(points)
        return np.sqrt(np.sum(dx ** 2, axis=1) + dy ** 2) <= self.enlarged_radius

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """rho at torus points of shape (N, d)."""
        if self.amplitude == 0:
            return np.zeros(np.atleast_2d(points).shape[0])
        dx, dy = self.offsets(points)
        q = (np.sum(dx ** 2, axis=1) + dy ** 2) / self.radius ** 2
        profile = np.clip(1.0 - q, 0.0, None) ** 4
        x = dx + self.center_x
        return self.amplitude * (x @ self.direction) * profile

    def gradient_x(self, point: np.ndarray) -> np.ndarray:
        """Closed-form x-gradient of rho at a torus point, as an unstable covector."""
        dx, dy = self.offsets(point)
        dx, dy = dx[0], float(dy[0])
        q = (float(dx @ dx) + dy ** 2) / self.radius ** 2
        if q >= 1.0:
            return np.zeros(self.chart.unstable_dim)
        profile = (1.0 - q) ** 4
        d_profile = -8.0 * (1.0 - q) ** 3 * dx / self.radius ** 2
        x = dx + self.center_x
        return self.amplitude * (self.direction * profile + float(x @ self.direction) * d_profile)
