from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from models.flow.leaves import CHART_RADIUS
from models.flow.suspension import FlowPoint, SuspensionFlow, evolve_with_crossings
from models.pcf.temporal_distance import Quadrilateral, pcf_gradient, temporal_distance_series
from models.roof.trig_polynomial import RoofFunction
from scripts.logging_config import logger
from utils.errors import DegenerateGradients
from utils.linalg import numerical_rank
from utils.torus import ExactPoint, exact_scalar, shift, wrap

KERNEL_CUTOFF = 1e-9
INDEPENDENCE_RATIO = 1e-3
SEARCH_BUDGET = 200


@dataclass(frozen=True, eq=False)
class MatchingPair:
    """Corner a and stable displacement of a simple PCF, rho_{a,b} with b over a + s_disp."""
    a: FlowPoint
    s_disp: np.ndarray


@dataclass(frozen=True, eq=False)
class PlantedConjugacy:
    """
    Known conjugacy h(x, s) = phi^tau(x + v, s) between a flow and its pushforward.

    The pushforward has base map x -> Mx + t + (I - M)v and roof r(x - v).
    """
    translation: ExactPoint
    time_shift: float = 0.0

    @classmethod
    def make(cls, translation: Sequence, time_shift: float = 0.0) -> "PlantedConjugacy":
        return cls(tuple(exact_scalar(c) for c in translation), float(time_shift))

    @classmethod
    def identity(cls, dim: int) -> "PlantedConjugacy":
        return cls((Fraction(0),) * dim, 0.0)

    def pushforward(self, flow: SuspensionFlow) -> SuspensionFlow:
        v = self.translation
        image = [sum(m * c for m, c in zip(row, v)) for row in flow.base.entries]
        translation = tuple((t + c - mv) % 1 for t, c, mv in zip(flow.translation, v, image))
        shifted = flow.roof.poly.shifted([float(c) for c in v])
        roof = RoofFunction(shifted, flow.roof.positivity_margin)
        return SuspensionFlow(base=flow.base, spectral=flow.spectral, roof=roof, translation=translation)

    def translate(self, p: FlowPoint) -> FlowPoint:
        return FlowPoint(shift(p.x, self.translation), p.s)

    def transport(self, target: SuspensionFlow, p: FlowPoint) -> Tuple[FlowPoint, int]:
        """Image h(p) in the target flow and the number of roof crossings made by the time shift."""
        return evolve_with_crossings(target, self.translate(p), self.time_shift)

    def transport_quadrilateral(self, target: SuspensionFlow, quad: Quadrilateral) -> Quadrilateral:
        image, crossings = self.transport(target, quad.a)
        linear = np.linalg.matrix_power(target.base.array if crossings >= 0 else target.base.inverse.array, abs(crossings))
        return Quadrilateral(image, linear @ quad.s_disp, linear @ quad.u_disp)


@dataclass(frozen=True, eq=False)
class MatchingKernelReport:
    base_point: FlowPoint
    gradients: Tuple[np.ndarray, ...]
    kernel_dim: int
    kernel_basis: np.ndarray

    @property
    def rank(self) -> int:
        return self.kernel_basis.shape[0] - self.kernel_dim


@dataclass(frozen=True, eq=False)
class PatchReconstruction:
    grid: np.ndarray
    recovered: np.ndarray
    expected: np.ndarray
    sup_error: float
    iterations: np.ndarray


def _unstable_offset(base_point: FlowPoint, a: FlowPoint) -> np.ndarray:
    return wrap(base_point.coords - a.coords)


def pair_gradients(flow: SuspensionFlow, base_point: FlowPoint, pairs: Sequence[MatchingPair]) -> np.ndarray:
    """Stacked gradients of the PCFs of `pairs` at base_point, one row per pair."""
    rows = [pcf_gradient(flow, p.a, p.s_disp, _unstable_offset(base_point, p.a)) for p in pairs]
    return np.array(rows).reshape(len(rows), flow.spectral.unstable_dim)


def matching_kernel_dimension(flow: SuspensionFlow, base_point: FlowPoint,
                              pairs: Sequence[MatchingPair]) -> MatchingKernelReport:
    """
    Common kernel of the PCF differentials at base_point.

    Args:
        flow (SuspensionFlow): The suspension flow.
        base_point (FlowPoint): Point x on the local unstable leaf of every corner.
        pairs (Sequence[MatchingPair]): At least one PCF.

    Returns:
        MatchingKernelReport: Gradients, kernel dimension and a kernel basis (columns, in
        unstable coordinates).
    """
    if not pairs:
        raise ValueError("At least one pair is required")
    matrix = pair_gradients(flow, base_point, pairs)
    k = flow.spectral.unstable_dim
    _, sing, vh = scipy.linalg.svd(matrix)
    top = float(sing[0]) if sing.size else 0.0
    rank = int(np.sum(sing > max(KERNEL_CUTOFF * top, 1e-12)))
    basis = vh[rank:].T if rank < k else np.zeros((k, 0))
    logger.info(f"Matching kernel from {len(pairs)} PCFs: rank {rank}, kernel dimension {k - rank}")
    return MatchingKernelReport(base_point=base_point, gradients=tuple(matrix), kernel_dim=k - rank, kernel_basis=basis)


def _independent(rows: List[np.ndarray]) -> bool:
    sing = scipy.linalg.svd(np.array(rows), compute_uv=False)
    return sing[0] > 1e-12 and sing[-1] >= INDEPENDENCE_RATIO * sing[0] and len(sing) == len(rows)


def _draw_pair(rng: np.random.Generator, flow: SuspensionFlow, base_point: FlowPoint,
               radius: float) -> Tuple[MatchingPair, np.ndarray]:
    spectral = flow.spectral
    w = rng.standard_normal(spectral.unstable_dim)
    w *= radius * rng.uniform(0.2, 1.0) / np.linalg.norm(w)
    c = rng.standard_normal(spectral.stable_dim)
    c *= radius * rng.uniform(0.2, 1.0) / np.linalg.norm(c)
    u_disp = spectral.unstable_basis @ w
    return MatchingPair(FlowPoint(shift(base_point.x, -u_disp), 0.0), spectral.stable_basis @ c), u_disp


def random_pairs(flow: SuspensionFlow, base_point: FlowPoint, count: int, seed: int,
                 radius: float = CHART_RADIUS) -> List[MatchingPair]:
    """Seeded pairs with corners on the local unstable leaf of base_point, no independence test."""
    rng = np.random.default_rng(seed)
    return [_draw_pair(rng, flow, base_point, radius)[0] for _ in range(count)]


def find_independent_pairs(flow: SuspensionFlow, base_point: FlowPoint, seed: int,
                           budget: int = SEARCH_BUDGET, radius: float = CHART_RADIUS) -> List[MatchingPair]:
    """
    Seeded random search for dim E^u simple PCFs with independent gradients at base_point.

    Each draw places a corner a on the local unstable leaf of base_point and picks a random
    stable displacement; a draw is kept when it raises the rank of the gradients collected
    so far with singular-value ratio at least 1e-3.

    Raises:
        DegenerateGradients: The budget ran out first.
    """
    rng = np.random.default_rng(seed)
    k = flow.spectral.unstable_dim
    chosen, rows = [], []
    for draw in range(budget):
        pair, u_disp = _draw_pair(rng, flow, base_point, radius)
        gradient = pcf_gradient(flow, pair.a, pair.s_disp, u_disp)
        if _independent(rows + [gradient]):
            chosen.append(pair)
            rows.append(gradient)
            if len(chosen) == k:
                logger.info(f"Found {k} independent PCF gradients after {draw + 1} draws")
                return chosen
    raise DegenerateGradients(f"Only {len(chosen)} of {k} independent gradients within {budget} draws")


def _pcf_vector(flow: SuspensionFlow, base_point: FlowPoint, pairs: Sequence[MatchingPair], w: np.ndarray) -> np.ndarray:
    step = flow.spectral.unstable_basis @ w
    return np.array([temporal_distance_series(flow, Quadrilateral(p.a, p.s_disp, _unstable_offset(base_point, p.a) + step))
                     for p in pairs])


def _pcf_jacobian(flow: SuspensionFlow, base_point: FlowPoint, pairs: Sequence[MatchingPair], w: np.ndarray) -> np.ndarray:
    step = flow.spectral.unstable_basis @ w
    return np.array([pcf_gradient(flow, p.a, p.s_disp, _unstable_offset(base_point, p.a) + step) for p in pairs])


def reconstruct_conjugacy_patch(flow1: SuspensionFlow, flow2: SuspensionFlow, conjugacy: PlantedConjugacy,
                                base_point: FlowPoint, pairs: Sequence[MatchingPair], grid_size: int = 3,
                                patch_radius: float = 1e-3, newton_steps: int = 20,
                                start: Optional[np.ndarray] = None) -> PatchReconstruction:
    """
    Recovers h^{-1} = (P^1)^{-1} o P^2 on an unstable patch from matching PCFs.

    P^i collects the PCFs of the matched pairs on the unstable patch of the base point in
    flow i. Each grid point of the flow2 patch is pulled back by Newton iteration on
    P^1(w) = P^2(w'), started from `start` (the patch centre by default). The planted
    conjugacy is used only to match the pairs and to score the recovered map;
    h^{-1} moves base points by -v, so it fixes patch coordinates.

    Args:
        flow1 (SuspensionFlow): Source flow.
        flow2 (SuspensionFlow): Conjugate flow.
        conjugacy (PlantedConjugacy): Ground truth, for matching and scoring only.
        base_point (FlowPoint): Centre of the patch in flow1.
        pairs (Sequence[MatchingPair]): PCFs with independent gradients at base_point.
        grid_size (int): Grid points per unstable axis.
        patch_radius (float): Half-width of the patch in unstable coordinates.
        newton_steps (int): Newton iteration cap per grid point.
        start (Optional[np.ndarray]): Newton starting point in unstable coordinates.

    Returns:
        PatchReconstruction: Grid, recovered coordinates and sup-norm error.

    Raises:
        DegenerateGradients: Gradients at base_point have rank below dim E^u.
    """
    k = flow1.spectral.unstable_dim
    jac0 = pair_gradients(flow1, base_point, pairs)
    if numerical_rank(jac0, rel_cutoff=KERNEL_CUTOFF) < k:
        raise DegenerateGradients(f"PCF gradients at the base point have rank below {k}")

    # PCFs do not see the flow-time shift, so the pairs are matched by the translation alone.
    base2 = conjugacy.translate(base_point)
    pairs2 = [MatchingPair(conjugacy.translate(p.a), p.s_disp) for p in pairs]

    axis = np.linspace(-patch_radius, patch_radius, grid_size)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([axis] * k), indexing='ij')], axis=1)
    recovered = np.empty_like(grid)
    iterations = np.zeros(len(grid), dtype=int)
    initial = np.zeros(k) if start is None else np.asarray(start, dtype=float)
    for idx, w2 in enumerate(grid):
        target = _pcf_vector(flow2, base2, pairs2, w2)
        w = initial.copy()
        for step_count in range(1, newton_steps + 1):
            residual = _pcf_vector(flow1, base_point, pairs, w) - target
            step, *_ = np.linalg.lstsq(_pcf_jacobian(flow1, base_point, pairs, w), residual, rcond=None)
            w = w - step
            if np.linalg.norm(step) < 1e-12:
                break
        else:
            logger.warning(f"Newton did not settle at patch point {idx} within {newton_steps} steps")
        recovered[idx] = w
        iterations[idx] = step_count

    expected = grid.copy()
    sup_error = float(np.max(np.abs(recovered - expected)))
    logger.info(f"Reconstructed conjugacy on {len(grid)} patch points, sup error {sup_error:.3e}")
    return PatchReconstruction(grid=grid, recovered=recovered, expected=expected, sup_error=sup_error,
                               iterations=iterations)


def conjugacy_invariance_check(flow1: SuspensionFlow, flow2: SuspensionFlow, conjugacy: PlantedConjugacy,
                               quads: Sequence[Quadrilateral]) -> float:
    """Largest |rho^1(q) - rho^2(h q)| over the quadrilaterals."""
    worst = 0.0
    for q in quads:
        value1 = temporal_distance_series(flow1, q)
        value2 = temporal_distance_series(flow2, conjugacy.transport_quadrilateral(flow2, q))
        worst = max(worst, abs(value1 - value2))
    logger.info(f"Conjugacy invariance over {len(quads)} quadrilaterals: max discrepancy {worst:.3e}")
    return worst
