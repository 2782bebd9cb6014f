import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from models.flow.leaves import stable_adjustment, stable_adjustment_gradient, unstable_adjustment_gradient
from models.perturb.section import Bump, HeteroclinicDatum, SectionChart
from models.spectral.conditions import InvariantSubspaceCatalog
from scripts.logging_config import logger
from utils.errors import ChartExit, OffLeaf, ResidualBelowNoise
from utils.linalg import distance_to_subspace, loglog_slope, orthonormal_columns, principal_angle_distance
from utils.torus import to_exact, to_float

RETURN_TOL = 1e-13
MAX_RETURNS = 1000
NOISE_FLOOR = 1e-12
CONTAINMENT_TOL = 1e-8
DEFAULT_STEPS = (1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4)
CLAIM44_COLUMNS = ['step', 'lhs_fd', 'rhs', 'abs_err']
_FD_FLOOR = 1e-15
_MAX_TERMS = 50_000


@dataclass(frozen=True)
class GraphTime:
    """
    Stable-graph time split as T^rho = base + first_return + later.

    Attributes:
        base (float): T(x, y) of the unperturbed roof.
        first_return (float): rho(f(x, y)).
        later (float): Remaining return terms of the perturbation series.
        returns (int): Number of iterates meeting the enlarged ball.
        terms (int): Number of iterates summed.
    """
    base: float
    first_return: float
    later: float
    returns: int
    terms: int

    @property
    def value(self) -> float:
        return self.base + self.first_return + self.later


@dataclass(frozen=True, eq=False)
class Claim44Report:
    x_steps: np.ndarray
    lhs_fd: np.ndarray
    rhs: np.ndarray
    errors: np.ndarray
    fitted_order: float
    kappa: float

    def to_json_dict(self) -> dict:
        return {
            'x_steps': self.x_steps.tolist(),
            'lhs_fd': self.lhs_fd.tolist(),
            'rhs': self.rhs.tolist(),
            'errors': self.errors.tolist(),
            'fitted_order': None if math.isinf(self.fitted_order) else self.fitted_order,
            'kappa': self.kappa,
        }


@dataclass(frozen=True, eq=False)
class SweepReport:
    """
    Images of E^u(r) under the perturbed stable holonomy, one per bump gradient.

    Attributes:
        gradients (np.ndarray): Bump gradients A g, one row each.
        corners (np.ndarray): Corner rows D_xT^rho of the holonomy derivatives.
        contained (np.ndarray): contained[i, a] is True when F_a lies in the i-th image.
        avoiding (List[int]): Gradients whose image contains no F_a.
        diameter (float): Largest principal angle between two images.
        vacuous (bool): No invariant subspaces to avoid.
    """
    gradients: np.ndarray
    corners: np.ndarray
    contained: np.ndarray
    avoiding: List[int]
    diameter: float
    vacuous: bool

    def to_json_dict(self) -> dict:
        return {
            'gradients': self.gradients.tolist(),
            'corners': self.corners.tolist(),
            'contained': self.contained.tolist(),
            'avoiding': list(self.avoiding),
            'diameter': self.diameter,
            'vacuous': self.vacuous,
        }


def _check_chart(chart: SectionChart, x: np.ndarray, y: float) -> None:
    if np.linalg.norm(x) > chart.radius or abs(y) > chart.radius:
        raise ChartExit(f"(x, y) with |x|={np.linalg.norm(x):.3g}, |y|={abs(y):.3g} is outside the chart")


def graph_time_terms(chart: SectionChart, bump: Bump, x, y: float, tol: float = RETURN_TOL,
                     max_returns: int = MAX_RETURNS) -> GraphTime:
    """
    Stable-graph time T^rho(x, y) with its return-series breakdown.

    The orbits of (x, y) and (x, 0) share their unstable coordinate, so their n-th iterates
    differ by B_s lam^n y. Summation stops once |grad rho| |lam^n y| / (1 - |lam|) drops
    below `tol`.

    Raises:
        ChartExit: (x, y) is outside the chart or the orbits return to the enlarged ball
            more than `max_returns` times.
    """
    flow = chart.flow
    x = np.asarray(x, dtype=float)
    y = float(y)
    _check_chart(chart, x, y)

    zero = to_exact(np.zeros(flow.dim))
    anchor = to_exact(chart.unstable_basis @ x)
    base = stable_adjustment(flow, anchor, np.array([y])).value - stable_adjustment(flow, zero, np.array([y])).value

    lam = abs(chart.lam)
    first = float(bump.evaluate(chart.to_torus(*chart.return_map(x, y)))[0])
    if bump.amplitude == 0 or y == 0:
        return GraphTime(base=base, first_return=first, later=-first if bump.amplitude else 0.0, returns=0, terms=0)

    scale = bump.c1_bound * abs(y) / (1.0 - lam)
    count = 0
    while scale * lam ** count >= tol:
        count += 1
        if count > _MAX_TERMS:
            raise ChartExit("Return series did not reach its tolerance")
    count = max(count, 2)

    on_axis = np.array([to_float(z) for z in flow.orbit(anchor, count)])
    offsets = np.outer(chart.lam ** np.arange(count) * y, chart.stable_basis[:, 0])
    moved = on_axis + offsets
    returns = int(np.sum(bump.in_enlarged_ball(moved) | bump.in_enlarged_ball(on_axis)))
    if returns > max_returns:
        raise ChartExit(f"{returns} returns to the enlarged ball exceed the cap of {max_returns}")
    terms = bump.evaluate(moved) - bump.evaluate(on_axis)
    # the n = 1 term is rho(f(x, y)) - rho(f(x, 0))
    later = float(np.sum(terms[2:]) + terms[0] - bump.evaluate(on_axis[1])[0])
    return GraphTime(base=base, first_return=first, later=later, returns=returns, terms=count)


def stable_graph_time(chart: SectionChart, bump: Bump, x, y: float, tol: float = RETURN_TOL) -> float:
    """
    Time coordinate T^rho(x, y) of the perturbed local stable leaf of (x, 0, 0) over (x, y).

    Args:
        chart (SectionChart): Chart around p.
        bump (Bump): Roof perturbation.
        x: Unstable coordinate.
        y (float): Stable coordinate.
        tol (float): Bound on the neglected return terms.

    Returns:
        float: T^rho(x, y); zero on the stable line x = 0.
    """
    return graph_time_terms(chart, bump, x, y, tol).value


def _base_graph_derivative(chart: SectionChart, datum: HeteroclinicDatum) -> np.ndarray:
    flow = chart.flow
    if flow.roof.is_constant:
        return np.zeros(chart.unstable_dim)
    return stable_adjustment_gradient(flow, to_exact(np.zeros(flow.dim)), np.array([datum.y_r]))


def _corner(chart: SectionChart, datum: HeteroclinicDatum, bump: Bump) -> np.ndarray:
    image = chart.to_torus(*chart.return_map(np.zeros(chart.unstable_dim), datum.y_r))
    return _base_graph_derivative(chart, datum) + bump.gradient_x(image) @ chart.unstable_matrix


def holonomy_derivative(chart: SectionChart, datum: HeteroclinicDatum, bump: Bump) -> np.ndarray:
    """
    Derivative of the perturbed stable holonomy in (x, t) coordinates.

    Returns:
        np.ndarray: [[I, 0], [D_xT^rho, 1]] with D_xT^rho = D_xT + D_x rho(f(0, y_r)) U.
    """
    k = chart.unstable_dim
    matrix = np.eye(k + 1)
    matrix[k, :k] = _corner(chart, datum, bump)
    return matrix


def kappa(chart: SectionChart) -> float:
    """Exponent with lam mu^kappa = 1."""
    spectral = chart.flow.spectral
    return -math.log(spectral.stable_modulus) / math.log(spectral.max_unstable_modulus)


def claim44_check(chart: SectionChart, datum: HeteroclinicDatum, bump: Bump,
                  steps: Sequence[float] = DEFAULT_STEPS) -> Claim44Report:
    """
    Compares central differences of T^rho at (0, y_r) with D_xT + D_x rho(f(0, y_r)) D_xf.

    Args:
        chart (SectionChart): Chart around p.
        datum (HeteroclinicDatum): Heteroclinic point r = (0, y_r).
        bump (Bump): Roof perturbation.
        steps (Sequence[float]): Decreasing finite-difference steps.

    Returns:
        Claim44Report: Estimates, analytic corner, sup-norm errors and the fitted order of
        the error in the step (inf when every error is at rounding level).
    """
    steps = np.asarray(steps, dtype=float)
    if steps.size == 0 or np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
        raise ValueError("steps must be a positive decreasing sequence")
    k = chart.unstable_dim
    rhs = _corner(chart, datum, bump)
    lhs = np.empty((steps.size, k))
    for i, h in enumerate(steps):
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            forward = stable_graph_time(chart, bump, e, datum.y_r)
            backward = stable_graph_time(chart, bump, -e, datum.y_r)
            lhs[i, j] = (forward - backward) / (2.0 * h)
    errors = np.max(np.abs(lhs - rhs), axis=1)
    above = errors > _FD_FLOOR
    order = loglog_slope(steps[above], errors[above]) if np.count_nonzero(above) >= 2 else math.inf
    report = Claim44Report(x_steps=steps, lhs_fd=lhs, rhs=rhs, errors=errors, fitted_order=order, kappa=kappa(chart))
    logger.info(f"Derivative check over {steps.size} steps: smallest error {errors[-1]:.3e}, order {order:.3g}")
    return report


def claim44_frame(report: Claim44Report) -> pd.DataFrame:
    """Residual table with columns step, lhs_fd, rhs, abs_err; vectors are space-joined."""
    rhs = ' '.join(f"{v:.17g}" for v in report.rhs)
    rows = [{'step': float(h), 'lhs_fd': ' '.join(f"{v:.17g}" for v in lhs), 'rhs': rhs, 'abs_err': float(err)}
            for h, lhs, err in zip(report.x_steps, report.lhs_fd, report.errors)]
    return pd.DataFrame(rows, columns=CLAIM44_COLUMNS)


def returning_sequence(chart: SectionChart, datum: HeteroclinicDatum, bump: Bump,
                       norms: Optional[Sequence[float]] = None, max_box: int = 24, min_steps: int = 3) -> List[np.ndarray]:
    """
    Unstable coordinates x_j of size about `norms` whose orbit from (x_j, y_r) comes back to
    the bump after N_j steps.

    W^u(p) is made to cross the bump at offset (R/2 g, delta) with R/16 <= |delta| <= R/4,
    at unstable coordinate c; then x_j = U^{-N_j} c. There the y-derivative of the bump is
    nonzero, so the later return terms are of size |lam|^{N_j}.

    Raises:
        OffLeaf: No crossing of the required shape within the shift box.
    """
    norms = np.logspace(-1, -4, 13) if norms is None else np.asarray(norms, dtype=float)
    flow = chart.flow
    target = bump.center_point + chart.unstable_basis @ (0.5 * bump.radius * bump.direction)
    frame = np.hstack([chart.unstable_basis, -chart.stable_basis])
    inverse = np.linalg.inv(frame)
    lo, hi = bump.radius / 16.0, bump.radius / 4.0
    crossing = None
    for box in (4, 8, 16, max_box):
        shifts = np.array(list(itertools.product(range(-box, box + 1), repeat=flow.dim)), dtype=float)
        solutions = (inverse @ (target + shifts).T).T
        delta = np.abs(solutions[:, -1])
        admissible = np.flatnonzero((delta >= lo) & (delta <= hi))
        if admissible.size:
            sizes = np.linalg.norm(solutions[admissible, :-1], axis=1)
            crossing = solutions[admissible[np.argmin(sizes)], :-1]
            break
    if crossing is None:
        raise OffLeaf(f"W^u(p) does not cross the bump as required for shifts up to {max_box}")

    xi = chart.flow.spectral.max_unstable_modulus
    inv_u = np.linalg.inv(chart.unstable_matrix)
    sequence, seen = [], set()
    for eta in norms:
        steps = int(round(math.log(np.linalg.norm(crossing) / eta) / math.log(xi)))
        if steps < min_steps or steps in seen:
            continue
        seen.add(steps)
        sequence.append(np.linalg.matrix_power(inv_u, steps) @ crossing)
    logger.debug(f"Returning sequence of {len(sequence)} points from crossing |c|={np.linalg.norm(crossing):.3g}")
    return sequence


def remainder_exponent(chart: SectionChart, datum: HeteroclinicDatum, bump: Bump,
                       x_sequence: Sequence[np.ndarray]) -> float:
    """
    Fitted exponent of |T^rho(x, y_r) - T(x, y_r) - rho(f(x, y_r))| against |x|.

    Raises:
        ResidualBelowNoise: Fewer than two residuals reach 1e-12.
    """
    sizes, residuals = [], []
    for x in x_sequence:
        terms = graph_time_terms(chart, bump, x, datum.y_r)
        sizes.append(float(np.linalg.norm(x)))
        residuals.append(abs(terms.later))
    sizes, residuals = np.array(sizes), np.array(residuals)
    keep = residuals >= NOISE_FLOOR
    if np.count_nonzero(keep) < 2:
        raise ResidualBelowNoise(f"Only {np.count_nonzero(keep)} residuals above {NOISE_FLOOR:g}; exponent unbounded")
    slope = loglog_slope(sizes[keep], residuals[keep])
    logger.info(f"Remainder exponent {slope:.3f} from {np.count_nonzero(keep)} of {len(sizes)} points")
    return slope


def default_gradient_grid(k: int, directions: int = 8, amplitudes: Sequence[float] = (0.01, 0.02, 0.04),
                          seed: int = 0) -> np.ndarray:
    """Bump gradients A g over unit directions g and amplitudes A, one row each."""
    if k == 1:
        units = np.array([[1.0], [-1.0]])
    elif k == 2:
        angles = 2 * np.pi * np.arange(directions) / directions
        units = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        units = np.random.default_rng(seed).standard_normal((directions, k))
        units /= np.linalg.norm(units, axis=1, keepdims=True)
    return np.array([a * g for g in units for a in amplitudes])


def grassmannian_sweep(chart: SectionChart, datum: HeteroclinicDatum, gradient_grid,
                       F_list: InvariantSubspaceCatalog) -> SweepReport:
    """
    Sweeps bump gradients and checks whether each holonomy image avoids every invariant subspace.

    E^u(r) is the graph of a_r in (x, t) coordinates and the holonomy derivative subtracts
    the corner row, so the image is the graph of a_r - D_xT^rho. Each F_a is lifted into
    E^u(p), the graph of a_p.

    Args:
        chart (SectionChart): Chart around p.
        datum (HeteroclinicDatum): Heteroclinic point.
        gradient_grid: Bump gradients, one row each; a zero row means no bump.
        F_list (InvariantSubspaceCatalog): Finite list of invariant unstable subspaces.

    Returns:
        SweepReport: Containment table, avoiding gradients and swept diameter.
    """
    if not F_list.finite:
        raise ValueError(f"Invariant subspace list is infinite: {F_list.cause_of_infinitude}")
    flow = chart.flow
    k = chart.unstable_dim
    grid = np.atleast_2d(np.asarray(gradient_grid, dtype=float))
    a_r = unstable_adjustment_gradient(flow, to_exact(datum.r))
    a_p = unstable_adjustment_gradient(flow, to_exact(np.zeros(flow.dim)))

    lifted = []
    for basis in F_list.subspaces:
        f = orthonormal_columns(chart.unstable_basis.T @ basis)
        lifted.append(np.vstack([f, a_p @ f]))

    corners, images = [], []
    contained = np.zeros((len(grid), len(lifted)), dtype=bool)
    for i, gradient in enumerate(grid):
        amplitude = float(np.linalg.norm(gradient))
        direction = gradient if amplitude > 0 else None
        bump = Bump.standard(chart, datum, direction=direction, amplitude=amplitude)
        corner = holonomy_derivative(chart, datum, bump)[k, :k]
        image = np.vstack([np.eye(k), (a_r - corner)[None, :]])
        corners.append(corner)
        images.append(image)
        for a, f in enumerate(lifted):
            contained[i, a] = max(distance_to_subspace(col, image) for col in f.T) <= CONTAINMENT_TOL

    avoiding = [i for i in range(len(grid)) if not contained[i].any()]
    diameter = max((principal_angle_distance(u, v) for u, v in itertools.combinations(images, 2)), default=0.0)
    logger.info(f"Swept {len(grid)} gradients against {len(lifted)} invariant subspaces: "
                f"{len(avoiding)} avoid all, diameter {diameter:.3g}")
    return SweepReport(gradients=grid, corners=np.array(corners).reshape(len(grid), k), contained=contained,
                       avoiding=avoiding, diameter=float(diameter), vacuous=not lifted)
