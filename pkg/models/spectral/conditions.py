import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from models.spectral.spectrum import SpectralData
from scripts.logging_config import logger
from utils.errors import NotCodimensionOne, NotHyperbolic
from utils.linalg import orthonormal_columns, smallest_singular_subspace

INVARIANCE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralGapReport:
    mu: float
    xi_1: float
    xi_l: float
    lhs: float
    rhs: float
    satisfied: bool
    log_base: float = math.e


@dataclass(frozen=True, eq=False)
class InvariantSubspaceCatalog:
    """Invariant subspaces of M restricted to E^u, as ambient column bases."""
    finite: bool
    subspaces: Tuple[np.ndarray, ...] = ()
    cause_of_infinitude: Optional[str] = None
    residuals: Tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.subspaces)


def spectral_gap_condition(spectral: SpectralData, log_base: float = math.e) -> SpectralGapReport:
    """
    Evaluates (log mu)^2 - (log xi_l)^2 > log mu * (log xi_l - log xi_1).

    Args:
        spectral (SpectralData): Codimension-one spectral data.
        log_base (float): Base of the logarithms; `satisfied` does not depend on it.

    Returns:
        SpectralGapReport: Both sides of the inequality and the verdict.

    Raises:
        NotCodimensionOne: The stable subspace is not one-dimensional.
    """
    if not spectral.codimension_one:
        raise NotCodimensionOne(f"Stable dimension is {spectral.stable_dim}, expected 1")

    def log(v: float) -> float:
        return math.log(v) / math.log(log_base)

    mu = 1.0 / spectral.stable_modulus
    xi_1 = spectral.min_unstable_modulus
    xi_l = spectral.max_unstable_modulus
    unstable_err = sum(b.error_bound for b in spectral.unstable_blocks)
    tie = (xi_l - xi_1) <= 10.0 * unstable_err + 4 * np.finfo(float).eps * xi_l

    lhs = log(mu) ** 2 - log(xi_l) ** 2
    rhs = 0.0 if tie else log(mu) * (log(xi_l) - log(xi_1))
    return SpectralGapReport(mu=mu, xi_1=xi_1, xi_l=xi_l, lhs=lhs, rhs=rhs, satisfied=lhs > rhs, log_base=log_base)


def invariant_unstable_subspaces(spectral: SpectralData) -> InvariantSubspaceCatalog:
    """
    Lists every proper nontrivial invariant subspace of L restricted to E^u.

    A block with two or more independent eigenvectors has infinitely many invariant
    subspaces. Otherwise each root block is cyclic and contributes the chain of kernels of
    its operator powers, so the invariant subspaces are exactly the sums of one chain level
    per block.

    Args:
        spectral (SpectralData): Hyperbolic spectral data.

    Returns:
        InvariantSubspaceCatalog: Finite list, or finite=False with the cause.
    """
    if not spectral.hyperbolic:
        raise NotHyperbolic("Invariant subspace catalog needs a hyperbolic matrix")
    m = spectral.matrix.array
    blocks = spectral.unstable_blocks

    for b in blocks:
        if b.geometric_multiplicity >= 2:
            cause = (f"eigenvalue {b.eigenvalue:.6g} has {b.geometric_multiplicity} independent "
                     f"eigenvectors in E^u")
            logger.info(f"Infinitely many invariant unstable subspaces: {cause}")
            return InvariantSubspaceCatalog(finite=False, cause_of_infinitude=cause)

    chains: List[List[np.ndarray]] = []
    for b in blocks:
        op = b.operator(m)
        levels = [np.zeros((m.shape[0], 0))]
        for j in range(1, b.multiplicity):
            levels.append(smallest_singular_subspace(np.linalg.matrix_power(op, j), j * b.block_size))
        levels.append(b.basis)
        chains.append(levels)

    full = tuple(len(c) - 1 for c in chains)
    subspaces, residuals = [], []
    for choice in itertools.product(*(range(len(c)) for c in chains)):
        if all(j == 0 for j in choice) or choice == full:
            continue
        basis = orthonormal_columns(np.hstack([chains[i][j] for i, j in enumerate(choice)]))
        residual = float(np.linalg.norm(basis @ (basis.T @ (m @ basis)) - m @ basis))
        if residual > INVARIANCE_TOL:
            logger.warning(f"Invariant subspace residual {residual:.3e} exceeds {INVARIANCE_TOL}")
        subspaces.append(basis)
        residuals.append(residual)

    logger.info(f"Found {len(subspaces)} invariant unstable subspaces")
    return InvariantSubspaceCatalog(finite=True, subspaces=tuple(subspaces), residuals=tuple(residuals))
