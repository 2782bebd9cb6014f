from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from models.spectral.automorphism import IntegerMatrix, characteristic_polynomial, square_free_factors
from scripts.logging_config import logger
from utils.errors import NotHyperbolic, RootCertificationError
from utils.linalg import numerical_rank, orthonormal_columns, smallest_singular_subspace

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class RootBlock:
    """
    Real root subspace of one eigenvalue (or one complex-conjugate pair).

    Complex pairs are kept as a single irreducible real block of size 2 per multiplicity,
    so everything downstream stays real.
    """
    eigenvalue: complex
    multiplicity: int
    geometric_multiplicity: int
    error_bound: float
    basis: np.ndarray

    @property
    def is_complex(self) -> bool:
        return self.eigenvalue.imag != 0.0

    @property
    def modulus(self) -> float:
        return abs(self.eigenvalue)

    @property
    def block_size(self) -> int:
        return 2 if self.is_complex else 1

    def operator(self, matrix: np.ndarray) -> np.ndarray:
        """Real polynomial in M whose kernel powers give this block's root subspace."""
        ident = np.eye(matrix.shape[0])
        lam = self.eigenvalue
        if self.is_complex:
            return matrix @ matrix - 2.0 * lam.real * matrix + abs(lam) ** 2 * ident
        return matrix - lam.real * ident


@dataclass(frozen=True, eq=False)
class SpectralData:
    matrix: IntegerMatrix
    eigenvalues: Tuple[complex, ...]
    moduli: Tuple[float, ...]
    blocks: Tuple[RootBlock, ...]
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    hyperbolic: bool
    codimension_one: bool
    complex_unstable_pair: bool
    certified_gap: float
    error_bound: float

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def stable_dim(self) -> int:
        return self.stable_basis.shape[1]

    @property
    def unstable_dim(self) -> int:
        return self.unstable_basis.shape[1]

    @property
    def stable_blocks(self) -> List[RootBlock]:
        return [b for b in self.blocks if b.modulus < 1.0]

    @property
    def unstable_blocks(self) -> List[RootBlock]:
        return [b for b in self.blocks if b.modulus > 1.0]

    @property
    def stable_modulus(self) -> float:
        """Weakest contraction: the largest modulus below 1."""
        return max(b.modulus for b in self.stable_blocks)

    @property
    def min_unstable_modulus(self) -> float:
        return min(b.modulus for b in self.unstable_blocks)

    @property
    def max_unstable_modulus(self) -> float:
        return max(b.modulus for b in self.unstable_blocks)

    @property
    def stable_matrix(self) -> np.ndarray:
        """Restriction of M to E^s in the orthonormal stable basis."""
        return self.stable_basis.T @ self.matrix.array @ self.stable_basis

    @property
    def unstable_matrix(self) -> np.ndarray:
        return self.unstable_basis.T @ self.matrix.array @ self.unstable_basis

    def split(self, vector: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Decomposes an ambient vector along E^s + E^u.

        Returns:
            Tuple[np.ndarray, np.ndarray]: Stable and unstable coordinates.
        """
        full = np.hstack([self.stable_basis, self.unstable_basis])
        coords = np.linalg.solve(full, np.asarray(vector, dtype=float))
        return coords[:self.stable_dim], coords[self.stable_dim:]


def _certified_roots(coeffs: List[int]) -> List[Tuple[complex, float]]:
    """
    Refines the roots of a square-free integer polynomial by Newton's method.

    Each root carries the a posteriori bound deg * (|f(z)| + rounding) / |f'(z)|,
    which encloses a true root for a simple root.
    """
    deg = len(coeffs) - 1
    poly = np.array(coeffs, dtype=float)
    deriv = np.polyder(poly)
    abs_poly = np.abs(poly)
    certified = []
    for z in np.roots(poly):
        z = complex(z)
        for _ in range(50):
            fz = np.polyval(poly, z)
            dfz = np.polyval(deriv, z)
            if dfz == 0:
                break
            step = fz / dfz
            z -= step
            if abs(step) <= 4 * _EPS * max(1.0, abs(z)):
                break
        fz = abs(np.polyval(poly, z))
        dfz = abs(np.polyval(deriv, z))
        rounding = 4 * deg * _EPS * np.polyval(abs_poly, abs(z))
        err = float('inf') if dfz == 0 else deg * (fz + rounding) / dfz
        if abs(z.imag) <= 10 * err:
            z = complex(z.real, 0.0)
        certified.append((z, float(err)))
    return certified


def _root_multiplicities(coeffs: List[int]) -> List[Tuple[List[int], int]]:
    # Fast path: well-separated floating roots mean the polynomial is square-free.
    roots = np.roots(np.array(coeffs, dtype=float))
    if len(roots) > 1:
        gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
        if np.min(gaps) > 1e-6 * max(1.0, float(np.max(np.abs(roots)))):
            return [(list(coeffs), 1)]
    return square_free_factors(coeffs)


def spectral_data(matrix: IntegerMatrix, tol: float = 1e-9) -> SpectralData:
    """
    Certified spectral classification of a toral automorphism.

    Args:
        matrix (IntegerMatrix): The automorphism L.
        tol (float): Required accuracy of every eigenvalue.

    Returns:
        SpectralData: Eigenvalues, root-subspace bases and hyperbolicity flags.

    Raises:
        NotHyperbolic: Some modulus lies within 10x its certified error of 1.
        RootCertificationError: Newton refinement did not reach `tol`.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    coeffs = characteristic_polynomial(matrix)
    m = matrix.array
    d = matrix.dim

    raw = []
    for factor, mult in _root_multiplicities(coeffs):
        for z, err in _certified_roots(factor):
            raw.append((z, err, mult))

    worst = max(err for _, err, _ in raw)
    if worst > tol:
        raise RootCertificationError(f"Eigenvalue error bound {worst:.3e} exceeds tolerance {tol:.3e}")

    gap = min(abs(abs(z) - 1.0) - 10.0 * err for z, err, _ in raw)
    if gap <= 0:
        raise NotHyperbolic(f"Matrix {matrix.to_list()} has an eigenvalue within certified error of the unit circle")

    blocks = []
    for z, err, mult in raw:
        if z.imag < 0:
            continue
        proto = RootBlock(z, mult, 0, err, np.zeros((d, 0)))
        op = proto.operator(m)
        size = proto.block_size
        basis = smallest_singular_subspace(np.linalg.matrix_power(op, mult), mult * size)
        geometric = (d - numerical_rank(op, rel_cutoff=1e-8)) // size
        blocks.append(RootBlock(z, mult, geometric, err, basis))
    blocks.sort(key=lambda b: (b.modulus, np.angle(b.eigenvalue)))

    eigenvalues = []
    for b in blocks:
        for _ in range(b.multiplicity):
            eigenvalues.append(b.eigenvalue)
            if b.is_complex:
                eigenvalues.append(b.eigenvalue.conjugate())
    moduli = tuple(sorted(abs(z) for z in eigenvalues))

    stable = [b.basis for b in blocks if b.modulus < 1.0]
    unstable = [b.basis for b in blocks if b.modulus > 1.0]
    stable_basis = orthonormal_columns(np.hstack(stable))
    unstable_basis = orthonormal_columns(np.hstack(unstable))
    stable_count = sum(1 for z in eigenvalues if abs(z) < 1.0)

    data = SpectralData(
        matrix=matrix,
        eigenvalues=tuple(eigenvalues),
        moduli=moduli,
        blocks=tuple(blocks),
        stable_basis=stable_basis,
        unstable_basis=unstable_basis,
        hyperbolic=True,
        codimension_one=stable_count == 1,
        complex_unstable_pair=any(b.is_complex and b.modulus > 1.0 for b in blocks),
        certified_gap=float(gap),
        error_bound=float(worst),
    )
    logger.debug(f"Spectral data for {matrix.to_list()}: moduli {moduli}, gap {gap:.3e}")
    return data
